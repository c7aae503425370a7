import numpy as np
import pytest

from singzero.corpus import load_case
from singzero.deflation import cdss
from singzero.polycore import PolySystem
from singzero.refine import (
    Convergence,
    IterationTrace,
    Verdict,
    _geometric_fit,
    adaptive_refine,
    classify_convergence,
    diagnose,
    format_max_err,
    is_machine_zero,
    is_regular_at,
    max_err,
    newton_refine,
    residual_delta,
)
from singzero.regularity import Regularity
from singzero.textio import parse_system


def test_newton_simple_root_is_quadratic():
    S = parse_system("x^2 - 2")
    p, trace = newton_refine(S, [1.5])
    assert p[0] == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert trace.converged
    assert classify_convergence(trace) is Convergence.QUADRATIC


def test_newton_double_root_is_linear_with_rate_half():
    S = parse_system("x^2")
    _, trace = newton_refine(S, [0.1])
    assert classify_convergence(trace) is Convergence.LINEAR
    rho, r2 = _geometric_fit(trace.step_norms[:10])
    assert rho == pytest.approx(0.5, abs=1e-12)
    assert r2 > 0.999


def test_newton_two_variable_iterates_halve():
    c = load_case("ex10")
    _, trace = newton_refine(c.system, c.approx_zero)
    ys = [p[1] for p in trace.iterates[:4]]
    assert ys == pytest.approx([-0.000004368, -0.0000021841948, -0.0000010920974, -0.0000005460487], abs=1e-9)
    assert classify_convergence(trace) is Convergence.LINEAR


def test_newton_requires_square_system():
    with pytest.raises(ValueError):
        newton_refine(parse_system("vars: x, y\nx + y"), [0.0, 0.0])


def test_newton_stops_on_singular_jacobian():
    S = parse_system("x^2 + y^2\nx^2 - y^2")
    _, trace = newton_refine(S, [0.0, 0.0])
    assert trace.singular
    assert classify_convergence(trace) is Convergence.STALLED


def test_classify_synthetic_traces():
    diverged = IterationTrace(
        iterates=[np.zeros(1)] * 3, residual_norms=[1.0, 1.0, float("inf")], step_norms=[1.0, float("inf")]
    )
    assert classify_convergence(diverged) is Convergence.DIVERGED
    growing = IterationTrace(
        iterates=[np.zeros(1)] * 4, residual_norms=[1.0] * 4, step_norms=[1e-3, 1.0, 10.0]
    )
    assert classify_convergence(growing) is Convergence.DIVERGED
    flat = IterationTrace(
        iterates=[np.zeros(1)] * 5, residual_norms=[1.0] * 5, step_norms=[1e-3, 1e-3, 1e-3, 1e-3]
    )
    assert classify_convergence(flat) is Convergence.STALLED
    assert classify_convergence(IterationTrace(iterates=[np.zeros(1)], residual_norms=[1.0])) is Convergence.STALLED


def test_max_err_counts_gradient_of_singular_judgements():
    f2 = parse_system("x^2 + 10000*y^2")[0]
    p = [0.53016e-16, 0.0]
    assert max_err([(f2, Regularity.THETA_SINGULAR)], p) == pytest.approx(1.060320e-16, rel=1e-6)
    assert max_err([(f2, Regularity.THETA_REGULAR)], p) == pytest.approx(2.810696256e-33, rel=1e-6)


def test_max_err_display():
    assert is_machine_zero(1e-17)
    assert format_max_err(0.0) == "0 (machine zero)"
    assert format_max_err(1.060320e-16) == "0 (machine zero)"
    assert format_max_err(2.5e-10) == "2.500000e-10"


def test_residual_delta_projects():
    S = parse_system("x - 1\ny")
    assert residual_delta(S, [1.0, 0.5, 123.0]) == 0.5


def test_diagnose_exact_dz2():
    c = load_case("dz2")
    D = cdss(c.system, c.approx_zero, c.theta, c.eps)
    p, trace = newton_refine(D.system, D.point)
    diag = diagnose(c.system, D, p, trace)
    assert diag.verdict is Verdict.EXACT
    assert diag.convergence is Convergence.QUADRATIC
    assert diag.delta < 1e-12


def test_too_large_theta_gives_perturbed_system():
    c = load_case("ex8b")
    D = cdss(c.system, c.approx_zero, 0.5, 0.05)
    p, trace = newton_refine(D.system, D.point)
    diag = diagnose(c.system, D, p, trace)
    assert diag.verdict is Verdict.PERTURBED
    perturbation = [abs(f.coefficient((0, 0))) for f in D.system if f.coefficient((0, 0))]
    assert perturbation == [pytest.approx(0.05)]


def test_adaptive_refine_recovers_exact_zero():
    c = load_case("ex8b")
    D, p, diag = adaptive_refine(c.system, c.approx_zero, 0.5, 0.05)
    assert diag.verdict is Verdict.EXACT
    assert np.allclose(p, [0.0, 0.0, -0.05], atol=1e-12)
    assert is_machine_zero(diag.max_err)
    assert diag.attempts[0].endswith("Perturbed")


def test_adaptive_refine_regular_system():
    S = parse_system("x^2 + y - 3\nx - y + 1")
    D, p, diag = adaptive_refine(S, [1.0001, 1.9999], 0.01, None)
    assert diag.exact and D.rounds == 0
    assert np.allclose(p, [1.0, 2.0], atol=1e-14)


def test_adaptive_refine_validates_retries():
    with pytest.raises(ValueError):
        adaptive_refine(PolySystem(parse_system("x").polys), [0.0], max_retries=0)


def test_wandering_trace_ending_on_zero_is_not_quadratic():
    # a singular iteration that lands exactly on the zero by accident
    steps = [1e-4, 2.5e-6, 1e-8, 8.9e-9, 0.0]
    t = IterationTrace(iterates=[np.ones(2)] * 6, residual_norms=[1e-8] * 6, step_norms=steps, converged=True)
    assert classify_convergence(t) is not Convergence.QUADRATIC
    steps = [1e-4, 2.5e-6, 1e-10, 0.0]
    t = IterationTrace(iterates=[np.ones(2)] * 5, residual_norms=[1e-8] * 5, step_norms=steps, converged=True)
    assert classify_convergence(t) is Convergence.QUADRATIC


def test_regularity_guard():
    S = parse_system("x^2 - y\ny - 1")
    assert is_regular_at(S, [1.0, 1.0])
    assert not is_regular_at(S, [0.0, 0.0])
    assert not is_regular_at(parse_system("x^2\ny"), [1e-9, 0.0])
