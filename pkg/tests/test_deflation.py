import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singzero.corpus import generate_random_power_system, load_case, random_power_suite
from singzero.deflation import (
    DeflationError,
    cdss,
    combine_and_differentiate,
    initial_state,
    rank_guess_pipeline,
    select_full_rank_subset,
)
from singzero.numkit import numerical_rank
from singzero.polycore import Polynomial, partial
from singzero.textio import parse_system


def test_dz2_deflates_without_new_variables():
    c = load_case("dz2")
    D = cdss(c.system, c.approx_zero, 0.005, 0.005)
    x1, x2, x3 = Polynomial.generators(c.system.variables)
    assert D.size == 3
    assert D.n_alpha == 0
    assert set(D.system.polys) == {4 * x1, x2, c.system[2]}
    assert D.poly_count == 5


def test_four_variable_example_adds_three_alphas():
    c = load_case("ex6")
    D = cdss(c.system, c.approx_zero, c.theta, c.eps)
    assert D.size == 7 and D.n_alpha == 3
    assert np.allclose(D.point[4:], [-1.000006509, -0.9997557989, 0.000106178711], atol=1e-6)
    names = D.variables
    g4 = parse_system(
        f"vars: {', '.join(names)}\n4 + 4*alpha1 - 4*alpha2 + 4*alpha3 + 4*alpha2*x1 - 2*alpha3*x1"
    )[0]
    assert g4 in D.system.polys
    assert numerical_rank(D.system.jacobian(D.point), c.eps) == 7


def test_two_round_example_alphas():
    c = load_case("ex3")
    D = cdss(c.system, c.approx_zero, c.theta, c.eps)
    assert D.rounds == 2 and D.size == 5
    assert D.point[2] == pytest.approx(-0.9984909264232, abs=1e-10)
    assert D.point[3] == pytest.approx(1.9985955412653, abs=1e-10)
    assert D.point[4] == pytest.approx(1.0014510032456, abs=1e-10)
    expected = Polynomial.variable("alpha3", D.variables) * (2 * Polynomial.variable("x", D.variables) + 1) - 1
    assert expected in D.system.polys
    # (0, 0, -1, 2, 1) is a simple zero of the deflated system
    assert np.allclose(D.system.evaluate([0, 0, -1, 2, 1]), 0)


def test_combination_derivative_in_alpha():
    c = load_case("ex3")
    state = initial_state(c.system, c.approx_zero)
    state.active = [0, 1]
    alpha, appended, state = combine_and_differentiate([0], 1, state)
    assert alpha[0] == pytest.approx(-0.9984909264232, abs=1e-10)
    assert len(appended) == 2
    # the original state is untouched by the combination
    assert len(initial_state(c.system, c.approx_zero).variables) == 2
    assert state.variables == ("x", "y", "alpha1")


def test_select_full_rank_subset_first_fit():
    c = load_case("ex6")
    f1, f2, f3, f4 = c.system
    H = [f1, f2, partial(f3, 3), f4]
    assert select_full_rank_subset(H, c.approx_zero, 0.005, 3) == [0, 1, 2]
    assert select_full_rank_subset(H, c.approx_zero, 0.005, 0) == []


def test_provenance_reaches_inputs():
    for name in ("dz2", "ex3", "ex6"):
        c = load_case(name)
        D = cdss(c.system, c.approx_zero, c.theta, c.eps)
        assert D.roots_reach_inputs()
        for k in range(D.size):
            lines = D.provenance(k)
            assert lines and any("input" in line for line in lines)


def test_degree_bound_on_examples():
    for name in ("dz1", "dz2", "ex3", "ex6"):
        c = load_case(name)
        D = cdss(c.system, c.approx_zero, c.theta, c.eps)
        assert D.system.degree_in(c.system.variables) <= c.system.total_degree()


def test_alphas_enter_linearly():
    c = load_case("ex6")
    D = cdss(c.system, c.approx_zero, c.theta, c.eps)
    alphas = D.variables[D.n_original:]
    for f in D.system:
        assert f.degree_in(alphas) <= D.rounds


def test_regular_system_is_fixed_point():
    S = parse_system("x^2 + y - 3\nx - y + 1")
    D = cdss(S, [1.0001, 2.0001], 0.01, 0.005)
    assert D.rounds == 0 and D.n_alpha == 0
    assert set(D.system.polys) == set(S.polys)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_cdss_idempotent_on_random_regular(seed):
    n = 2 + seed % 3
    case = generate_random_power_system(n, [1] * n, seed=seed)
    D = cdss(case.system, case.approx_zero, theta=0.005)
    assert D.rounds == 0 and D.n_alpha == 0
    assert set(D.system.polys) == set(case.system.polys)


def test_rank_guess_finds_exact_branch():
    c = load_case("ex10")
    D = rank_guess_pipeline(c.system, c.approx_zero, 0.05, 1e-12)
    assert D.size == 3 and D.n_alpha == 1
    assert c.system[0].extend(D.variables) in D.system.polys
    assert D.point[2] == pytest.approx(-0.0571976397, abs=1e-9)


def test_rank_guess_reports_failed_branches():
    c = load_case("dz2")
    with pytest.raises(DeflationError) as exc:
        rank_guess_pipeline(c.system, c.approx_zero, 0.005, 1e-12)
    assert exc.value.trace


def test_cdss_input_checks():
    S = parse_system("x + y\nx - y")
    with pytest.raises(ValueError):
        cdss(S, [1.0, 1.0])  # not an approximate zero
    with pytest.raises(ValueError):
        cdss(parse_system("vars: x, y\nx"), [0.0, 0.0])
    with pytest.raises(ValueError):
        cdss(S, [0.0, 0.0], theta=-1.0)


def test_cdss_round_cap_hints_raise():
    c = load_case("ex3")
    with pytest.raises(DeflationError) as exc:
        cdss(c.system, c.approx_zero, c.theta, c.eps, max_rounds=1)
    assert exc.value.theta_hint == "raise"


def test_harvest_failure_everywhere():
    S = parse_system("0.001*x^2\n0.001*y^2")
    with pytest.raises(DeflationError) as exc:
        cdss(S, [0.0, 0.0], theta=0.5)
    assert exc.value.theta_hint == "lower"


def test_cdss_output_is_full_rank_on_random_cases():
    for case in random_power_suite(12):
        try:
            D = cdss(case.system, case.approx_zero, 7.5e-4)
        except DeflationError:
            continue
        assert numerical_rank(D.system.jacobian(D.point), 0.005) == D.size
