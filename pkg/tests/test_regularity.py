import pytest

from singzero.corpus import load_case
from singzero.polycore import Polynomial
from singzero.regularity import (
    HarvestError,
    Regularity,
    classify,
    harvest_regular_derivatives,
    theta_heuristic,
)
from singzero.textio import parse_system

X1X2X3 = ("x1", "x2", "x3")


def test_classify_regular_four_variables():
    f = parse_system("vars: x1, x2, x3, x4\nx1 + 3*x3 + 4*x4 - x1^2 + x3^2 - x4^2 - x2^3")[0]
    v = classify(f, [0.001, -0.001, 0.002, -0.001], 0.01)
    assert v.kind is Regularity.THETA_REGULAR
    assert v.regular
    assert v.witness == 3
    assert v.gradient_max == pytest.approx(4.002)


def test_classify_depends_on_point_accuracy():
    f = parse_system("x^2 + 10000*y^2")[0]
    assert classify(f, [0.0006851, -0.0004368], 0.5).kind is Regularity.THETA_REGULAR
    assert classify(f, [0.000006851, -0.000004368], 0.5).kind is Regularity.THETA_SINGULAR


def test_classify_non_vanishing():
    f = parse_system("x + 1")[0]
    assert classify(f, [0.0], 0.5).kind is Regularity.NON_VANISHING


def test_classify_rejects_bad_theta():
    with pytest.raises(ValueError):
        classify(parse_system("x")[0], [0.0], 0.0)


def test_harvest_lowest_order_derivatives():
    c = load_case("dz2")
    x1, x2, x3 = Polynomial.generators(X1X2X3)
    f1, f2, f3 = c.system
    h1 = harvest_regular_derivatives(f1, c.approx_zero, 0.005)
    assert h1 == [((3, 0, 0), 4 * x1)]
    h2 = harvest_regular_derivatives(f2, c.approx_zero, 0.005)
    assert [d for _, d in h2] == [2 * x1, x2]
    assert [g for g, _ in h2] == [(1, 1, 0), (2, 0, 0)]


def test_harvest_keeps_regular_input():
    c = load_case("dz2")
    f3 = c.system[2]
    assert harvest_regular_derivatives(f3, c.approx_zero, 0.005) == [((0, 0, 0), f3)]


def test_harvest_hints():
    f = parse_system("x + 1")[0]
    with pytest.raises(HarvestError) as exc:
        harvest_regular_derivatives(f, [0.0], 0.5)
    assert exc.value.hint == "raise"
    g = parse_system("0.001*x^2")[0]
    with pytest.raises(HarvestError) as exc:
        harvest_regular_derivatives(g, [0.0], 0.5)
    assert exc.value.hint == "lower"


def test_harvest_rejects_zero():
    with pytest.raises(ValueError):
        harvest_regular_derivatives(Polynomial(("x",)), [0.0], 0.1)


def test_theta_heuristic_values():
    wide = Polynomial(("x",), {(1,): 1.0, (2,): 1e-4})
    assert theta_heuristic(wide, 4) == pytest.approx(0.50005)
    flat = Polynomial(("x",), {(1,): 2.0, (2,): 2.0})
    assert theta_heuristic(flat, 3) == pytest.approx(1e-3)
    assert theta_heuristic(flat, 0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        theta_heuristic(Polynomial(("x",)), 4)
