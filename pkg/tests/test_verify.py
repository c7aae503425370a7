import math

import numpy as np
import pytest

from singzero.corpus import load_case
from singzero.deflation import cdss
from singzero.interval import Interval
from singzero.refine import newton_refine
from singzero.textio import parse_system
from singzero.verify import (
    VerificationFailed,
    format_breadth,
    format_interval,
    interval_eval,
    krawczyk_verify,
)

# inclusion of the simple zero after deflating the four-variable example
REFERENCE_BOX = [
    (0.99999999999999, 1.00000000000001),
    (-2.00000000000001, -1.99999999999998),
    (-1.00000000000001, -0.99999999999999),
    (1.99999999999999, 2.00000000000001),
    (-1.00000000000001, -0.99999999999999),
    (-1.00000000000001, -0.99999999999999),
    (-0.00000000000001, -0.00000000000001),
]


def test_interval_eval_encloses_range():
    f = parse_system("x^2 - 2*x")[0]
    iv = interval_eval(f, [Interval(0, 2)])
    assert iv.contains(-1.0) and iv.contains(0.0)


def test_square_root_of_two():
    S = parse_system("x^2 - 2")
    inc = krawczyk_verify(S, [1.41421356])
    assert inc.contains([math.sqrt(2.0)])
    assert inc.breadth < 1e-14
    assert inc.unique


def test_linear_system():
    S = parse_system("2*x + y - 3\nx - y")
    inc = krawczyk_verify(S, [1.0, 1.0])
    assert inc.contains([1.0, 1.0])
    assert inc.breadth <= 1e-15


def test_singular_jacobian_fails():
    S = parse_system("x^2\ny")
    with pytest.raises(VerificationFailed):
        krawczyk_verify(S, [0.0, 0.0])


def test_far_point_fails():
    S = parse_system("x^2 - 2")
    with pytest.raises(VerificationFailed):
        krawczyk_verify(S, [0.1], max_inflations=2)


def test_input_checks():
    with pytest.raises(ValueError):
        krawczyk_verify(parse_system("vars: x, y\nx"), [0.0, 0.0])
    with pytest.raises(ValueError):
        krawczyk_verify(parse_system("x"), [0.0, 1.0])


def test_deflated_inclusion_matches_reference_box():
    c = load_case("ex6")
    D = cdss(c.system, c.approx_zero, c.theta, c.eps)
    p, _ = newton_refine(D.system, D.point)
    inc = krawczyk_verify(D.system, p)
    assert len(inc.box) == 7
    for iv, (lo, hi) in zip(inc.box, REFERENCE_BOX):
        assert abs(iv.lo - lo) <= 5e-14
        assert abs(iv.hi - hi) <= 5e-14
    assert inc.contains([1, -2, -1, 2, -1, -1, 0])
    assert inc.project(4) == inc.box[:4]
    assert inc.lines()[0].startswith("x1 in [")


def test_format_interval_rounds_outward():
    iv = Interval(1 / 3, 2 / 3)
    text = format_interval(iv, digits=5)
    assert text == "[0.33333, 0.66667]"
    lo, hi = (float(t) for t in text.strip("[]").split(","))
    assert lo <= iv.lo and hi >= iv.hi
    assert format_interval(Interval(0.0)) == "[0, 0]"
    assert format_interval(Interval(-1e-20, 1e-20), digits=3) == "[-1.00e-20, 1.00e-20]"


def test_format_breadth():
    assert format_breadth(0.0) == "true"
    assert format_breadth(3.2e-15) == "e-15"
    assert np.isfinite(float(format_breadth(1e-3)[1:]))
