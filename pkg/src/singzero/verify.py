"""Verified inclusion of a simple zero by a Krawczyk test with epsilon-inflation.

The residual form is used: with ``R`` an approximate inverse of ``J(xs)``,

    K(Y) = -R S(xs) + (I - R J(xs + Y)) Y

and ``K(Y)`` strictly inside ``Y`` proves a unique zero of ``S`` in
``xs + Y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from typing import Sequence

import numpy as np

from .interval import Interval
from .numkit import SingularMatrixError, solve_linear
from .polycore import Polynomial, PolySystem

IntervalVector = list[Interval]
IntervalMatrix = list[list[Interval]]


class VerificationFailed(RuntimeError):
    """The Krawczyk test did not succeed; the cause is in the message."""


@dataclass(frozen=True)
class VerifiedInclusion:
    """Box proven to contain exactly one zero of a square system."""

    box: tuple[Interval, ...]
    variables: tuple[str, ...]
    unique: bool
    inflations: int
    center: np.ndarray
    certificate: tuple[Interval, ...]  # K(Y), strictly inside the final Y

    @property
    def breadth(self) -> float:
        return max((iv.width for iv in self.box), default=0.0)

    def project(self, k: int) -> tuple[Interval, ...]:
        return self.box[:k]

    def contains(self, point) -> bool:
        return all(iv.contains(float(v)) for iv, v in zip(self.box, point))

    def lines(self) -> list[str]:
        return [f"{v} in {format_interval(iv)}" for v, iv in zip(self.variables, self.box)]


def interval_eval(f: Polynomial, box: Sequence) -> Interval:
    """Natural interval extension of ``f`` over ``box``."""
    box = [Interval.coerce(b) for b in box]
    if len(box) != f.nvars:
        raise ValueError(f"box has dimension {len(box)}, polynomial has {f.nvars} variables")
    acc = Interval(0.0)
    for mono, c in f.items():
        term = Interval(c)
        for iv, e in zip(box, mono):
            if e:
                term = term * (iv**e)
        acc = acc + term
    return acc


def interval_jacobian(S: PolySystem, box: Sequence) -> IntervalMatrix:
    return [[interval_eval(d, box) for d in row] for row in S.jacobian_polys()]


def _matvec(R: np.ndarray, v: Sequence[Interval]) -> IntervalVector:
    n = R.shape[0]
    out = []
    for i in range(n):
        acc = Interval(0.0)
        for j, x in enumerate(v):
            acc = acc + x * float(R[i, j])
        out.append(acc)
    return out


def krawczyk_verify(
    S: PolySystem,
    p,
    *,
    max_inflations: int = 15,
    factor: float = 1.1,
    eta: float = 1e-300,
) -> VerifiedInclusion:
    """Verify a unique zero of the square system ``S`` near ``p``.

    Raises
    ------
    VerificationFailed
        Singular Jacobian at ``p`` or containment not reached after
        ``max_inflations`` inflation steps.
    """
    if not S.is_square:
        raise ValueError("verification needs a square system")
    xs = np.asarray(p, dtype=float).reshape(-1)
    n = S.nvars
    if xs.shape[0] != n:
        raise ValueError(f"point has dimension {xs.shape[0]}, system has {n} variables")
    if not np.all(np.isfinite(xs)):
        raise VerificationFailed("non-finite point")
    try:
        R = solve_linear(S.jacobian(xs), np.eye(n))
    except SingularMatrixError as exc:
        raise VerificationFailed(f"singular Jacobian at the approximate zero: {exc}") from exc
    if not np.all(np.isfinite(R)):
        raise VerificationFailed("approximate inverse has non-finite entries")

    point_box = [Interval(v) for v in xs]
    residual = [interval_eval(f, point_box) for f in S]
    Z = [-z for z in _matvec(R, residual)]
    X = list(Z)
    for k in range(1, max_inflations + 1):
        Y = [x.hull(0.0).inflate(factor, eta) for x in X]
        J = interval_jacobian(S, [Interval(v) + y for v, y in zip(xs, Y)])
        # C = I - R * J(xs + Y)
        C = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Interval(1.0 if i == j else 0.0)
                for m in range(n):
                    acc = acc - J[m][j] * float(R[i, m])
                row.append(acc)
            C.append(row)
        X = []
        for i in range(n):
            acc = Z[i]
            for j in range(n):
                acc = acc + C[i][j] * Y[j]
            X.append(acc)
        if all(math.isfinite(x.lo) and math.isfinite(x.hi) for x in X) and all(
            y.interior_contains(x) for x, y in zip(X, Y)
        ):
            box = tuple(Interval(v) + x for v, x in zip(xs, X))
            return VerifiedInclusion(box, S.variables, True, k, xs.copy(), tuple(X))
    raise VerificationFailed(f"no contraction after {max_inflations} inflations")


def _directed(v: float, digits: int, rounding) -> str:
    if v == 0.0:
        return "0"
    d = Context(prec=digits, rounding=rounding).plus(Decimal(v))
    if 1e-5 <= abs(v) < 1e15:
        return format(d, "f")
    return format(d, "e")


def format_interval(iv: Interval, digits: int = 15) -> str:
    """``[lo, hi]`` with outward-rounded endpoints at ``digits`` significant digits."""
    return f"[{_directed(iv.lo, digits, ROUND_FLOOR)}, {_directed(iv.hi, digits, ROUND_CEILING)}]"


def format_breadth(breadth: float) -> str:
    """Accuracy column: ``true`` for coincident endpoints, else ``e<exp>``."""
    if breadth == 0.0:
        return "true"
    return f"e{math.floor(math.log10(breadth))}"
