"""Theta-regularity of polynomials at approximate zeros."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .polycore import Monomial, Polynomial, diff_functional, evaluate, partial, taylor_coefficients


class Regularity(enum.Enum):
    THETA_REGULAR = "theta-regular"
    THETA_SINGULAR = "theta-singular"
    NON_VANISHING = "non-vanishing"


@dataclass(frozen=True)
class RegularityVerdict:
    kind: Regularity
    witness: int  # index of the largest gradient entry
    value: float  # |f(p)|
    gradient_max: float
    theta: float

    @property
    def regular(self) -> bool:
        return self.kind is Regularity.THETA_REGULAR


class HarvestError(RuntimeError):
    """No theta-regular derivative was found.

    ``hint`` is ``"lower"`` when theta exceeds every useful Taylor
    coefficient and ``"raise"`` when ``|f(p)|`` itself is not below theta.
    """

    def __init__(self, message: str, hint: str = "lower"):
        super().__init__(message)
        self.hint = hint


def classify(f: Polynomial, p, theta: float) -> RegularityVerdict:
    """Classify ``f`` at ``p`` against tolerance ``theta``.

    Non-vanishing when ``|f(p)| >= theta``; otherwise theta-singular when
    every partial derivative is below ``theta`` in magnitude, else
    theta-regular.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    value = abs(evaluate(f, p))
    grad = np.array([abs(evaluate(partial(f, i), p)) for i in range(f.nvars)])
    witness = int(np.argmax(grad)) if grad.size else 0
    gmax = float(grad[witness]) if grad.size else 0.0
    if value >= theta:
        kind = Regularity.NON_VANISHING
    elif gmax < theta:
        kind = Regularity.THETA_SINGULAR
    else:
        kind = Regularity.THETA_REGULAR
    return RegularityVerdict(kind, witness, value, gmax, theta)


def harvest_regular_derivatives(f: Polynomial, p, theta: float) -> list[tuple[Monomial, Polynomial]]:
    """Lowest-order theta-regular derivatives ``d^gamma f`` at ``p``.

    If ``f`` is already theta-regular the result is ``[(0, f)]``.  Otherwise
    the Taylor expansion at ``p`` is scanned for the smallest total order
    ``d`` carrying a coefficient of magnitude at least ``theta``; each such
    monomial ``gamma`` contributes ``d^(gamma - e_i) f`` for every ``i`` with
    ``gamma_i > 0``.  Candidates are kept only if they classify as
    theta-regular, and duplicates are dropped.

    Raises :class:`HarvestError` when nothing qualifies.
    """
    if f.is_zero:
        raise ValueError("cannot harvest derivatives of the zero polynomial")
    verdict = classify(f, p, theta)
    zero = (0,) * f.nvars
    if verdict.kind is Regularity.THETA_REGULAR:
        return [(zero, f)]
    if verdict.kind is Regularity.NON_VANISHING:
        raise HarvestError(f"|f(p)| = {verdict.value:.3g} is not below theta = {theta:.3g}", hint="raise")
    coeffs = taylor_coefficients(f, p)
    big = [(m, c) for m, c in coeffs.items() if abs(c) >= theta and sum(m) > 0]
    if not big:
        raise HarvestError(f"no Taylor coefficient reaches theta = {theta:.3g}; lower theta")
    d = min(sum(m) for m, _ in big)
    # descending graded-lex: derivatives in the first variables come first
    big.sort(key=lambda mc: mc[0], reverse=True)
    out: list[tuple[Monomial, Polynomial]] = []
    seen: set[Polynomial] = set()
    for gamma, _ in big:
        if sum(gamma) != d:
            continue
        for i, g in enumerate(gamma):
            if g == 0:
                continue
            lowered = gamma[:i] + (g - 1,) + gamma[i + 1:]
            cand = diff_functional(f, lowered)
            if cand in seen or cand.is_zero:
                continue
            if classify(cand, p, theta).kind is Regularity.THETA_REGULAR:
                seen.add(cand)
                out.append((lowered, cand))
    if not out:
        raise HarvestError(f"no order-{d - 1} derivative is theta-regular at theta = {theta:.3g}")
    return out


def theta_heuristic(f: Polynomial, a: int) -> float:
    """Tolerance from the spread of |coefficients| and ``a`` trusted digits."""
    if f.is_zero:
        raise ValueError("theta heuristic undefined for the zero polynomial")
    mags = [abs(c) for _, c in f.items()]
    M, m = max(mags), min(mags)
    if m / M <= 10.0 ** (-a):
        return (m + M) / (2 * M)
    return (m + M) / (2 * M * 10.0**a)
