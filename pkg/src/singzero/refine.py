"""Newton refinement, convergence classification and tolerance diagnosis."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .deflation import (
    DEFAULT_EPS,
    DEFAULT_ZERO_DIGITS,
    DeflatedSystem,
    DeflationError,
    cdss,
    rank_guess_pipeline,
)
from .numkit import SingularMatrixError, solve_linear, svd
from .polycore import Polynomial, PolySystem, evaluate, partial
from .regularity import Regularity, theta_heuristic

log = logging.getLogger(__name__)

MACHINE_EPS = float(np.finfo(float).eps)
MACHINE_ZERO = 2.3e-16
DEFAULT_THETA_PRIME = 1e-12
# Newton converges quadratically only to regular zeros; a Jacobian whose
# smallest singular value falls below sqrt(eps) relative to the largest marks
# a singular limit reached by luck, not a deflated system.
SINGULAR_RCOND = float(np.sqrt(MACHINE_EPS))


class Convergence(enum.Enum):
    QUADRATIC = "Quadratic"
    LINEAR = "Linear"
    STALLED = "Stalled"
    DIVERGED = "Diverged"


class Verdict(enum.Enum):
    EXACT = "Exact"
    PERTURBED = "Perturbed"


@dataclass
class IterationTrace:
    """Newton iterates with residual and step norms.

    ``step_norms[k]`` is the norm of ``iterates[k + 1] - iterates[k]``.
    """

    iterates: list[np.ndarray] = field(default_factory=list)
    residual_norms: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    tol: float = 0.0
    converged: bool = False
    singular: bool = False

    def __len__(self) -> int:
        return len(self.iterates)


def newton_refine(S: PolySystem, p0, tol: float | None = None, max_iter: int = 50) -> tuple[np.ndarray, IterationTrace]:
    """Plain Newton iteration on the square system ``S``.

    Stops when a step norm falls below ``tol`` (default
    ``1e-14 * (1 + ||p0||)``) or after ``max_iter`` steps.  A singular
    Jacobian ends the iteration with ``trace.singular`` set.
    """
    p = np.asarray(p0, dtype=float).reshape(-1).copy()
    if p.shape[0] != S.nvars or not S.is_square:
        raise ValueError(f"need a square system matching the point: {len(S)}x{S.nvars} vs {p.shape[0]}")
    if tol is None:
        tol = 1e-14 * (1.0 + float(np.linalg.norm(p)))
    trace = IterationTrace(tol=tol)
    F = S.evaluate(p)
    trace.iterates.append(p.copy())
    trace.residual_norms.append(float(np.linalg.norm(F)))
    for _ in range(max_iter):
        try:
            step = solve_linear(S.jacobian(p), -F)
        except SingularMatrixError:
            trace.singular = True
            break
        p = p + step
        if not np.all(np.isfinite(p)):
            trace.iterates.append(p.copy())
            trace.residual_norms.append(float("inf"))
            trace.step_norms.append(float("inf"))
            break
        F = S.evaluate(p)
        s = float(np.linalg.norm(step))
        trace.iterates.append(p.copy())
        trace.residual_norms.append(float(np.linalg.norm(F)))
        trace.step_norms.append(s)
        if s < tol:
            trace.converged = True
            break
    return p, trace


def _geometric_fit(s: Sequence[float]) -> tuple[float, float]:
    """Rate and R^2 of a least-squares line through ``log s``."""
    y = np.log(np.asarray(s, dtype=float))
    k = np.arange(len(y), dtype=float)
    slope, intercept = np.polyfit(k, y, 1)
    fit = slope * k + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(slope)), r2


def classify_convergence(
    trace: IterationTrace,
    *,
    quadratic_ratio: float = 0.01,
    linear_range: tuple[float, float] = (0.1, 0.95),
    min_r2: float = 0.9,
) -> Convergence:
    """Rate of a Newton trace judged from step norms.

    Steps below a rounding floor ``64 * eps * (1 + ||p||)`` are treated as
    converged noise.  Quadratic: the run converged, the last three step
    ratios (including the drop to the floor) never exceed one, one of them
    is at most ``quadratic_ratio`` and the last two significant ratios do
    not increase.  Earlier steps may wander.  Linear: a geometric fit
    over at least three significant steps has rate inside ``linear_range``
    with ``R^2 > min_r2``.  Diverged: non-finite values or step growth by
    three orders of magnitude.  Everything else is Stalled.
    """
    s = list(trace.step_norms)
    if any(not np.isfinite(v) for v in s) or any(not np.isfinite(v) for v in trace.residual_norms):
        return Convergence.DIVERGED
    if not s:
        # no step taken: at an exact zero with a regular Jacobian this is converged
        if trace.residual_norms and trace.residual_norms[0] == 0.0 and not trace.singular:
            return Convergence.QUADRATIC
        return Convergence.STALLED
    scale = 1.0 + max(float(np.linalg.norm(p)) for p in trace.iterates)
    floor = 64 * MACHINE_EPS * scale
    k_sig = 0
    while k_sig < len(s) and s[k_sig] > floor:
        k_sig += 1
    sig = s[:k_sig]
    tail = s[: min(len(s), k_sig + 1)]
    converged = trace.converged or (k_sig < len(s))
    if converged and not trace.singular:
        if not sig:
            if trace.residual_norms[-1] <= floor:
                return Convergence.QUADRATIC
        else:
            ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1)][-3:]
            sig_ratios = [sig[i + 1] / sig[i] for i in range(len(sig) - 1)][-2:]
            accelerating = len(sig_ratios) < 2 or sig_ratios[1] <= sig_ratios[0]
            if ratios and all(r <= 1.0 for r in ratios) and min(ratios) <= quadratic_ratio and accelerating:
                return Convergence.QUADRATIC
    if len(sig) >= 3:
        rho, r2 = _geometric_fit(sig)
        if linear_range[0] < rho < linear_range[1] and r2 > min_r2:
            return Convergence.LINEAR
    if len(s) >= 2 and s[-1] > 1e3 * s[0]:
        return Convergence.DIVERGED
    return Convergence.STALLED


def residual_delta(F: PolySystem, p) -> float:
    """Largest input residual at ``p`` projected to the input variables."""
    x = np.asarray(p, dtype=float).reshape(-1)[: F.nvars]
    return float(np.max(np.abs(F.evaluate(x))))


def max_err(judged: Sequence[tuple[Polynomial, Regularity]], p_refined) -> float:
    """Largest Taylor coefficient that a regularity judgement assumed negligible.

    Polynomials judged theta-singular contribute their value and gradient
    at the refined zero, all other judged polynomials their value.
    """
    p = np.asarray(p_refined, dtype=float).reshape(-1)
    worst = 0.0
    for f, kind in judged:
        x = p[: f.nvars]
        worst = max(worst, abs(evaluate(f, x)))
        if kind is Regularity.THETA_SINGULAR:
            for i in range(f.nvars):
                worst = max(worst, abs(evaluate(partial(f, i), x)))
    return worst


def is_machine_zero(value: float, scale: float = 1.0) -> bool:
    return abs(value) < MACHINE_ZERO * scale


def format_max_err(value: float, scale: float = 1.0) -> str:
    if is_machine_zero(value, scale):
        return "0 (machine zero)"
    return f"{value:.6e}"


def is_regular_at(S: PolySystem, p, rcond: float = SINGULAR_RCOND) -> bool:
    """Whether the Jacobian of ``S`` at ``p`` is numerically nonsingular."""
    sv = svd(S.jacobian(np.asarray(p, dtype=float).reshape(-1)))
    return bool(sv.size and np.all(np.isfinite(sv)) and sv[-1] > rcond * sv[0])


@dataclass
class Diagnosis:
    """Outcome of one refinement with its tolerance checks."""

    convergence: Convergence
    delta: float
    max_err: float
    verdict: Verdict
    theta_prime: float
    theta: float | None = None
    path: str = "cdss"
    attempts: list[str] = field(default_factory=list)
    trace: IterationTrace | None = None

    @property
    def exact(self) -> bool:
        return self.verdict is Verdict.EXACT


def diagnose(
    F: PolySystem,
    D: DeflatedSystem,
    point,
    trace: IterationTrace,
    theta_prime: float = DEFAULT_THETA_PRIME,
) -> Diagnosis:
    conv = classify_convergence(trace)
    if conv is Convergence.QUADRATIC and not is_regular_at(D.system, point):
        conv = Convergence.STALLED
    delta = residual_delta(F, point)
    err = max_err(D.judged, point)
    exact = conv is Convergence.QUADRATIC and delta < theta_prime
    return Diagnosis(conv, delta, err, Verdict.EXACT if exact else Verdict.PERTURBED, theta_prime, trace=trace)


def adaptive_refine(
    F: PolySystem,
    p0,
    theta0: float | None = None,
    eps: float | None = DEFAULT_EPS,
    theta_prime: float = DEFAULT_THETA_PRIME,
    max_retries: int = 3,
    *,
    zero_digits: int = DEFAULT_ZERO_DIGITS,
    relative_rank: bool = False,
    multiplicity: int | None = None,
    force_rank_guess: bool = False,
    tol: float | None = None,
    max_iter: int = 50,
) -> tuple[DeflatedSystem, np.ndarray, Diagnosis]:
    """Deflate, refine and diagnose, adapting theta and falling back to rank guessing.

    Each pass runs :func:`cdss`, Newton's method and :func:`diagnose`.  A
    Perturbed pass whose Max err ``theta2`` exceeds, or comes within a factor
    100 of, the tolerance ``theta1`` in use is retried with
    ``min(theta1, theta2) / 10``.  When retries are exhausted or not
    indicated, :func:`rank_guess_pipeline` is tried.  If nothing is Exact the
    first Perturbed result is returned with every attempt logged.

    Raises
    ------
    DeflationError
        No strategy produced any square system at all.
    """
    if max_retries < 1:
        raise ValueError("max_retries must be at least 1")
    if eps is None:
        eps = DEFAULT_EPS
    attempts: list[str] = []
    fallback: tuple[DeflatedSystem, np.ndarray, Diagnosis] | None = None
    theta = theta0

    def finish(D, point, diag, path, th):
        diag.path = path
        diag.theta = th
        diag.attempts = list(attempts)
        return D, point, diag

    if not force_rank_guess:
        for attempt in range(max_retries):
            theta1 = theta if theta is not None else max(theta_heuristic(f, zero_digits) for f in F)
            try:
                D = cdss(
                    F, p0, theta, eps,
                    zero_digits=zero_digits, relative_rank=relative_rank, multiplicity=multiplicity,
                )
            except DeflationError as exc:
                attempts.append(f"cdss theta={theta1:.3g}: failed ({exc})")
                theta = theta1 * 10 if exc.theta_hint == "raise" else theta1 / 10
                continue
            point, trace = newton_refine(D.system, D.point, tol=tol, max_iter=max_iter)
            diag = diagnose(F, D, point, trace, theta_prime)
            attempts.append(
                f"cdss theta={theta1:.3g}: size {D.size}, {D.n_alpha} alpha, {diag.convergence.value}, "
                f"delta={diag.delta:.3g}, max_err={diag.max_err:.3g} -> {diag.verdict.value}"
            )
            if diag.exact:
                return finish(D, point, diag, "cdss", theta1)
            if fallback is None:
                fallback = finish(D, point, diag, "cdss", theta1)
            theta2 = diag.max_err
            if theta2 > theta1 or theta2 >= theta1 / 100:
                theta = min(theta1, theta2) / 10
                continue
            break

    try:
        D = rank_guess_pipeline(
            F, p0, eps, theta_prime, relative_rank=relative_rank, tol=tol, max_iter=max_iter
        )
    except DeflationError as exc:
        attempts.append(f"rank-guess: failed ({exc})")
    else:
        point, trace = newton_refine(D.system, D.point, tol=tol, max_iter=max_iter)
        diag = diagnose(F, D, point, trace, theta_prime)
        attempts.append(f"rank-guess: size {D.size}, {D.n_alpha} alpha -> {diag.verdict.value}")
        if diag.exact or fallback is None:
            return finish(D, point, diag, "rank-guess", None)
    if fallback is None:
        raise DeflationError("no deflation strategy produced a square system", attempts)
    D, point, diag = fallback
    diag.attempts = list(attempts)
    return D, point, diag
