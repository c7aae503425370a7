"""Dense linear algebra helpers: SVD, epsilon-rank, least squares, solves.

Backed by LAPACK through numpy/scipy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SVDError(RuntimeError):
    """SVD did not converge."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix is singular to working precision."""


def svd(A, compute_uv: bool = False):
    """Singular values of ``A`` in descending order, optionally with factors.

    Returns ``s`` or ``(U, s, Vt)`` with ``A = U @ diag(s) @ Vt``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.size == 0:
        k = min(A.shape)
        if compute_uv:
            return np.eye(A.shape[0], k), np.zeros(k), np.eye(k, A.shape[1])
        return np.zeros(k)
    try:
        if compute_uv:
            return np.linalg.svd(A, full_matrices=False)
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(str(exc)) from exc


def numerical_rank(A, eps: float, relative: bool = False) -> int:
    """Number of singular values above ``eps``.

    With ``relative=True`` the threshold is ``eps * sigma_max``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = svd(A)
    if s.size == 0:
        return 0
    tol = eps * s[0] if relative else eps
    return int(np.count_nonzero(s > tol))


@dataclass(frozen=True)
class Combination:
    """Least-squares combination coefficients.

    ``alpha`` minimises ``|| A.T @ alpha + b ||`` where ``A`` holds the first
    ``r`` gradient rows and ``b`` the last one.  ``deficient`` marks a
    rank-deficient ``A`` (minimum-norm solution returned).
    """

    alpha: np.ndarray
    residual: float
    deficient: bool


def least_squares_combination(J_stack) -> Combination:
    J = np.atleast_2d(np.asarray(J_stack, dtype=float))
    A, b = J[:-1], J[-1]
    r = A.shape[0]
    if r == 0:
        return Combination(np.zeros(0), float(np.linalg.norm(b)), False)
    M = A.T  # n x r
    Q, R, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(M.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.count_nonzero(diag > tol))
    if rank < r:
        alpha = np.linalg.lstsq(M, -b, rcond=None)[0]
        deficient = True
    else:
        alpha = np.empty(r)
        alpha[piv] = scipy.linalg.solve_triangular(R, Q.T @ (-b))
        deficient = False
    residual = float(np.linalg.norm(M @ alpha + b))
    return Combination(alpha, residual, deficient)


def solve_linear(A, b, rcond_min: float | None = None) -> np.ndarray:
    """Solve the square system ``A x = b``.

    Raises :class:`SingularMatrixError` when the reciprocal condition number
    is below ``rcond_min`` (default ``n * machine epsilon``).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {A.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise SingularMatrixError("non-finite entries")
    if rcond_min is None:
        rcond_min = n * np.finfo(float).eps
    s = svd(A)
    if s[0] == 0.0 or s[-1] / s[0] < rcond_min:
        raise SingularMatrixError(f"matrix singular to working precision (rcond={s[-1] / s[0] if s[0] else 0.0:.3g})")
    return scipy.linalg.solve(A, b)


def select_independent_rows(
    J,
    eps: float,
    order=None,
    count: int | None = None,
    relative: bool = False,
) -> list[int]:
    """Greedy first-fit choice of rows that raise the epsilon-rank.

    Rows are visited in ``order``; a row is kept when it increases the
    numerical rank of the kept set.  When ``count`` exceeds what first-fit
    reaches, the remainder is filled by column-pivoted QR on the projected
    residual rows (largest residual first, ties by visiting order).
    """
    J = np.asarray(J, dtype=float)
    m = J.shape[0]
    order = list(range(m)) if order is None else list(order)
    chosen: list[int] = []
    rank = 0
    target = count if count is not None else m
    for i in order:
        if len(chosen) >= target:
            break
        trial = chosen + [i]
        r = numerical_rank(J[trial], eps, relative=relative)
        if r > rank:
            chosen.append(i)
            rank = r
    if count is not None and len(chosen) < count:
        rest = [i for i in order if i not in chosen]
        while len(chosen) < count and rest:
            if chosen:
                Q, _ = np.linalg.qr(J[chosen].T)
                resid = J[rest] - (J[rest] @ Q) @ Q.T
            else:
                resid = J[rest]
            norms = np.linalg.norm(resid, axis=1)
            k = int(np.argmax(norms))
            chosen.append(rest.pop(k))
    return chosen


def select_full_rank_rows(
    J,
    eps: float,
    count: int,
    order=None,
    relative: bool = False,
    max_subsets: int = 5000,
) -> list[int]:
    """``count`` rows with epsilon-rank ``count``, preferring visiting order.

    The first-fit choice of :func:`select_independent_rows` is kept when it
    reaches full rank.  Otherwise subsets are scanned in visiting order when
    there are at most ``max_subsets`` of them, then the rows picked by
    column-pivoted QR of ``J.T`` are tried.  If no candidate has full rank
    the one with the largest smallest singular value is returned.
    """
    J = np.asarray(J, dtype=float)
    order = list(range(J.shape[0])) if order is None else list(order)
    if count == 0:
        return []

    def full(rows) -> bool:
        return numerical_rank(J[list(rows)], eps, relative=relative) == count

    def smallest(rows) -> float:
        return float(svd(J[list(rows)])[-1])

    greedy = select_independent_rows(J, eps, order=order, count=count, relative=relative)
    if len(greedy) < count or full(greedy):
        return greedy
    candidates = [greedy]
    if math.comb(len(order), count) <= max_subsets:
        for rows in itertools.combinations(order, count):
            if full(rows):
                return list(rows)
    _, _, piv = scipy.linalg.qr(J[order].T, pivoting=True)
    pivoted = sorted((order[i] for i in piv[:count]), key=order.index)
    if full(pivoted):
        return pivoted
    candidates.append(pivoted)
    return max(candidates, key=smallest)
