"""Deflation of singular zeros by derivatives and linear combinations.

The driver :func:`cdss` grows an active polynomial set ``H`` over the
variables ``(x, alpha)`` until its Jacobian has full epsilon-rank at the
augmented approximate zero, then extracts a square subsystem.  Each round
combines one dependent member ``h`` with an independent subset ``H1`` as
``g = h + sum(alpha_j * h_j)`` using fresh unknowns ``alpha_j`` and appends
the partial derivatives of ``g`` with respect to every current variable.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numkit import least_squares_combination, numerical_rank, select_full_rank_rows, select_independent_rows
from .polycore import Monomial, Polynomial, PolySystem, gradient_at, jacobian_at
from .regularity import (
    HarvestError,
    Regularity,
    classify,
    harvest_regular_derivatives,
    theta_heuristic,
)

log = logging.getLogger(__name__)

DEFAULT_EPS = 0.005
DEFAULT_ZERO_DIGITS = 4
DEFAULT_MAX_ROUNDS = 32
DEFAULT_MAX_VARIABLES = 64


class DeflationError(RuntimeError):
    """Deflation could not produce a square full-rank system."""

    def __init__(self, message: str, trace: list | None = None, theta_hint: str | None = None):
        super().__init__(message)
        self.trace = trace or []
        self.theta_hint = theta_hint


@dataclass(frozen=True)
class Provenance:
    """How a polynomial was obtained from earlier ones.

    ``kind`` is one of ``input``, ``derivative`` (``d^gamma`` of ``parent``),
    ``combination`` (``parent + sum alpha_j * combined_j``) or
    ``combination-derivative`` (partial of ``parent`` in ``variable``).
    """

    kind: str
    parent: int | None = None
    gamma: Monomial | None = None
    combined: tuple[int, ...] = ()
    alphas: tuple[str, ...] = ()
    variable: str | None = None
    index: int | None = None  # input position for kind == "input"

    def describe(self) -> str:
        if self.kind == "input":
            return f"input f{self.index + 1}"
        if self.kind == "derivative":
            return f"d^{list(self.gamma)} of #{self.parent}"
        if self.kind == "combination":
            terms = " + ".join(f"{a}*#{c}" for a, c in zip(self.alphas, self.combined))
            return f"#{self.parent}" + (f" + {terms}" if terms else "")
        return f"d/d{self.variable} of #{self.parent}"


@dataclass(frozen=True)
class Node:
    id: int
    poly: Polynomial
    provenance: Provenance
    round: int


@dataclass
class DeflationState:
    """Evolving augmented system during deflation."""

    variables: tuple[str, ...]
    n_original: int
    point: np.ndarray
    nodes: list[Node]
    active: list[int]
    polys: dict[int, Polynomial]  # active members over ``variables``
    round: int = 0
    judged: list[tuple[int, Regularity]] = field(default_factory=list)
    last_g: list[int] = field(default_factory=list)
    last_h1: list[int] = field(default_factory=list)
    log: list[str] = field(default_factory=list)
    # Jacobian rows at ``point``; earlier coordinates never move and older
    # polynomials do not involve newer alphas, so rows only need zero padding
    rows: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def alpha_names(self) -> tuple[str, ...]:
        return self.variables[self.n_original:]

    def active_polys(self) -> list[Polynomial]:
        return [self.polys[i] for i in self.active]

    def row(self, i: int) -> np.ndarray:
        k = len(self.variables)
        r = self.rows.get(i)
        if r is None:
            r = gradient_at(self.polys[i].extend(self.variables), self.point)
            self.rows[i] = r
        elif r.shape[0] < k:
            r = np.concatenate([r, np.zeros(k - r.shape[0])])
            self.rows[i] = r
        return r

    def jacobian(self, ids: Sequence[int] | None = None) -> np.ndarray:
        ids = self.active if ids is None else ids
        if not ids:
            return np.zeros((0, len(self.variables)))
        return np.array([self.row(i) for i in ids])

    def add_node(self, poly: Polynomial, prov: Provenance) -> Node:
        node = Node(len(self.nodes), poly, prov, self.round)
        self.nodes.append(node)
        return node

    def copy(self) -> "DeflationState":
        new = copy.copy(self)
        new.nodes = list(self.nodes)
        new.active = list(self.active)
        new.polys = dict(self.polys)
        new.judged = list(self.judged)
        new.last_g = list(self.last_g)
        new.last_h1 = list(self.last_h1)
        new.log = list(self.log)
        new.rows = dict(self.rows)
        new.point = self.point.copy()
        return new


@dataclass
class DeflatedSystem:
    """Square system over ``(x, alpha)`` with an approximate regular zero."""

    system: PolySystem
    point: np.ndarray
    n_original: int
    rounds: int
    member_ids: list[int]
    nodes: list[Node]
    inputs: PolySystem
    judged: list[tuple[Polynomial, Regularity]]
    log: list[str] = field(default_factory=list)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.system.variables

    @property
    def n_alpha(self) -> int:
        return len(self.variables) - self.n_original

    @property
    def size(self) -> int:
        return len(self.system)

    @property
    def poly_count(self) -> int:
        """Square size plus input polynomials absent from the square system."""
        members = set(self.system.polys)
        missing = sum(1 for f in self.inputs if f.extend(self.variables) not in members)
        return self.size + missing

    def provenance(self, member: int) -> list[str]:
        """Lines describing how square-system member ``member`` was derived."""
        lines = []
        stack = [self.member_ids[member]]
        seen = set()
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            node = self.nodes[nid]
            lines.append(f"#{nid}: {node.provenance.describe()}")
            prov = node.provenance
            if prov.parent is not None:
                stack.append(prov.parent)
            stack.extend(prov.combined)
        return lines

    def roots_reach_inputs(self) -> bool:
        """Every member's derivation tree bottoms out at input polynomials."""
        for nid in self.member_ids:
            stack = [nid]
            while stack:
                node = self.nodes[stack.pop()]
                prov = node.provenance
                if prov.kind == "input":
                    continue
                if prov.parent is None or prov.parent >= node.id:
                    return False
                if any(c >= node.id for c in prov.combined):
                    return False
                stack.append(prov.parent)
                stack.extend(prov.combined)
        return True

    def trace_lines(self) -> list[str]:
        return [f"#{n.id} [round {n.round}] {n.provenance.describe()}: {n.poly}" for n in self.nodes]


def _fresh_alpha_names(existing: Sequence[str], count: int) -> list[str]:
    taken = set(existing)
    names = []
    k = sum(1 for v in existing if v.startswith("alpha"))
    while len(names) < count:
        k += 1
        name = f"alpha{k}"
        while name in taken:
            name += "_"
        taken.add(name)
        names.append(name)
    return names


def initial_state(F: PolySystem, p) -> DeflationState:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != F.nvars:
        raise ValueError(f"point has dimension {p.shape[0]}, system has {F.nvars} variables")
    state = DeflationState(F.variables, F.nvars, p.copy(), [], [], {})
    for i, f in enumerate(F):
        node = state.add_node(f, Provenance("input", index=i))
        state.polys[node.id] = f
    return state


def select_full_rank_subset(H: Sequence[Polynomial], p, eps: float, r: int, relative: bool = False) -> list[int]:
    """Indices of ``r`` members of ``H`` whose Jacobian rows have epsilon-rank ``r``.

    First-fit in list order; list order is provenance order, so original and
    harvested polynomials are preferred over combination derivatives.
    """
    if r == 0:
        return []
    J = jacobian_at(list(H), p)
    return select_full_rank_rows(J, eps, r, relative=relative)


def combine_and_differentiate(
    H1: Sequence[int], h: int, state: DeflationState
) -> tuple[np.ndarray, list[int], DeflationState]:
    """Form ``g = h + sum alpha_j * h_j`` and append its partial derivatives.

    Returns the least-squares initial values of the new alphas, the node ids
    of the appended derivatives and the new state (``state`` is untouched).
    """
    new = state.copy()
    new.round += 1
    old_vars = state.variables
    alphas = _fresh_alpha_names(old_vars, len(H1))
    variables = old_vars + tuple(alphas)

    J_stack = state.jacobian(list(H1) + [h])
    comb = least_squares_combination(J_stack)
    if comb.deficient:
        new.log.append(f"round {new.round}: rank-deficient least squares, minimum-norm alpha used")

    g = state.polys[h].extend(variables)
    for a, j in zip(alphas, H1):
        g = g + Polynomial.variable(a, variables) * state.polys[j].extend(variables)
    gnode = new.add_node(g, Provenance("combination", parent=h, combined=tuple(H1), alphas=tuple(alphas)))

    new.variables = variables
    new.polys = {i: f.extend(variables) for i, f in new.polys.items()}
    new.point = np.concatenate([state.point, comb.alpha])
    new.judged.append((gnode.id, Regularity.THETA_SINGULAR))

    existing = set(new.polys[i] for i in new.active)
    appended = []
    for k, v in enumerate(old_vars):
        dg = g.partial(k)
        if dg.is_zero or dg in existing:
            continue
        node = new.add_node(dg, Provenance("combination-derivative", parent=gnode.id, variable=v))
        new.polys[node.id] = dg
        new.active.append(node.id)
        existing.add(dg)
        appended.append(node.id)
    new.last_g = appended
    new.last_h1 = list(H1)
    new.log.append(
        f"round {new.round}: g = #{h} + combination of {list(H1)}, "
        f"alpha0 = {np.array2string(comb.alpha, precision=10)}"
    )
    return comb.alpha, appended, new


def _rank(state: DeflationState, eps: float, relative: bool) -> int:
    return numerical_rank(state.jacobian(), eps, relative=relative) if state.active else 0


def _harvest(state: DeflationState, F: PolySystem, theta, zero_digits: int) -> None:
    harvested: list[int] = []
    seen: dict[Polynomial, int] = {}
    failures = 0
    hints = set()
    for i, f in enumerate(F):
        th = theta if theta is not None else theta_heuristic(f, zero_digits)
        verdict = classify(f, state.point, th)
        state.judged.append((i, verdict.kind))
        try:
            derivs = harvest_regular_derivatives(f, state.point, th)
        except HarvestError as exc:
            failures += 1
            hints.add(exc.hint)
            state.log.append(f"harvest f{i + 1}: {exc}")
            continue
        for gamma, d in derivs:
            if sum(gamma) == 0:
                nid = i
            elif d in seen:
                continue
            else:
                node = state.add_node(d, Provenance("derivative", parent=i, gamma=gamma))
                state.polys[node.id] = d
                state.judged.append((node.id, Regularity.THETA_REGULAR))
                nid = node.id
            if nid not in harvested:
                harvested.append(nid)
                seen[d] = nid
        state.log.append(
            f"harvest f{i + 1} (theta={th:.3g}, {verdict.kind.value}): "
            + ", ".join(str(d) for _, d in derivs)
        )
    if failures == len(F):
        hint = "raise" if "raise" in hints else "lower"
        advice = "a larger theta (the point is not accurate enough for it)" if hint == "raise" else "a smaller theta"
        raise DeflationError(f"harvest exhausted for every input; try {advice}", state.log, theta_hint=hint)
    state.active = harvested + [i for i in range(len(F)) if i not in harvested]


def extract_square_system(state: DeflationState, eps: float, inputs: PolySystem, relative: bool = False) -> DeflatedSystem:
    """Pick ``|variables|`` active members with full-rank Jacobian.

    Preference: derivatives appended in the latest round, then the latest
    independent subset, then the remaining members in provenance order.
    """
    return _package(state, _square_ids(state, eps, relative), inputs)


def _square_ids(state: DeflationState, eps: float, relative: bool) -> list[int]:
    k = len(state.variables)
    first = [i for i in state.last_g if i in state.active]
    second = [i for i in state.last_h1 if i in state.active and i not in first]
    order_ids = first + second + [i for i in state.active if i not in first and i not in second]
    rows = select_full_rank_rows(state.jacobian(order_ids), eps, k, relative=relative)
    return [order_ids[r] for r in rows]


def _effective_rank(state: DeflationState, eps: float, relative: bool) -> int:
    """Stacked epsilon-rank, capped by the rank of the square extraction.

    Epsilon-rank does not pass to subsets: the stacked Jacobian can reach
    full rank while every square selection stays deficient.  Deflation then
    continues, so the returned square system is full rank.
    """
    r = _rank(state, eps, relative)
    k = len(state.variables)
    if r < k:
        return r
    return numerical_rank(state.jacobian(_square_ids(state, eps, relative)), eps, relative=relative)


def _package(state: DeflationState, ids: list[int], inputs: PolySystem) -> DeflatedSystem:
    variables = state.variables
    polys = [state.polys[i] for i in ids]
    judged = [(state.nodes[i].poly.extend(variables), kind) for i, kind in state.judged]
    return DeflatedSystem(
        system=PolySystem(polys, variables),
        point=state.point.copy(),
        n_original=state.n_original,
        rounds=state.round,
        member_ids=ids,
        nodes=list(state.nodes),
        inputs=inputs,
        judged=judged,
        log=list(state.log),
    )


def cdss(
    F: PolySystem,
    p,
    theta: float | None = None,
    eps: float = DEFAULT_EPS,
    *,
    zero_digits: int = DEFAULT_ZERO_DIGITS,
    relative_rank: bool = False,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    multiplicity: int | None = None,
    residual_bound: float = 1e-2,
    accept: str = "deficiency",
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> DeflatedSystem:
    """Compute a deflated square system for ``F`` near the approximate zero ``p``.

    Parameters
    ----------
    F : PolySystem
        Square input system.
    p : array_like
        Approximate singular zero.
    theta : float, optional
        Regularity tolerance; ``None`` picks :func:`theta_heuristic` per
        polynomial with ``zero_digits`` trusted digits.
    eps : float
        Singular value threshold for numerical rank.
    multiplicity : int, optional
        Known multiplicity; enables the ``2**mu * n`` variable-count cap.

    Raises
    ------
    DeflationError
        Round or size cap exceeded, or no theta-regular derivative found.
    """
    if not F.is_square:
        raise ValueError(f"system is not square: {len(F)} equations, {F.nvars} variables")
    if theta is not None and theta <= 0:
        raise ValueError("theta must be positive")
    state = initial_state(F, p)
    res = float(np.max(np.abs(F.evaluate(state.point))))
    if res > residual_bound:
        raise ValueError(f"point is not an approximate zero: max residual {res:.3g} > {residual_bound:.3g}")
    _harvest(state, F, theta, zero_digits)

    var_cap = None
    if multiplicity is not None and multiplicity < 60:
        var_cap = (2**multiplicity) * F.nvars
    while True:
        k = len(state.variables)
        r = _effective_rank(state, eps, relative_rank)
        if r == k:
            break
        if state.round >= max_rounds:
            raise DeflationError(f"round cap {max_rounds} exceeded (rank {r} of {k})", state.log, theta_hint="raise")
        deficiency = k - r
        ids = state.active
        H1 = [ids[i] for i in select_full_rank_rows(state.jacobian(), eps, r, relative=relative_rank)]
        candidates = [i for i in ids if i not in H1]
        if not candidates:
            raise DeflationError(f"no candidate outside the independent subset (rank {r} of {k})", state.log)
        limit = min(max_variables, var_cap) if var_cap is not None else max_variables
        if k + r > limit:
            raise DeflationError(f"next round would use {k + r} variables, above the cap {limit}", state.log, theta_hint="raise")
        chosen = None
        for h in candidates:
            _, _, trial = combine_and_differentiate(H1, h, state)
            new_rank = _effective_rank(trial, eps, relative_rank)
            new_def = len(trial.variables) - new_rank
            if (new_def < deficiency) if accept == "deficiency" else (new_rank > r):
                chosen = trial
                break
            trial.log.append(f"round {trial.round}: candidate #{h} left rank {new_rank} of {len(trial.variables)}")
            chosen = trial
        state = chosen
    return extract_square_system(state, eps, F, relative_rank)


def rank_guess_pipeline(
    F: PolySystem,
    p,
    eps: float = DEFAULT_EPS,
    theta_prime: float = 1e-12,
    *,
    relative_rank: bool = False,
    max_depth: int = 4,
    max_branches: int = 200,
    max_variables: int = 32,
    tol: float | None = None,
    max_iter: int = 50,
) -> DeflatedSystem:
    """Deflation by descending rank guesses, without theta-harvesting.

    Every guess ``r`` for the epsilon-rank is tried from the largest down.
    A full-rank guess extracts a square system, refines it by Newton's
    method and accepts it when the iteration converges quadratically and the
    input residual at the projected zero is below ``theta_prime``.  Smaller
    guesses combine each candidate with an ``r``-member independent subset
    and recurse.  The first accepted branch in this deterministic order wins.
    Branches deeper than ``max_depth`` rounds or wider than ``max_variables``
    are not explored.

    Raises
    ------
    DeflationError
        Every branch failed; ``trace`` holds one line per branch.
    """
    from .refine import Convergence, classify_convergence, is_regular_at, newton_refine, residual_delta

    if not F.is_square:
        raise ValueError(f"system is not square: {len(F)} equations, {F.nvars} variables")
    root = initial_state(F, p)
    root.active = list(range(len(F)))
    for i in range(len(F)):
        root.judged.append((i, Regularity.THETA_REGULAR))
    diagnostics: list[str] = []
    budget = [max_branches]

    def explore(state: DeflationState, depth: int, path: str) -> DeflatedSystem | None:
        k = len(state.variables)
        for r in range(min(k, len(state.active)), -1, -1):
            if budget[0] <= 0:
                return None
            if r == k:
                budget[0] -= 1
                order = [i for i in state.last_g] + [i for i in state.last_h1 if i not in state.last_g]
                order += [i for i in state.active if i not in order]
                rows = select_independent_rows(state.jacobian(order), eps, count=k, relative=relative_rank)
                ids = [order[j] for j in rows]
                out = _package(state, ids, F)
                point, trace = newton_refine(out.system, out.point, tol=tol, max_iter=max_iter)
                conv = classify_convergence(trace)
                if conv is Convergence.QUADRATIC and not is_regular_at(out.system, point):
                    conv = Convergence.STALLED
                delta = residual_delta(F, point)
                diagnostics.append(f"{path}rank {r}: {conv.value}, delta={delta:.3g}")
                if conv is Convergence.QUADRATIC and delta < theta_prime:
                    out.log.append(f"rank-guess branch accepted: {path}rank {r}")
                    out.log.extend(diagnostics)
                    return out
                continue
            if depth >= max_depth or k + r > max_variables:
                continue
            ids = state.active
            J = state.jacobian(ids)
            H1 = [ids[j] for j in select_independent_rows(J, eps, count=r, relative=relative_rank)]
            for h in [i for i in ids if i not in H1]:
                if budget[0] <= 0:
                    return None
                budget[0] -= 1
                _, _, child = combine_and_differentiate(H1, h, state)
                found = explore(child, depth + 1, f"{path}rank {r}/h=#{h} > ")
                if found is not None:
                    return found
        return None

    result = explore(root, 0, "")
    if result is None:
        raise DeflationError("all rank-guess branches failed", diagnostics)
    return result
