"""Sparse real multivariate polynomials.

A :class:`Polynomial` is a map from exponent tuples to nonzero float
coefficients over an ordered tuple of variable names.  Values are immutable;
every operation returns a new polynomial.
"""

from __future__ import annotations

from collections import defaultdict
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]


class DimensionError(ValueError):
    """Raised when a point or monomial does not match the variable count."""


def grlex_key(mono: Monomial) -> tuple:
    """Sort key for descending graded-lex order (use with ``reverse=True``)."""
    return (sum(mono), mono)


class Polynomial:
    """Sparse polynomial with real coefficients.

    Parameters
    ----------
    variables : sequence of str
        Ordered variable names.
    terms : mapping
        Exponent tuple -> coefficient.  Exact zeros are dropped, duplicate
        monomials cannot occur by construction.
    """

    __slots__ = ("_vars", "_terms", "_hash", "_compiled")

    def __init__(self, variables: Sequence[str], terms: Mapping[Monomial, float] | None = None):
        self._vars = tuple(variables)
        n = len(self._vars)
        clean: dict[Monomial, float] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != n:
                raise DimensionError(f"monomial {mono} has length {len(mono)}, expected {n}")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            c = float(c)
            if c != 0.0:
                clean[mono] = clean.get(mono, 0.0) + c
        self._terms = {
            m: clean[m] for m in sorted(clean, key=grlex_key, reverse=True) if clean[m] != 0.0
        }
        self._hash = None
        self._compiled = None

    @classmethod
    def _trusted(cls, variables: tuple[str, ...], terms: Mapping[Monomial, float]) -> "Polynomial":
        """Skip validation for terms produced by internal arithmetic."""
        self = cls.__new__(cls)
        self._vars = variables
        self._terms = {m: terms[m] for m in sorted(terms, key=grlex_key, reverse=True) if terms[m] != 0.0}
        self._hash = None
        self._compiled = None
        return self

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float, variables: Sequence[str]) -> "Polynomial":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        mono = tuple(1 if v == name else 0 for v in variables)
        if sum(mono) != 1:
            raise KeyError(name)
        return cls(variables, {mono: 1.0})

    @classmethod
    def generators(cls, variables: Sequence[str]) -> list["Polynomial"]:
        """One polynomial per variable, all over ``variables``."""
        return [cls.variable(v, variables) for v in variables]

    # -- basic accessors --------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        return self._vars

    @property
    def nvars(self) -> int:
        return len(self._vars)

    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def total_degree(self) -> int:
        """Total degree; the zero polynomial reports 0 (check :attr:`is_zero`)."""
        return max((sum(m) for m in self._terms), default=0)

    def degree_in(self, names: Iterable[str]) -> int:
        """Degree in the subset ``names`` of the variables."""
        idx = [self._vars.index(v) for v in names if v in self._vars]
        return max((sum(m[i] for i in idx) for m in self._terms), default=0)

    def support_variables(self) -> tuple[str, ...]:
        used = set()
        for m in self._terms:
            used.update(i for i, e in enumerate(m) if e)
        return tuple(v for i, v in enumerate(self._vars) if i in used)

    # -- comparisons ------------------------------------------------------
    def key(self) -> tuple:
        return (self._vars, tuple(self._terms.items()))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other, self._vars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r})"

    def __str__(self) -> str:
        return format_polynomial(self)

    # -- ring operations --------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._vars != self._vars:
                raise DimensionError(f"variable lists differ: {self._vars} vs {other._vars}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(float(other), self._vars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial._trusted(self._vars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._trusted(self._vars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial._trusted(self._vars, {m: c * float(other) for m, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, float] = defaultdict(float)
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                out[tuple(a + b for a, b in zip(m1, m2))] += c1 * c2
        return Polynomial._trusted(self._vars, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float, np.floating, np.integer)):
            return NotImplemented
        return self * (1.0 / float(other))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(1.0, self._vars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- variable handling ------------------------------------------------
    def extend(self, variables: Sequence[str]) -> "Polynomial":
        """Embed into a larger (or reordered) variable list."""
        variables = tuple(variables)
        if variables == self._vars:
            return self
        pos = {v: i for i, v in enumerate(variables)}
        missing = [v for v in self.support_variables() if v not in pos]
        if missing:
            raise DimensionError(f"variables {missing} absent from target list")
        out = {}
        for m, c in self._terms.items():
            new = [0] * len(variables)
            for i, e in enumerate(m):
                if e:
                    new[pos[self._vars[i]]] = e
            out[tuple(new)] = c
        return Polynomial._trusted(variables, out)

    # -- calculus -----------------------------------------------------------
    def _check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != self.nvars:
            raise DimensionError(f"point has dimension {p.shape[0]}, expected {self.nvars}")
        return p

    def _compile(self):
        if self._compiled is None:
            if self._terms:
                exps = np.array(list(self._terms.keys()), dtype=np.int64)
                coefs = np.array(list(self._terms.values()), dtype=float)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
                coefs = np.zeros(0)
            self._compiled = (exps, coefs)
        return self._compiled

    def __call__(self, p) -> float:
        return evaluate(self, p)

    def partial(self, i: int) -> "Polynomial":
        return partial(self, i)

    def diff(self, gamma: Monomial) -> "Polynomial":
        return diff_functional(self, gamma)

    def gradient(self) -> list["Polynomial"]:
        return [partial(self, i) for i in range(self.nvars)]


def evaluate(f: Polynomial, p) -> float:
    """Evaluate ``f`` at ``p`` by summing terms."""
    p = f._check_point(p)
    exps, coefs = f._compile()
    if coefs.size == 0:
        return 0.0
    return float(coefs @ np.prod(np.power(p, exps), axis=1))


def gradient_at(f: Polynomial, p) -> np.ndarray:
    """Gradient of ``f`` at ``p`` without forming the partial derivatives."""
    p = f._check_point(p)
    exps, coefs = f._compile()
    grad = np.zeros(f.nvars)
    if coefs.size == 0:
        return grad
    support = np.flatnonzero(exps.any(axis=0))
    sub = exps[:, support]
    ps = p[support]
    for k, j in enumerate(support):
        mask = sub[:, k] > 0
        e = sub[mask].copy()
        e[:, k] -= 1
        grad[j] = float((coefs[mask] * sub[mask, k]) @ np.prod(np.power(ps, e), axis=1))
    return grad


def partial(f: Polynomial, i: int) -> Polynomial:
    """Formal partial derivative with respect to variable index ``i``."""
    if not 0 <= i < f.nvars:
        raise IndexError(f"variable index {i} out of range for {f.nvars} variables")
    out = {}
    for m, c in f.items():
        e = m[i]
        if e:
            out[m[:i] + (e - 1,) + m[i + 1:]] = c * e
    return Polynomial._trusted(f.variables, out)


def diff_functional(f: Polynomial, gamma: Monomial) -> Polynomial:
    """Factorial-normalised derivative ``d^gamma f = (1/gamma!) * D^gamma f``."""
    gamma = tuple(gamma)
    if len(gamma) != f.nvars:
        raise DimensionError(f"gamma has length {len(gamma)}, expected {f.nvars}")
    out = {}
    for m, c in f.items():
        if all(e >= g for e, g in zip(m, gamma)):
            scale = 1
            for e, g in zip(m, gamma):
                scale *= comb(e, g)
            out[tuple(e - g for e, g in zip(m, gamma))] = c * scale
    return Polynomial._trusted(f.variables, out)


def iterated_partial(f: Polynomial, gamma: Monomial) -> Polynomial:
    """Un-normalised mixed partial ``D^gamma f`` (test helper and oracle)."""
    out = f
    for i, g in enumerate(gamma):
        for _ in range(g):
            out = partial(out, i)
    return out


def gamma_factorial(gamma: Monomial) -> int:
    out = 1
    for g in gamma:
        out *= factorial(g)
    return out


def taylor_coefficients(f: Polynomial, p, max_order: int | None = None) -> dict[Monomial, float]:
    """Coefficients ``c_gamma`` with ``f(x) = sum c_gamma (x - p)^gamma``.

    Computed by shifting one variable at a time (binomial re-expansion),
    so each coefficient equals ``d^gamma f (p)``.  Orders above
    ``max_order`` are discarded; exact zeros are omitted.
    """
    p = f._check_point(p)
    terms: dict[Monomial, float] = dict(f.items())
    for i, pi in enumerate(p):
        if pi == 0.0:
            continue
        shifted: dict[Monomial, float] = defaultdict(float)
        for m, c in terms.items():
            k = m[i]
            if k == 0:
                shifted[m] += c
                continue
            powers = [1.0]
            for _ in range(k):
                powers.append(powers[-1] * pi)
            for j in range(k + 1):
                shifted[m[:i] + (j,) + m[i + 1:]] += c * comb(k, j) * powers[k - j]
        terms = shifted
    return {
        m: c
        for m, c in sorted(terms.items(), key=lambda t: grlex_key(t[0]))
        if c != 0.0 and (max_order is None or sum(m) <= max_order)
    }


def from_taylor(coefficients: Mapping[Monomial, float], p, variables: Sequence[str]) -> Polynomial:
    """Re-expand ``sum c_gamma (x - p)^gamma`` about the origin."""
    p = np.asarray(p, dtype=float)
    shifted = Polynomial(variables, coefficients)
    return Polynomial(variables, taylor_coefficients(shifted, -p))


class PolySystem:
    """Ordered list of polynomials sharing one variable list."""

    __slots__ = ("_vars", "_polys", "_jac", "_stacked")

    def __init__(self, polys: Sequence[Polynomial], variables: Sequence[str] | None = None):
        polys = list(polys)
        if not polys:
            raise ValueError("a polynomial system needs at least one polynomial")
        if variables is None:
            variables = polys[0].variables
        self._vars = tuple(variables)
        self._polys = tuple(f.extend(self._vars) for f in polys)
        self._jac = None
        self._stacked = None

    @property
    def variables(self) -> tuple[str, ...]:
        return self._vars

    @property
    def polys(self) -> tuple[Polynomial, ...]:
        return self._polys

    @property
    def nvars(self) -> int:
        return len(self._vars)

    def __len__(self) -> int:
        return len(self._polys)

    def __iter__(self):
        return iter(self._polys)

    def __getitem__(self, i):
        return self._polys[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolySystem):
            return NotImplemented
        return self._vars == other._vars and self._polys == other._polys

    def __hash__(self) -> int:
        return hash((self._vars, self._polys))

    def __repr__(self) -> str:
        return f"PolySystem({[str(f) for f in self._polys]}, variables={self._vars})"

    @property
    def is_square(self) -> bool:
        return len(self._polys) == len(self._vars)

    def total_degree(self) -> int:
        return max(f.total_degree() for f in self._polys)

    def degree_in(self, names: Iterable[str]) -> int:
        names = list(names)
        return max(f.degree_in(names) for f in self._polys)

    def jacobian_polys(self) -> tuple[tuple[Polynomial, ...], ...]:
        if self._jac is None:
            self._jac = tuple(tuple(f.gradient()) for f in self._polys)
        return self._jac

    def _tables(self):
        """Stacked exponent/coefficient tables for the values and the Jacobian."""
        if self._stacked is None:
            flat_jac = [d for row in self.jacobian_polys() for d in row]
            self._stacked = (_stack(self._polys, self.nvars), _stack(flat_jac, self.nvars))
        return self._stacked

    def evaluate(self, p) -> np.ndarray:
        p = self._polys[0]._check_point(p)
        return _eval_stacked(self._tables()[0], p, len(self._polys))

    def jacobian(self, p) -> np.ndarray:
        p = self._polys[0]._check_point(p)
        n = self.nvars
        return _eval_stacked(self._tables()[1], p, len(self._polys) * n).reshape(len(self._polys), n)


def _stack(polys: Sequence[Polynomial], n: int):
    exps, coefs, rows = [], [], []
    for k, f in enumerate(polys):
        e, c = f._compile()
        exps.append(e.reshape(-1, n))
        coefs.append(c)
        rows.append(np.full(c.shape[0], k, dtype=np.intp))
    return np.concatenate(exps), np.concatenate(coefs), np.concatenate(rows)


def _eval_stacked(table, p: np.ndarray, size: int) -> np.ndarray:
    exps, coefs, rows = table
    if coefs.size == 0:
        return np.zeros(size)
    return np.bincount(rows, weights=coefs * np.prod(np.power(p, exps), axis=1), minlength=size)


def jacobian_at(polys: Sequence[Polynomial], p) -> np.ndarray:
    """Jacobian rows of ``polys`` at ``p`` (empty list gives a 0 x n matrix)."""
    p = np.asarray(p, dtype=float)
    if not polys:
        return np.zeros((0, p.shape[0]))
    return np.array([gradient_at(f, p) for f in polys])


def _format_number(c: float) -> str:
    if c.is_integer() and abs(c) < 1e16:
        return str(int(c))
    return repr(c)


def format_polynomial(f: Polynomial) -> str:
    """Render in the textual grammar accepted by :func:`singzero.textio.parse_system`."""
    if f.is_zero:
        return "0"
    parts = []
    for m, c in f.items():
        factors = []
        for v, e in zip(f.variables, m):
            if e == 1:
                factors.append(v)
            elif e > 1:
                factors.append(f"{v}^{e}")
        mag = abs(c)
        if factors and mag == 1.0:
            body = "*".join(factors)
        elif factors:
            body = _format_number(mag) + "*" + "*".join(factors)
        else:
            body = _format_number(mag)
        sign = "-" if c < 0 else "+"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)
