"""Text format for polynomial systems.

One polynomial per line; ``#`` starts a comment; an optional ``vars:`` line
fixes the variable order.  Terms are ``coefficient[*monomial]`` or
``monomial`` with monomials like ``x1^2*x2``.  Coefficients are decimals
(scientific notation allowed) or ``integer/integer`` rationals.
"""

from __future__ import annotations

import re
import warnings
from fractions import Fraction

import numpy as np

from .polycore import Polynomial, PolySystem, format_polynomial


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class CoefficientLossWarning(UserWarning):
    """A rational coefficient is not exactly representable as a double."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<var>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^]))"
)
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def _tokenize(text: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", lineno, bad + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, lineno: int):
        self.toks = tokens
        self.i = 0
        self.line = lineno

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def col(self) -> int:
        t = self.peek()
        return t[2] if t else (self.toks[-1][2] + len(self.toks[-1][1]) if self.toks else 1)

    def take(self, kind=None, value=None):
        t = self.peek()
        if t is None or (kind and t[0] != kind) or (value and t[1] != value):
            want = value or kind
            got = "end of line" if t is None else repr(t[1])
            raise ParseError(f"expected {want}, got {got}", self.line, self.col())
        self.i += 1
        return t

    def at(self, kind, value=None) -> bool:
        t = self.peek()
        return t is not None and t[0] == kind and (value is None or t[1] == value)

    def polynomial(self) -> list[tuple[float, dict[str, int]]]:
        terms = []
        sign = 1.0
        if self.at("op", "-"):
            self.take()
            sign = -1.0
        elif self.at("op", "+"):
            self.take()
        terms.append(self.term(sign))
        while self.peek() is not None:
            op = self.take("op")
            if op[1] not in "+-":
                raise ParseError(f"expected '+' or '-', got {op[1]!r}", self.line, op[2])
            terms.append(self.term(-1.0 if op[1] == "-" else 1.0))
        return terms

    def term(self, sign: float):
        if self.at("num"):
            c = self.coefficient()
            mono: dict[str, int] = {}
            if self.at("op", "*"):
                self.take()
                mono = self.monomial()
            return sign * c, mono
        if self.at("var"):
            return sign, self.monomial()
        raise ParseError("expected a coefficient or variable", self.line, self.col())

    def coefficient(self) -> float:
        tok = self.take("num")
        if self.at("op", "/"):
            self.take()
            den = self.take("num")
            if not (tok[1].isdigit() and den[1].isdigit()):
                raise ParseError("rational coefficients need integer parts", self.line, tok[2])
            q = Fraction(int(tok[1]), int(den[1])) if int(den[1]) else None
            if q is None:
                raise ParseError("division by zero", self.line, den[2])
            value = float(q)
            if Fraction(value) != q:
                warnings.warn(f"line {self.line}: {q} rounded to {value!r}", CoefficientLossWarning, stacklevel=4)
            return value
        return float(tok[1])

    def monomial(self) -> dict[str, int]:
        mono: dict[str, int] = {}
        while True:
            name = self.take("var")[1]
            e = 1
            if self.at("op", "^"):
                self.take()
                t = self.take("num")
                if not t[1].isdigit():
                    raise ParseError("exponent must be a natural number", self.line, t[2])
                e = int(t[1])
            mono[name] = mono.get(name, 0) + e
            if self.at("op", "*") and self.i + 1 < len(self.toks) and self.toks[self.i + 1][0] == "var":
                self.take()
                continue
            return mono


def parse_system(text: str) -> PolySystem:
    """Parse a system in the text format.

    Variables are ordered by first appearance unless a ``vars:`` header is
    present, in which case every variable used must be declared.

    Raises
    ------
    ParseError
        Syntax errors (with line and column), undeclared variables, a zero
        equation or an empty system.
    """
    header: list[str] | None = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.lower().startswith("vars:"):
            if header is not None or rows:
                raise ParseError("vars header must come first and only once", lineno, 1)
            names = [v.strip() for v in stripped[5:].replace(",", " ").split()]
            for v in names:
                if not _IDENT.match(v):
                    raise ParseError(f"invalid variable name {v!r}", lineno, line.find(v) + 1)
            if len(set(names)) != len(names):
                raise ParseError("duplicate variable in header", lineno, 1)
            header = names
            continue
        parser = _Parser(_tokenize(line, lineno), lineno)
        rows.append((lineno, parser.polynomial()))
    if not rows:
        raise ParseError("no equations", max(1, len(text.splitlines())), 1)

    if header is not None:
        variables = list(header)
        for lineno, terms in rows:
            for _, mono in terms:
                for v in mono:
                    if v not in header:
                        raise ParseError(f"variable {v!r} not declared in vars header", lineno, 1)
    else:
        variables = []
        for _, terms in rows:
            for _, mono in terms:
                for v in mono:
                    if v not in variables:
                        variables.append(v)

    polys = []
    for lineno, terms in rows:
        acc: dict[tuple[int, ...], float] = {}
        for c, mono in terms:
            key = tuple(mono.get(v, 0) for v in variables)
            acc[key] = acc.get(key, 0.0) + c
        f = Polynomial(variables, acc)
        if f.is_zero:
            raise ParseError("identically zero equation", lineno, 1)
        polys.append(f)
    return PolySystem(polys, variables)


def format_system(S: PolySystem, header: bool = True) -> str:
    """Render ``S`` so that :func:`parse_system` reproduces it exactly."""
    lines = [f"vars: {', '.join(S.variables)}"] if header else []
    lines.extend(format_polynomial(f) for f in S)
    return "\n".join(lines) + "\n"


def parse_point(text: str) -> np.ndarray:
    """Comma or whitespace separated reals."""
    parts = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not parts:
        raise ValueError("empty point")
    try:
        return np.array([float(t) for t in parts])
    except ValueError as exc:
        raise ValueError(f"invalid point {text!r}: {exc}") from exc
