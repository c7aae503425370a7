"""Benchmark systems with reference metadata and random generators."""

from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .polycore import Polynomial, PolySystem
from .textio import parse_system


@dataclass(frozen=True)
class BenchmarkCase:
    """A system with an approximate zero and reference expectations.

    ``theta``/``eps`` are the tolerances recommended for the case (``None``
    means library defaults).  ``multiplicity_lower_bound`` flags generated
    cases whose multiplicity metadata is only a lower bound.
    """

    name: str
    system: PolySystem
    approx_zero: np.ndarray
    exact_zero: np.ndarray | None
    reference_multiplicity: int | None
    expected_final_size: int | None = None
    expected_new_vars: int | None = None
    theta: float | None = None
    eps: float | None = None
    multiplicity_lower_bound: bool = False
    notes: str = ""
    tags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def nvars(self) -> int:
        return self.system.nvars


def _perturbed(zero: Sequence[float], name: str, scale: float = 1e-4) -> np.ndarray:
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    z = np.asarray(zero, dtype=float)
    return z + rng.uniform(-scale, scale, size=z.shape)


def _sec5_sys3() -> PolySystem:
    s5, s7 = math.sqrt(5.0), math.sqrt(7.0)
    text = (
        f"vars: x, y\n"
        f"14*x + 33*y - {3 * s5!r}*x^2 - {12 * s5!r}*x*y - {12 * s5!r}*y^2 - {6 * s5!r}"
        f" + x^3 + 6*x^2*y + 12*x*y^2 + 8*y^3 + {s7!r}\n"
        f"41*x - 18*y - {s5!r} + 8*x^3 - 12*x^2*y + 6*x*y^2 - y^3"
        f" + {12 * s7!r}*x*y - {12 * s7!r}*x^2 - {3 * s7!r}*y^2 - {6 * s7!r}\n"
    )
    return parse_system(text)


def _build_cases() -> dict[str, BenchmarkCase]:
    s5, s7 = math.sqrt(5.0), math.sqrt(7.0)
    cases = [
        BenchmarkCase(
            "dz1",
            parse_system("x1^4 - x2*x3*x4\nx2^4 - x1*x3*x4\nx3^4 - x1*x2*x4\nx4^4 - x1*x2*x3"),
            _perturbed([0, 0, 0, 0], "dz1"),
            np.zeros(4),
            131,
            expected_final_size=4,
            expected_new_vars=0,
            theta=0.005,
            eps=0.005,
            notes="square count 4, other convention 8",
        ),
        BenchmarkCase(
            "dz2",
            parse_system("x1^4\nx1^2*x2 + x2^4\nx3 + x3^2 - 7*x1^3 - 8*x1^2"),
            np.array([0.00006787, 0.00007577, -0.9999]),
            np.array([0.0, 0.0, -1.0]),
            16,
            expected_final_size=3,
            expected_new_vars=0,
            theta=0.005,
            eps=0.005,
        ),
        BenchmarkCase(
            "sec5_sys3",
            _sec5_sys3(),
            _perturbed([(s5 + 2 * s7) / 5, (2 * s5 - s7) / 5], "sec5_sys3"),
            np.array([(s5 + 2 * s7) / 5, (2 * s5 - s7) / 5]),
            5,
            expected_final_size=3,
            expected_new_vars=1,
            theta=0.005,
            eps=0.005,
            notes="radical coefficients stored as doubles; reference size not reached, exact via rank guessing",
        ),
        BenchmarkCase(
            "sec5_sys4",
            _sec5_sys4(),
            _perturbed([0, 0, -1], "sec5_sys4"),
            np.array([0.0, 0.0, -1.0]),
            18,
            expected_final_size=3,
            expected_new_vars=0,
            theta=0.005,
            eps=0.005,
            notes="reference size 3 not reached; deflates to size 5 with 2 new variables",
        ),
        BenchmarkCase(
            "ex3",
            parse_system("x - y + x^2\nx - y + y^2"),
            np.array([0.0006721, 0.0008381]),
            np.zeros(2),
            3,
            expected_final_size=5,
            expected_new_vars=3,
            theta=0.005,
            eps=0.05,
        ),
        BenchmarkCase(
            "ex6",
            parse_system(
                "-9/4 + 3/2*x1 + 2*x2 + 3*x3 + 4*x4 - 1/4*x1^2\n"
                "x1 - 2*x2 - 2*x3 - 4*x4 + 2*x1*x2 + 3*x1*x3 + 4*x1*x4\n"
                "8 - 4*x1 - 8*x4 + 2*x4^2 + 4*x1*x4 - x1*x4^2\n"
                "-3 + 3*x1 + 2*x2 + 4*x3 + 4*x4"
            ),
            np.array([1.00004659, -1.99995813, -0.99991547, 2.00005261]),
            np.array([1.0, -2.0, -1.0, 2.0]),
            None,
            expected_final_size=7,
            expected_new_vars=3,
            theta=0.05,
            eps=0.005,
        ),
        BenchmarkCase(
            "ex8a",
            parse_system("x + x^2 + 10000*y^2\nx^2 + 10000*y^2"),
            np.array([0.0006851, -0.0004368]),
            np.zeros(2),
            None,
            theta=0.5,
            eps=0.05,
            notes="both inputs theta-regular at the approximate zero for theta=0.5",
        ),
        BenchmarkCase(
            "ex8b",
            parse_system("x + x^2 + 2*x*y + 10000*y^2\n1/20*x + x^2 + 2*x*y + 10000*y^2"),
            np.array([0.000006851, -0.000004368]),
            np.zeros(2),
            None,
            expected_final_size=3,
            expected_new_vars=1,
            theta=0.5,
            eps=0.05,
            notes="theta=0.5 misjudges f2 and gives a perturbed system",
        ),
        BenchmarkCase(
            "ex10",
            parse_system("x + x^2 + 2*x*y + 10000*y^2\n1/20*x + x^2 + 2*x*y + 10000*y^2"),
            np.array([0.000006851, -0.000004368]),
            np.zeros(2),
            None,
            expected_final_size=3,
            expected_new_vars=1,
            theta=0.05,
            eps=0.05,
            notes="exact only through the rank-guess path; limit alpha = -1/20",
        ),
    ]
    return {c.name: c for c in cases}


def _sec5_sys4() -> PolySystem:
    x1, x2, x3 = Polynomial.generators(("x1", "x2", "x3"))
    return PolySystem(
        [
            2 * x1 + 2 * x1**2 + 2 * x2 + 2 * x2**2 + x3**2 - 1,
            (x1 + x2 - x3 - 1) ** 3 - x1**3,
            (2 * x1**3 + 5 * x2**2 + 10 * x3 + 5 * x3**2 + 5) ** 3 - 1000 * x1**5,
        ]
    )


_CASES: dict[str, BenchmarkCase] | None = None


def _registry() -> dict[str, BenchmarkCase]:
    global _CASES
    if _CASES is None:
        with warnings.catch_warnings():
            # 1/20 and friends are stored as the nearest double on purpose
            warnings.simplefilter("ignore")
            _CASES = _build_cases()
    return _CASES


def list_cases() -> list[str]:
    return list(_registry())


def load_case(name: str) -> BenchmarkCase:
    """Stored case by name, or ``breadth<n>`` for the breadth family."""
    reg = _registry()
    if name in reg:
        return reg[name]
    if name.startswith("breadth") and name[7:].isdigit():
        return generate_breadth_system(int(name[7:]))
    raise KeyError(f"unknown case {name!r}; known: {', '.join(reg)}")


def generate_breadth_system(n: int) -> BenchmarkCase:
    """``{x1^3 - x1^2 - x2^2, x_i^3 + x_i^2 - x_{i+1}, ..., x_n^2}`` at the origin."""
    if n < 2:
        raise ValueError("breadth family needs n >= 2")
    names = tuple(f"x{i}" for i in range(1, n + 1))
    xs = Polynomial.generators(names)
    polys = [xs[0] ** 3 - xs[0] ** 2 - xs[1] ** 2]
    polys += [xs[i] ** 3 + xs[i] ** 2 - xs[i + 1] for i in range(1, n - 1)]
    polys.append(xs[-1] ** 2)
    name = f"breadth{n}"
    return BenchmarkCase(
        name,
        PolySystem(polys, names),
        _perturbed(np.zeros(n), name),
        np.zeros(n),
        2**n,
        expected_final_size=n,
        expected_new_vars=0,
        theta=0.005,
        eps=0.005,
    )


def _random_base(n: int, rng: np.random.Generator, names: tuple[str, ...]):
    """Integer system with a simple zero at an integer point and quadratic terms."""
    for _ in range(100):
        A = rng.integers(-2, 3, size=(n, n))
        if abs(round(np.linalg.det(A))) < 1 or np.linalg.cond(A) > 10:
            continue
        p = rng.integers(-1, 2, size=n).astype(float)
        xs = Polynomial.generators(names)
        shifted = [x - float(c) for x, c in zip(xs, p)]
        base = []
        for i in range(n):
            f = reduce(lambda a, b: a + b, (int(A[i, j]) * shifted[j] for j in range(n)))
            for _ in range(int(rng.integers(1, 3))):
                j, k = rng.integers(0, n, size=2)
                f = f + int(rng.choice([-1, 1])) * shifted[j] * shifted[k]
            base.append(f)
        return base, p, A
    raise RuntimeError("could not draw a regular base system")


def generate_random_power_system(
    n: int,
    degrees: Sequence[int],
    mix: Sequence[tuple[int, int] | None] | None = None,
    seed: int = 0,
    *,
    max_attempts: int = 50,
) -> BenchmarkCase:
    """``F_i = f_i^{d_i} + g_i`` over a random regular base ``{f_i}``.

    Parameters
    ----------
    degrees : sequence of int
        Powers ``d_i >= 1``.
    mix : sequence, optional
        Per equation ``None`` (``g_i = 0``) or ``(j, d')`` for
        ``g_i = f_j^{d'}``.
    seed : int
        Seed for the base system, the zero and the perturbation.

    The multiplicity metadata is ``prod(d_i)`` for the pure form and a
    flagged lower bound when mixing terms are present.
    """
    degrees = [int(d) for d in degrees]
    if len(degrees) != n or any(d < 1 for d in degrees):
        raise ValueError("need n positive degrees")
    mix = list(mix) if mix is not None else [None] * n
    if len(mix) != n:
        raise ValueError("mix must have one entry per equation")
    names = tuple(f"x{i}" for i in range(1, n + 1))
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        base, p, _ = _random_base(n, rng, names)
        polys = []
        for i in range(n):
            F = base[i] ** degrees[i]
            if mix[i] is not None:
                j, dj = mix[i]
                F = F + base[j] ** int(dj)
            polys.append(F)
        if any(f.is_zero for f in polys):
            continue
        S = PolySystem(polys, names)
        if np.max(np.abs(S.evaluate(p))) != 0.0:
            continue
        mu = int(np.prod(degrees))
        approx = p + rng.uniform(-1e-4, 1e-4, size=n)
        return BenchmarkCase(
            f"random_n{n}_d{'-'.join(map(str, degrees))}_s{seed}",
            S,
            approx,
            p,
            mu,
            multiplicity_lower_bound=any(m is not None for m in mix),
            notes="generated power system",
            tags=("generated",),
        )
    raise RuntimeError("degenerate random draws; giving up")


def random_power_suite(count: int, seed: int = 0, *, max_vars: int = 4, max_multiplicity: int = 16) -> list[BenchmarkCase]:
    """``count`` random power systems with ``2 <= n <= max_vars`` and ``prod(d) <= max_multiplicity``.

    Case ``k`` draws its shape from seed ``1000 + seed + k`` and its system
    from ``seed + k``, so suites with the same seed share a prefix.
    """
    cases = []
    for k in range(count):
        rng = np.random.default_rng(1000 + seed + k)
        while True:
            n = int(rng.integers(2, max_vars + 1))
            degrees = [int(d) for d in rng.integers(1, 4, size=n)]
            if math.prod(degrees) <= max_multiplicity and max(degrees) > 1:
                break
        cases.append(generate_random_power_system(n, degrees, seed=seed + k))
    return cases
