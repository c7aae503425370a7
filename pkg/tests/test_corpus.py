import math

import numpy as np
import pytest

from singzero.corpus import (
    generate_breadth_system,
    generate_random_power_system,
    list_cases,
    load_case,
    random_power_suite,
)


def test_stored_cases_are_consistent():
    names = list_cases()
    assert {"dz1", "dz2", "ex3", "ex6", "ex8b", "ex10"} <= set(names)
    for name in names:
        c = load_case(name)
        assert c.system.is_square
        assert c.approx_zero.shape == (c.nvars,)
        if c.exact_zero is not None:
            # approximate zeros are close to exact ones, and exact zeros are zeros up to rounding
            assert np.max(np.abs(c.approx_zero - c.exact_zero)) < 1e-3
            assert np.max(np.abs(c.system.evaluate(c.exact_zero))) < 1e-12


def test_unknown_case():
    with pytest.raises(KeyError):
        load_case("nope")


def test_breadth_family():
    c = generate_breadth_system(5)
    assert c.nvars == 5 and c.reference_multiplicity == 32
    assert c.expected_final_size == 5 and c.expected_new_vars == 0
    assert np.all(c.system.evaluate(np.zeros(5)) == 0)
    assert load_case("breadth5").system == c.system
    with pytest.raises(ValueError):
        generate_breadth_system(1)


def test_random_power_system_structure():
    c = generate_random_power_system(3, [2, 1, 3], seed=4)
    assert c.reference_multiplicity == 6
    assert not c.multiplicity_lower_bound
    assert np.max(np.abs(c.system.evaluate(c.exact_zero))) == 0.0
    assert np.linalg.matrix_rank(c.system.jacobian(c.exact_zero)) < 3
    assert c.system.total_degree() >= 3


def test_random_power_system_with_mixing():
    c = generate_random_power_system(2, [2, 2], mix=[None, (0, 3)], seed=1)
    assert c.multiplicity_lower_bound


def test_random_power_system_is_deterministic():
    a = generate_random_power_system(2, [2, 3], seed=9)
    b = generate_random_power_system(2, [2, 3], seed=9)
    assert a.system == b.system and np.array_equal(a.approx_zero, b.approx_zero)


def test_random_power_system_validation():
    with pytest.raises(ValueError):
        generate_random_power_system(2, [2])
    with pytest.raises(ValueError):
        generate_random_power_system(2, [2, 0])
    with pytest.raises(ValueError):
        generate_random_power_system(2, [2, 2], mix=[None])


def test_random_suite_respects_bounds():
    suite = random_power_suite(20, seed=3)
    assert len(suite) == 20
    for c in suite:
        assert 2 <= c.nvars <= 4
        degrees = [int(d) for d in c.name.split("_d")[1].split("_")[0].split("-")]
        assert math.prod(degrees) <= 16 and max(degrees) > 1
    assert [c.name for c in random_power_suite(5, seed=3)] == [c.name for c in suite[:5]]
