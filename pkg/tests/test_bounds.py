import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import seeds
from semicont.bounds import (capped_h2, compare_corrections, entropy_bound,
                             equivocation_bound, parse_grid)
from semicont.entropy import LN2, g_func, h2, h2_tilde, von_neumann_entropy
from semicont.gibbs import HamiltonianSpectrum, energy, max_entropy
from semicont.operators import random_density, random_perturbation, trace_distance

TWO_LEVEL = HamiltonianSpectrum.from_levels([0.0, 1.0])


def test_entropy_bound_examples():
    assert entropy_bound(TWO_LEVEL, 0.25, 0.0) == 0.0
    assert entropy_bound(TWO_LEVEL, 0.25, 0.1) == pytest.approx(0.394398, abs=1e-6)
    # same point with g(0.1) = 0.3351003 in place of h2(0.1)
    assert entropy_bound(TWO_LEVEL, 0.25, 0.1, "old") == pytest.approx(0.404414, abs=1e-6)
    assert entropy_bound(TWO_LEVEL, 0.25, 0.1, "old") - entropy_bound(TWO_LEVEL, 0.25, 0.1) == \
        pytest.approx(g_func(0.1) - h2(0.1), abs=1e-14)


def test_entropy_bound_rejects_bad_input():
    with pytest.raises(ValueError):
        entropy_bound(TWO_LEVEL, 0.0, 0.1)
    with pytest.raises(ValueError):
        entropy_bound(TWO_LEVEL, 0.25, 1.5)
    with pytest.raises(ValueError):
        entropy_bound(TWO_LEVEL, 0.25, 0.1, use_offset=True)


@given(eps=st.floats(0.001, 1.0), e=st.floats(0.05, 3.0))
@settings(max_examples=100)
def test_new_never_exceeds_old(eps, e):
    spec = HamiltonianSpectrum.from_levels(np.arange(6.0))
    assert entropy_bound(spec, e, eps, "new") <= entropy_bound(spec, e, eps, "old")


@given(seed=seeds, eps=st.floats(0.01, 0.9))
@settings(max_examples=100)
def test_offset_tightens(seed, eps):
    spec = HamiltonianSpectrum.from_levels(np.arange(4.0))
    rho = random_density(4, None, seed)
    e = max(energy(spec, rho), 1e-6)
    assert entropy_bound(spec, e, eps, use_offset=True, rho=rho) <= \
        entropy_bound(spec, e, eps) + 1e-12


@given(seed=seeds, eps=st.floats(0.02, 0.6))
@settings(max_examples=150)
def test_entropy_bound_holds_on_random_pairs(seed, eps):
    spec = HamiltonianSpectrum.from_levels(np.arange(4.0))
    rho = random_density(4, None, seed)
    sigma = random_perturbation(rho, eps, seed)
    t = trace_distance(rho, sigma)
    e = energy(spec, rho)
    lhs = von_neumann_entropy(rho) - von_neumann_entropy(sigma)
    for variant in ("old", "new"):
        assert lhs <= entropy_bound(spec, e, t, variant) + 1e-9
        assert lhs <= entropy_bound(spec, e, t, variant, use_offset=True, rho=rho) + 1e-9


def test_equivocation_examples():
    assert equivocation_bound(1.0, 0.0) == 0.0
    assert equivocation_bound(1.0, 0.25) == pytest.approx(1.187838, abs=1e-6)
    assert equivocation_bound(1.0, 0.25) == pytest.approx(0.25 * g_func(4.0) + h2(0.25), abs=1e-14)
    # small eps: eps g(E/eps) ~ eps ln(E/eps) and h2(eps) are each about 1.5e-5
    assert 1e-6 * g_func(1e6) <= 2e-5
    small = 1e-6 * (1e6 + 1) * math.log1p(1e-6) + 1e-6 * math.log1p(1e6) + h2(1e-6)
    assert equivocation_bound(1.0, 1e-6) == pytest.approx(small, rel=1e-9)
    assert equivocation_bound(1.0, 1e-6) <= 3e-5
    assert equivocation_bound(1.0, 0.25, "old") > equivocation_bound(1.0, 0.25)
    with pytest.raises(ValueError):
        equivocation_bound(1.0, 0.25, first_term="h2")


def test_first_term_swap_is_smaller():
    for eps in (0.05, 0.2, 0.5):
        assert equivocation_bound(1.0, eps, first_term="h2_tilde") < equivocation_bound(1.0, eps)


def test_capped_h2():
    assert capped_h2(0.25) == h2(0.25)
    assert capped_h2(7.0) == LN2


def test_compare_corrections_rows():
    rows = compare_corrections([0.5, 1.0])
    assert rows[0]["g"] == pytest.approx(0.954771, abs=1e-6)
    assert rows[0]["h2_tilde"] == pytest.approx(LN2, abs=1e-15)
    assert rows[1]["gap"] == pytest.approx(LN2, abs=1e-12)
    assert rows[1]["rel_gap"] == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        compare_corrections([0.0])


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0.1:0.5:0.1"), [0.1, 0.2, 0.3, 0.4, 0.5])
    assert len(parse_grid("0.001:1:0.001")) == 1000
    np.testing.assert_array_equal(parse_grid("0.2, 0.4"), [0.2, 0.4])
    with pytest.raises(ValueError):
        parse_grid("0.5:0.1:0.1")


def test_entropy_bound_uses_max_entropy_scaling():
    lin = HamiltonianSpectrum.linear(1.0, 512)
    assert entropy_bound(lin, 1.0, 0.5) == pytest.approx(
        0.5 * max_entropy(lin, 2.0) + h2_tilde(0.5), abs=1e-14)
    assert entropy_bound(lin, 1.0, 0.5) == pytest.approx(
        0.5 * (3 * math.log(3) - 2 * math.log(2)) + LN2, abs=1e-6)
