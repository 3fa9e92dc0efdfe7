import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings

from conftest import density, dims, hermitian, seeds
from semicont.operators import (DimensionMismatch, InvariantViolation, check_density, eigh,
                                ket_to_dm, numerical_rank, partial_trace, positive_part,
                                random_density, random_perturbation, trace_distance)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


@pytest.mark.parametrize("m, expected", [
    (np.eye(2), [1, 1]),
    (np.diag([0.4, 0.6]), [0.4, 0.6]),
    (PAULI_X, [-1, 1]),
])
def test_eigh_examples(m, expected):
    w, _ = eigh(m)
    np.testing.assert_allclose(w, expected, atol=1e-14)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(InvariantViolation):
        eigh(np.array([[0, 1], [0, 0]]))


@given(seed=seeds, dim=dims)
def test_eigh_reconstruction(seed, dim):
    m = hermitian(dim, np.random.default_rng(seed))
    w, v = eigh(m)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs((v * w) @ v.conj().T - m)) <= 1e-10
    assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) <= 1e-10


@pytest.mark.parametrize("m, expected", [
    (np.diag([0.1, -0.1]), np.diag([0.1, 0])),
    (np.diag([0.6, 0.4]) - 0.5 * np.eye(2), np.diag([0.1, 0])),
])
def test_positive_part_examples(m, expected):
    np.testing.assert_allclose(positive_part(m), expected, atol=1e-14)


@given(seed=seeds, dim=dims)
def test_positive_part_matches_absolute_value_oracle(seed, dim):
    m = hermitian(dim, np.random.default_rng(seed))
    # independent route: [m]_+ = (m + |m|)/2 with |m| = sqrt(m^2)
    absm = scipy.linalg.sqrtm(m @ m)
    pp = positive_part(m)
    assert np.max(np.abs(pp - 0.5 * (m + absm))) <= 1e-8
    assert np.max(np.abs(m - (pp - positive_part(-m)))) <= 1e-10
    assert np.max(np.abs(pp @ m - m @ pp)) <= 1e-10
    assert np.linalg.eigvalsh(pp)[0] >= -1e-10


@given(seed=seeds, dim=dims)
def test_positive_part_identity_on_psd(seed, dim):
    rho = density(dim, seed)
    assert np.max(np.abs(positive_part(rho) - rho)) <= 1e-10


def test_trace_distance_examples():
    rho = random_density(3, seed=1)
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-14)
    assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1)
    assert trace_distance(np.diag([0.5, 0.5]), np.diag([0.3, 0.7])) == pytest.approx(0.2, abs=1e-14)


def test_trace_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        trace_distance(np.eye(2) / 2, np.eye(3) / 3)


@given(seed=seeds, dim=dims)
def test_trace_distance_svd_oracle_and_triangle(seed, dim):
    r = np.random.default_rng(seed)
    a, b, c = (random_density(dim, None, r) for _ in range(3))
    oracle = 0.5 * np.linalg.svd(a - b, compute_uv=False).sum()
    assert trace_distance(a, b) == pytest.approx(oracle, abs=1e-12)
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-14)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10


def _partial_trace_loops(rho, da, db, keep):
    out = np.zeros((da, da) if keep == "A" else (db, db), dtype=complex)
    for a1 in range(da):
        for a2 in range(da):
            for b1 in range(db):
                for b2 in range(db):
                    v = rho[a1 * db + b1, a2 * db + b2]
                    if keep == "A" and b1 == b2:
                        out[a1, a2] += v
                    if keep == "B" and a1 == a2:
                        out[b1, b2] += v
    return out


def test_partial_trace_examples():
    ra, rb = random_density(2, seed=3), random_density(3, seed=4)
    np.testing.assert_allclose(partial_trace(np.kron(ra, rb), 2, 3, "A"), ra, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(ra, rb), 2, 3, "B"), rb, atol=1e-14)
    bell = ket_to_dm(np.array([1, 0, 0, 1]) / np.sqrt(2))
    np.testing.assert_allclose(partial_trace(bell, 2, 2, "A"), np.eye(2) / 2, atol=1e-15)
    mix = 0.5 * (np.diag([1, 0, 0, 0]) + np.diag([0, 0, 0, 1]))
    np.testing.assert_allclose(partial_trace(mix, 2, 2, "A"), np.diag([0.5, 0.5]))


def test_partial_trace_bad_factorization():
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(6) / 6, 4, 2)


@given(seed=seeds, da=dims, db=dims)
@settings(max_examples=40)
def test_partial_trace_loop_oracle(seed, da, db):
    rho = density(da * db, seed)
    for keep in "AB":
        red = partial_trace(rho, da, db, keep)
        assert np.max(np.abs(red - _partial_trace_loops(rho, da, db, keep))) <= 1e-13
        assert abs(np.trace(red).real - 1) <= 1e-12


def test_random_density_rank_and_determinism():
    psi = random_density(2, 1, seed=7)
    np.testing.assert_allclose(np.linalg.eigvalsh(psi), [0, 1], atol=1e-12)
    a = random_density(5, 3, seed=11)
    b = random_density(5, 3, seed=11)
    assert np.array_equal(a, b)
    check_density(a)
    assert numerical_rank(a)[0] == 3


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5, 0.9])
def test_random_perturbation_contract(eps):
    for seed in range(20):
        rho = random_density(4, 1 + seed % 4, seed)
        sigma = random_perturbation(rho, eps, seed)
        check_density(sigma)
        assert 0.9 * eps <= trace_distance(rho, sigma) <= eps
        again = random_perturbation(rho, eps, seed)
        assert np.array_equal(sigma, again)


def test_check_density_rejects():
    with pytest.raises(InvariantViolation):
        check_density(np.diag([0.6, 0.6]))
    with pytest.raises(InvariantViolation):
        check_density(np.diag([1.2, -0.2]))
