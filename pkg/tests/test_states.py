import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entsandwich.linalg import DimensionProfile, InvariantError, ProfileMismatchError, hs_inner
from entsandwich.states import (
    ProductFactors,
    WernerParams,
    basis_vector,
    closest_product_factors,
    far_product_factors,
    local_conjugate,
    maximally_entangled,
    product_projector,
    schmidt_decompose,
    schmidt_from_json,
    schmidt_state,
    werner,
)

from conftest import random_schmidt, random_unitary

PROFILES = [(2, 2), (2, 3), (3, 3), (2, 2, 2), (2, 3, 4), (3, 3, 3), (2, 2, 2, 2)]


def assert_density_invariants(rho):
    m = rho.mat
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.linalg.eigvalsh(m)[0] >= -1e-9


def test_bell_entries():
    sv, e = schmidt_state(DimensionProfile((2, 2)), [1 / np.sqrt(2), 1 / np.sqrt(2)])
    expected = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            expected[i, j] = 0.5
    np.testing.assert_allclose(e.mat, expected, atol=1e-15)
    assert sv.dominant_index == 0


def test_ghz_support():
    _, e = schmidt_state(DimensionProfile((2, 2, 2)), [1 / np.sqrt(2), 1 / np.sqrt(2)])
    nz = {tuple(ix) for ix in np.argwhere(np.abs(e.mat) > 0)}
    assert nz == {(0, 0), (0, 7), (7, 0), (7, 7)}


def test_product_coefficients_rejected():
    with pytest.raises(InvariantError, match="product"):
        schmidt_state(DimensionProfile((2, 2)), [1, 0])


def test_schmidt_state_errors():
    prof = DimensionProfile((2, 3))
    with pytest.raises(InvariantError):
        schmidt_state(prof, [0.5, 0.5, 0.5])
    with pytest.raises(InvariantError):
        schmidt_state(prof, [0.5, 0.5])  # norm 1/2, not within 1e-9
    sv, _ = schmidt_state(prof, [0.5, 0.5], normalize=True)
    assert sv.threshold == pytest.approx(0.5, abs=1e-15)


def test_schmidt_state_renormalizes_near_unit_input():
    sv, e = schmidt_state(DimensionProfile((2, 2)), [np.sqrt(0.9) * (1 + 4e-10), np.sqrt(0.1)])
    assert abs(np.sum(np.abs(sv.coeffs) ** 2) - 1) <= 1e-15
    assert_density_invariants(e)


def test_dominant_index_tie_break():
    sv, _ = schmidt_state(DimensionProfile((3, 3)), [0.5, np.sqrt(0.5) * 1j, 0.5])
    assert sv.dominant_index == 1
    sv, _ = schmidt_state(DimensionProfile((3, 3)), np.full(3, 1 / np.sqrt(3)))
    assert sv.dominant_index == 0


@pytest.mark.parametrize("n,p,threshold", [(2, 2, 1 / 2), (3, 2, 1 / 3), (2, 4, 1 / 2)])
def test_maximally_entangled(n, p, threshold):
    sv, e = maximally_entangled(DimensionProfile((n,) * p))
    assert sv.threshold == pytest.approx(threshold, abs=1e-15)
    assert np.linalg.matrix_rank(e.mat) == 1
    assert abs(np.trace(e.mat) - 1) <= 1e-12
    assert abs(hs_inner(e.mat, e.mat) - 1) <= 1e-12


def test_maximally_entangled_needs_equal_dims():
    with pytest.raises(InvariantError):
        maximally_entangled(DimensionProfile((2, 3)))


@pytest.mark.parametrize("dims", PROFILES)
def test_closest_and_far_product_overlaps(dims, rng):
    prof = DimensionProfile(dims)
    for _ in range(5):
        sv, e = schmidt_state(prof, random_schmidt(prof, rng).coeffs)
        s = product_projector(closest_product_factors(sv))
        r = product_projector(far_product_factors(prof))
        assert abs(hs_inner(e.mat, s.mat).real - sv.threshold) <= 1e-12
        assert abs(hs_inner(e.mat, r.mat)) <= 1e-12
        assert_density_invariants(e)


def test_product_projector_is_rank_one(rng):
    prof = DimensionProfile((2, 3, 4))
    fs = []
    for n in prof.dims:
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        fs.append(f / np.linalg.norm(f))
    a = product_projector(ProductFactors(prof, tuple(fs)))
    assert abs(hs_inner(a.mat, a.mat) - 1) <= 1e-12
    np.testing.assert_allclose(a.mat, np.outer(np.kron(np.kron(fs[0], fs[1]), fs[2]),
                                                np.kron(np.kron(fs[0], fs[1]), fs[2]).conj()), atol=1e-14)


def test_product_factors_validation():
    prof = DimensionProfile((2, 2))
    with pytest.raises(InvariantError):
        ProductFactors(prof, (np.array([1, 1]), basis_vector(2, 0)))
    with pytest.raises(ProfileMismatchError):
        ProductFactors(prof, (basis_vector(3, 0), basis_vector(2, 0)))
    with pytest.raises(ProfileMismatchError):
        ProductFactors(prof, (basis_vector(2, 0),))


def test_werner_endpoints_and_boundary(bell_profile):
    _, e = maximally_entangled(bell_profile)
    w0 = werner(WernerParams(bell_profile, 0.0), e)
    w1 = werner(WernerParams(bell_profile, 1.0), e)
    np.testing.assert_allclose(w0.mat, np.eye(4) / 4)
    np.testing.assert_allclose(w1.mat, e.mat)
    # (1 - s)/N + s with s = 1/3, N = 4 -> 1/6 + 1/3 = 1/2
    w = werner(WernerParams(bell_profile, 1 / 3), e)
    assert abs(hs_inner(w.mat, e.mat).real - 0.5) <= 1e-15


def test_werner_params_validation(bell_profile):
    with pytest.raises(InvariantError):
        WernerParams(bell_profile, 1.5)
    with pytest.raises(InvariantError):
        WernerParams(DimensionProfile((2, 3)), 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.sampled_from([(2, 2), (3, 3), (2, 2, 2)]))
def test_werner_is_valid_for_all_weights(s, dims):
    prof = DimensionProfile(dims)
    _, e = maximally_entangled(prof)
    assert_density_invariants(werner(WernerParams(prof, s), e))


def _gram_singular_values(c):
    """Singular values from the characteristic polynomial of C C^dagger."""
    g = c @ c.conj().T
    eig = np.roots(np.poly(g))
    return np.sort(np.sqrt(np.abs(eig.real)))[::-1]


def test_schmidt_decompose_product_and_bell():
    prof = DimensionProfile((2, 2))
    d = schmidt_decompose(np.kron(basis_vector(2, 0), basis_vector(2, 0)), prof)
    np.testing.assert_allclose(d.coeffs, [1, 0], atol=1e-15)
    with pytest.raises(InvariantError):
        d.schmidt_vector()
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    d = schmidt_decompose(bell, prof)
    np.testing.assert_allclose(d.coeffs, [1 / np.sqrt(2)] * 2, atol=1e-15)


def test_schmidt_decompose_three_term_state():
    prof = DimensionProfile((2, 2))
    psi = np.array([1, 1, 1, 0]) / np.sqrt(3)
    d = schmidt_decompose(psi, prof)
    closed = [np.sqrt((3 + np.sqrt(5)) / 6), np.sqrt((3 - np.sqrt(5)) / 6)]
    np.testing.assert_allclose(_gram_singular_values(psi.reshape(2, 2)), closed, atol=1e-12)
    np.testing.assert_allclose(d.coeffs, closed, atol=1e-12)
    np.testing.assert_allclose(d.reconstruct(), psi, atol=1e-9)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 4), (4, 4)])
def test_schmidt_decompose_recovers_coefficients(dims, rng):
    prof = DimensionProfile(dims)
    for _ in range(10):
        sv = random_schmidt(prof, rng)
        psi = sv.ket()
        u1, u2 = random_unitary(dims[0], rng), random_unitary(dims[1], rng)
        rotated = np.kron(u1, u2) @ psi
        d = schmidt_decompose(rotated, prof)
        np.testing.assert_allclose(np.sort(d.coeffs), np.sort(np.abs(sv.coeffs)), atol=1e-9)
        np.testing.assert_allclose(d.reconstruct(), rotated, atol=1e-9)
        assert np.all(np.diff(d.coeffs) <= 1e-15) and np.all(d.coeffs >= 0)
        # the returned local unitaries map |jj> onto the Schmidt bases
        v1, v2 = d.local_unitaries()
        canon = d.schmidt_vector().ket()
        np.testing.assert_allclose(np.kron(v1, v2) @ canon, rotated, atol=1e-9)


def test_schmidt_decompose_errors():
    with pytest.raises(InvariantError):
        schmidt_decompose(np.zeros(4), DimensionProfile((2, 2)))
    with pytest.raises(InvariantError):
        schmidt_decompose(np.ones(8) / np.sqrt(8), DimensionProfile((2, 2, 2)))


def test_local_conjugate_preserves_state_invariants(rng):
    prof = DimensionProfile((2, 3))
    _, e = schmidt_state(prof, random_schmidt(prof, rng).coeffs)
    rotated = local_conjugate(e, [random_unitary(2, rng), random_unitary(3, rng)])
    assert_density_invariants(rotated)
    with pytest.raises(InvariantError):
        local_conjugate(e, [np.eye(2) * 2, np.eye(3)])


def test_schmidt_json_roundtrip(rng):
    prof = DimensionProfile((3, 3, 3))
    sv = random_schmidt(prof, rng)
    back = schmidt_from_json(sv.to_json())
    np.testing.assert_allclose(back.coeffs, sv.coeffs, atol=1e-15)
    assert back.profile == prof
