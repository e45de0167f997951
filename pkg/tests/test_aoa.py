import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest.acquisition import HybridCombiner
from covest.aoa import aoa_polynomial_coeffs, polynomial_roots, recover_aoa, recover_aoas, z_to_angle
from covest.channel import array_response

from helpers import crandn, random_combiner


def poly_eval(coeffs, z):
    n = (coeffs.size + 1) // 2
    powers = np.arange(-n + 1, n)
    return np.sum(coeffs * z**powers)


def test_conjugate_symmetry(rng):
    comb = random_combiner(rng, 10, 4)
    c = aoa_polynomial_coeffs(crandn(rng, 4), comb.w)
    assert c.size == 19
    np.testing.assert_allclose(c[::-1], c.conj(), atol=1e-12)


def test_true_direction_is_root():
    n = 8
    phi0 = 0.37
    a = array_response(phi0, n)
    c = aoa_polynomial_coeffs(a, np.eye(n))
    q_norm = np.linalg.norm(n * np.eye(n) - np.outer(a, a.conj()))
    z0 = np.exp(2j * np.pi * 0.5 * np.sin(phi0))
    assert abs(poly_eval(c, z0)) <= 1e-8 * q_norm


def test_quadratic_form_matches_polynomial(rng):
    comb = random_combiner(rng, 6, 3)
    b = crandn(rng, 3)
    c = aoa_polynomial_coeffs(b, comb.w)
    wb = comb.w @ b
    q = np.vdot(b, b).real * comb.w @ comb.w.conj().T - np.outer(wb, wb.conj())
    for z in np.exp(1j * rng.uniform(-np.pi, np.pi, 5)):
        a = z ** np.arange(6)
        assert poly_eval(c, z) == pytest.approx(np.vdot(a, q @ a), abs=1e-10)


def test_scale_changes_coeffs_by_modulus_squared(rng):
    comb = random_combiner(rng, 8, 4)
    b = crandn(rng, 4)
    alpha = 1.7 - 0.4j
    np.testing.assert_allclose(aoa_polynomial_coeffs(alpha * b, comb.w), abs(alpha) ** 2 * aoa_polynomial_coeffs(b, comb.w), atol=1e-10)


def test_zero_b_rejected():
    with pytest.raises(ValueError):
        aoa_polynomial_coeffs(np.zeros(3), np.eye(3))


def test_recover_full_digital():
    n = 8
    phi0 = np.deg2rad(20)
    est = recover_aoa(array_response(phi0, n), HybridCombiner.identity(n))
    assert abs(est.phi_hat - phi0) <= 1e-6
    assert abs(est.delta_hat - 1) <= 1e-8
    assert abs(abs(est.z_hat) - 1) <= 1e-12


def test_recover_hybrid_with_scaling(rng):
    comb = random_combiner(rng, 32, 8)
    phi0 = -0.6
    alpha = 2 * np.exp(1j * np.pi / 3)
    est = recover_aoa(alpha * comb.w.conj().T @ array_response(phi0, 32), comb)
    assert abs(est.phi_hat - phi0) <= 1e-4
    assert abs(est.delta_hat - alpha) <= 1e-6 * abs(alpha)
    assert est.phi_hat == pytest.approx(z_to_angle(est.z_hat))


def test_recover_perturbed(rng):
    comb = random_combiner(rng, 32, 8)
    phi0 = 0.9
    b = comb.w.conj().T @ array_response(phi0, 32)
    p = crandn(rng, 8)
    p -= b * np.vdot(b, p) / np.vdot(b, b)
    b_pert = b + 1e-3 * np.linalg.norm(b) * p / np.linalg.norm(p)
    assert abs(recover_aoa(b_pert, comb).phi_hat - phi0) <= 1e-2


def test_folded_output():
    # a(pi - phi) = a(phi): estimates land in [-pi/2, pi/2]
    n = 8
    est = recover_aoa(array_response(np.pi - 0.4, n), np.eye(n))
    assert est.phi_hat == pytest.approx(0.4, abs=1e-6)


def test_recover_aoas_columns(rng):
    comb = random_combiner(rng, 16, 6)
    phis = np.array([-0.5, 0.2, 1.1])
    b = comb.w.conj().T @ np.column_stack([array_response(p, 16) for p in phis])
    out = recover_aoas(b, comb)
    np.testing.assert_allclose([e.phi_hat for e in out], phis, atol=1e-6)


def test_single_rf_chain_is_deterministic(rng):
    comb = random_combiner(rng, 6, 1)
    c = aoa_polynomial_coeffs(np.array([1.3 - 0.2j]), comb.w)
    assert np.max(np.abs(c)) < 1e-12
    e1 = recover_aoa(np.array([1.3 - 0.2j]), comb)
    e2 = recover_aoa(np.array([-0.4j]), comb)
    assert e1.z_hat == pytest.approx(e2.z_hat)


def test_single_antenna():
    est = recover_aoa(np.array([2.0 + 0j]), np.eye(1))
    assert est.phi_hat == 0.0
    assert est.delta_hat == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_root_pairing(n, seed):
    rng = np.random.default_rng(seed)
    # one RF chain makes the polynomial vanish identically
    m = int(rng.integers(2, n + 1))
    comb = random_combiner(rng, n, m)
    roots = polynomial_roots(aoa_polynomial_coeffs(crandn(rng, m), comb.w))
    mirrored = 1.0 / roots.conj()
    dist = np.abs(mirrored[:, None] - roots[None, :]).min(axis=1)
    assert np.all(dist <= 1e-6 * np.maximum(1.0, np.abs(roots)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-np.pi, np.pi))
def test_scale_invariance(n, seed, mag, ang):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n + 1))
    comb = random_combiner(rng, n, m)
    b = crandn(rng, m)
    alpha = mag * np.exp(1j * ang)
    e1 = recover_aoa(b, comb)
    e2 = recover_aoa(alpha * b, comb)
    assert abs(e1.z_hat - e2.z_hat) <= 1e-6
    assert abs(e2.delta_hat - alpha * e1.delta_hat) <= 1e-6 * abs(alpha * e1.delta_hat) + 1e-12
