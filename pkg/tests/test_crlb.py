import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest.acquisition import HybridCombiner, measure
from covest.channel import ChannelScene, channel_tensor, steering_matrix
from covest.crlb import (
    DegenerateSceneError,
    NotApplicableError,
    assemble_fim,
    crlb_phi,
    fim_blocks,
    log_likelihood,
    music_crlb,
    steering_derivative,
)
from covest.tensor import from_factors, FactorTriple

from helpers import block_errors, crandn, numerical_fim, oracle_scene, paper_scene, random_combiner


def test_log_likelihood_noiseless_and_modes(rng):
    s = oracle_scene(rng, 6, 8, 3, 2)
    comb = random_combiner(rng, 6, 3)
    h, _ = channel_tensor(s)
    y = measure(h, comb, 0.0, rng)
    sigma = 0.3
    const = -3 * 8 * 3 * np.log(np.pi * sigma**2)
    assert log_likelihood(y, s, comb, sigma) == pytest.approx(const)
    y_noisy = y + 0.1 * crandn(rng, *y.shape)
    vals = [log_likelihood(y_noisy, s, comb, sigma, mode=m) for m in (1, 2, 3)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)
    assert vals[0] == pytest.approx(vals[2], rel=1e-12)
    with pytest.raises(ValueError):
        log_likelihood(y, s, comb, 0.0)
    with pytest.raises(ValueError):
        log_likelihood(y, s, comb, 1.0, mode=4)


def test_log_likelihood_gain_gradient(rng):
    s = oracle_scene(rng, 5, 8, 3, 2)
    comb = random_combiner(rng, 5, 3)
    h, _ = channel_tensor(s)
    y = measure(h, comb, 0.2, rng)
    sigma = 0.5
    delta = crandn(rng, 3, 2)
    eps = 1e-6

    def with_gains(g):
        return ChannelScene(s.aoas_rad, s.delays, g, s.n_ant, s.k_sbcr, s.t_frm, s.n_cp)

    fd = (log_likelihood(y, with_gains(s.gains + eps * delta), comb, sigma)
          - log_likelihood(y, with_gains(s.gains - eps * delta), comb, sigma)) / (2 * eps)
    b = comb.w.conj().T @ s.steering()
    resid = y - from_factors(FactorTriple(b, s.freq_factor(), s.gains))
    d_mu = from_factors(FactorTriple(b, s.freq_factor(), delta))
    analytic = 2.0 / sigma**2 * np.real(np.vdot(d_mu, resid))
    assert fd == pytest.approx(analytic, rel=1e-6)


def test_steering_derivative_examples(rng):
    np.testing.assert_allclose(steering_derivative(np.pi / 2, 8, 0.5), 0, atol=1e-14)
    np.testing.assert_allclose(steering_derivative(0.0, 2, 0.5, HybridCombiner.identity(2)), [0, 1j * np.pi])
    comb = random_combiner(rng, 16, 4)
    phi, h = 0.7, 1e-6
    fd = comb.w.conj().T @ (steering_matrix(phi + h, 16) - steering_matrix(phi - h, 16))[:, 0] / (2 * h)
    d = steering_derivative(phi, 16, 0.5, comb)
    assert np.linalg.norm(d - fd) <= 1e-6 * np.linalg.norm(d)
    assert steering_derivative([0.1, 0.2], 16, 0.5, comb).shape == (4, 2)


def test_blocks_scale_with_noise(rng):
    s = oracle_scene(rng, 6, 8, 3, 2)
    comb = random_combiner(rng, 6, 3)
    b1, b2 = fim_blocks(s, comb, 0.4), fim_blocks(s, comb, 0.8)
    for name in ("omega_phi_phi", "omega_tau_tau", "omega_phi_tau", "omega_gg", "omega_phi_g", "omega_tau_g"):
        np.testing.assert_allclose(getattr(b2, name), getattr(b1, name) / 4, rtol=1e-12, atol=1e-14)


def test_single_path_reduction():
    n, k, t, sigma = 5, 6, 4, 0.7
    s = ChannelScene([0.35], [0.0], np.ones((t, 1)), n, k, t, 2)
    comb = HybridCombiner.identity(n)
    b = fim_blocks(s, comb, sigma)
    db = steering_derivative(0.35, n, 0.5, comb)
    assert b.omega_phi_phi[0, 0] == pytest.approx(2 / sigma**2 * k * t * np.vdot(db, db).real)


@pytest.mark.parametrize("dims,seed", [((3, 2, 3, 2, 1), 0), ((4, 3, 3, 2, 2), 1), ((5, 3, 4, 1, 2), 2)])
def test_blocks_match_numerical_oracle(dims, seed):
    n, m, k, t, l = dims
    rng = np.random.default_rng(seed)
    s = oracle_scene(rng, n, k, t, l)
    comb = random_combiner(rng, n, m)
    oracle, f_real = numerical_fim(s, comb)
    blocks = fim_blocks(s, comb, 1.0)
    errs = block_errors(blocks, oracle)
    assert max(errs.values()) <= 1e-3, errs
    full = assemble_fim(blocks)
    assert np.linalg.norm(full - oracle) <= 1e-3 * np.linalg.norm(oracle)
    # the bound itself against inverting the real-parameter oracle
    np.testing.assert_allclose(crlb_phi(blocks), np.diag(np.linalg.inv(f_real))[:l], rtol=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_fim_hermitian_psd(n, l, seed):
    rng = np.random.default_rng(seed)
    l = min(l, n)
    m = int(rng.integers(l, n + 1))
    s = oracle_scene(rng, n, 8, 3, l)
    blocks = fim_blocks(s, random_combiner(rng, n, m), 0.5)
    full = assemble_fim(blocks)
    assert np.linalg.norm(full - full.conj().T) <= 1e-10 * np.linalg.norm(full)
    lam = np.linalg.eigvalsh(full)
    assert lam[0] >= -1e-8 * lam[-1]
    np.testing.assert_array_equal(blocks.omega_phi_phi, blocks.omega_phi_phi.T)
    np.testing.assert_array_equal(blocks.omega_tau_tau, blocks.omega_tau_tau.T)
    gg = blocks.omega_gg
    assert np.allclose(gg, gg.conj().T)
    assert np.linalg.eigvalsh(gg)[0] >= -1e-10 * np.abs(gg).max()


def test_crlb_properties(rng):
    s = paper_scene(rng, t_frm=3, k_sbcr=128, n_ant=16)
    comb = random_combiner(rng, 16, 8)
    b1 = fim_blocks(s, comb, 1.0)
    c1 = crlb_phi(b1)
    assert np.all(c1 > 0)
    np.testing.assert_allclose(crlb_phi(b1, "dense"), c1, rtol=1e-8)
    for sigma in (0.01, 0.3, 3.0):
        np.testing.assert_allclose(crlb_phi(fim_blocks(s, comb, sigma)), sigma**2 * c1, rtol=1e-10)
    # nuisance parameters can only raise the bound
    assert np.all(c1 >= np.diag(np.linalg.inv(b1.omega_phi_phi)) * (1 - 1e-10))
    with pytest.raises(ValueError):
        crlb_phi(b1, "magic")


def test_schur_complement_psd(rng):
    s = oracle_scene(rng, 8, 8, 3, 3)
    b = fim_blocks(s, random_combiner(rng, 8, 4), 1.0)
    o1 = b.omega_1
    schur = b.omega_phi_phi - np.real(o1 @ np.linalg.solve(b.omega_2, o1.conj().T))
    lam = np.linalg.eigvalsh(0.5 * (schur + schur.T))
    assert lam[0] >= -1e-8 * lam[-1]


def test_degenerate_scene(rng):
    g = crandn(rng, 3, 2)
    s = ChannelScene([0.3, 0.3], [1.0, 1.0], g, 6, 8, 3, 2)
    comb = random_combiner(rng, 6, 4)
    with pytest.raises(DegenerateSceneError):
        crlb_phi(fim_blocks(s, comb, 1.0))
    with pytest.raises(DegenerateSceneError):
        crlb_phi(fim_blocks(s, comb, 1.0), "dense")


def music_crlb_direct(s, comb, sigma):
    b = comb.w.conj().T @ s.steering()
    db = steering_derivative(s.aoas_rad, s.n_ant, s.spacing_ratio, comb)
    proj = np.eye(b.shape[0]) - b @ np.linalg.inv(b.conj().T @ b) @ b.conj().T
    c = s.freq_factor()
    info = np.zeros((s.n_paths, s.n_paths))
    for t in range(s.t_frm):
        for k in range(s.k_sbcr):
            z = np.diag(s.gains[t] * c[k])
            info += np.real(z.conj().T @ db.conj().T @ proj @ db @ z)
    return sigma**2 / 2 * np.diag(np.linalg.inv(info))


def test_music_crlb_direct_sum(rng):
    s = oracle_scene(rng, 8, 8, 3, 2)
    comb = random_combiner(rng, 8, 4)
    np.testing.assert_allclose(music_crlb(s, comb, 0.6), music_crlb_direct(s, comb, 0.6), rtol=1e-10)
    single = oracle_scene(rng, 6, 8, 3, 1)
    eye = HybridCombiner.identity(6)
    np.testing.assert_allclose(music_crlb(single, eye, 0.6), music_crlb_direct(single, eye, 0.6), rtol=1e-10)


def test_music_crlb_scaling_and_flag(rng):
    s = oracle_scene(rng, 8, 8, 3, 2)
    comb = random_combiner(rng, 8, 4)
    base = music_crlb(s, comb, 1.0)
    np.testing.assert_allclose(music_crlb(s, comb, 0.2), 0.04 * base, rtol=1e-10)
    np.testing.assert_allclose(music_crlb(s, comb, 0.2, printed_sigma=True), 0.2 * base, rtol=1e-10)


def test_music_crlb_not_applicable(rng):
    s = oracle_scene(rng, 8, 8, 2, 3)
    with pytest.raises(NotApplicableError):
        music_crlb(s, random_combiner(rng, 8, 2), 1.0)
