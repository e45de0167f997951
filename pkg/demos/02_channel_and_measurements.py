"""Wideband multipath channel seen through a hybrid combiner.

A ULA with N antennas receives L paths. Over K subcarriers and T frames the
channel is a rank-L tensor whose factors are the steering matrix, the
per-subcarrier pulse response and the per-frame path gains. The receiver
only sees M_RF combined outputs per subcarrier and frame.
"""

import numpy as np

from covest import (
    SceneConfig,
    channel_tensor,
    draw_rf_combiner,
    draw_scene,
    measure,
    snr_to_sigma,
    true_covariance,
    unfold,
    whitened_combiner,
)

rng = np.random.default_rng(1)

# %% Draw a scene

cfg = SceneConfig(n_ant=32, k_sbcr=64, t_frm=10, n_paths=3)
scene = draw_scene(cfg, rng)
print("AoAs (deg):", np.round(np.rad2deg(scene.aoas_rad), 2))
print("delays (samples):", np.round(scene.delays, 2))
print("cyclic prefix:", scene.n_cp)

# %% Channel tensor and its factors

h, factors = channel_tensor(scene)
print("H shape (N, K, T):", h.shape)
print("rank of the mode-1 unfolding:", np.linalg.matrix_rank(unfold(h, 1)))

# %% The spatial covariance
# R = E[h h^H] averaged over subcarriers and frames; here it has rank L.

r = true_covariance(factors)
lam = np.linalg.eigvalsh(r)[::-1]
print("leading eigenvalues of R:", np.round(lam[:5], 4))

# %% Hybrid measurement
# W = W_RF (W_RF^H W_RF)^{-1/2} keeps the baseband noise white.

comb = whitened_combiner(draw_rf_combiner(32, 8, rng))
print("W^H W == I:", np.allclose(comb.w.conj().T @ comb.w, np.eye(8)))
sigma = snr_to_sigma(10.0)
y = measure(h, comb, sigma, rng)
print("Y shape (M_RF, K, T):", y.shape, "noise sigma at 10 dB:", round(sigma, 4))
signal = np.linalg.norm(measure(h, comb, 0.0, rng)) ** 2 / y.size
print(f"per-entry signal power {signal:.3f}, noise power {sigma**2:.3f}")
