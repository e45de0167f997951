"""Reference estimators: MUSIC on the baseband covariance, and SOMP on a grid dictionary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .acquisition import HybridCombiner
from .channel import steering_matrix
from .crlb import NotApplicableError
from .tensor import unfold

__all__ = [
    "Dictionary",
    "MusicEstimate",
    "SompEstimate",
    "sample_covariance_y",
    "music_pseudospectrum",
    "music_estimate",
    "build_dictionary",
    "somp_estimate",
]


def sample_covariance_y(y) -> np.ndarray:
    """Sample covariance of the mode-1 fibers, ``Y_(1) Y_(1)^H / (T K)``."""
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None, None]
    y1 = unfold(y, 1)
    r = y1 @ y1.conj().T / y1.shape[1]
    return 0.5 * (r + r.conj().T)


def _noise_subspace(y, l):
    lam, v = np.linalg.eigh(sample_covariance_y(y))
    # eigh sorts ascending; the M - l smallest span the noise subspace
    return v[:, : v.shape[0] - l]


def _sin_grid(n_grid):
    return -1.0 + 2.0 * np.arange(n_grid) / n_grid


def music_pseudospectrum(u_noise, w, sin_grid, spacing_ratio: float = 0.5) -> np.ndarray:
    """``1 / ||U_n^H W^H a(phi)||^2`` evaluated at ``sin(phi) = sin_grid``."""
    n = np.arange(w.shape[0])[:, None]
    a = np.exp(2j * np.pi * spacing_ratio * n * np.asarray(sin_grid)[None, :])
    proj = u_noise.conj().T @ (w.conj().T @ a)
    denom = np.sum(np.abs(proj) ** 2, axis=0)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def _pick_peaks(spec, l, periodic):
    """Indices of the ``l`` largest local maxima, plus sub-grid offsets."""
    s = np.log(spec)
    left = np.roll(s, 1)
    right = np.roll(s, -1)
    is_peak = (s > left) & (s >= right)
    if not periodic:
        is_peak[0] = s[0] >= s[1]
        is_peak[-1] = s[-1] > s[-2]
    peaks = np.flatnonzero(is_peak)
    peaks = peaks[np.argsort(-s[peaks], kind="stable")][:l]
    if peaks.size < l:
        rest = np.setdiff1d(np.argsort(-s, kind="stable"), peaks, assume_unique=True)
        # keep the original ordering by height
        rest = rest[np.argsort(-s[rest], kind="stable")]
        peaks = np.concatenate([peaks, rest[: l - peaks.size]])
    offsets = np.zeros(peaks.size)
    for i, p in enumerate(peaks):
        if not periodic and (p == 0 or p == s.size - 1):
            continue
        sl, sc, sr = left[p], s[p], right[p]
        curv = sl - 2.0 * sc + sr
        if curv < 0:
            offsets[i] = np.clip(0.5 * (sl - sr) / curv, -0.5, 0.5)
    return peaks, offsets


class MusicEstimate(NamedTuple):
    aoas: np.ndarray
    subspace: np.ndarray

    @property
    def covariance(self) -> np.ndarray:
        """Projector onto the estimated signal subspace, used as the covariance surrogate."""
        return self.subspace @ self.subspace.conj().T


def music_estimate(
    y, comb: HybridCombiner, l: int, grid_size: int = 2048, spacing_ratio: float = 0.5
) -> MusicEstimate:
    """MUSIC AoA estimate and the orthonormal span of the recovered steering vectors.

    Parameters
    ----------
    y : ndarray, shape (M, K, T)
        Measurement tensor.
    comb : HybridCombiner
    l : int
        Number of paths; must be smaller than the number of RF chains.
    grid_size : int
        Points of the uniform ``sin(phi)`` grid on [-1, 1).
    """
    m_rf = comb.m_rf
    if l >= m_rf:
        raise NotApplicableError(f"MUSIC needs l < M_RF, got l={l}, M_RF={m_rf}")
    if l < 1:
        raise ValueError("l must be positive")
    grid = _sin_grid(grid_size)
    spec = music_pseudospectrum(_noise_subspace(y, l), comb.w, grid, spacing_ratio)
    periodic = abs(2.0 * spacing_ratio - 1.0) < 1e-12
    peaks, offsets = _pick_peaks(spec, l, periodic)
    step = 2.0 / grid_size
    u = grid[peaks] + offsets * step
    if periodic:
        u = np.mod(u + 1.0, 2.0) - 1.0
    aoas = np.arcsin(np.clip(u, -1.0, 1.0))
    q, _ = np.linalg.qr(steering_matrix(aoas, comb.n_ant, spacing_ratio))
    return MusicEstimate(aoas=aoas, subspace=q)


@dataclass(frozen=True)
class Dictionary:
    """Array responses on a uniform grid in ``sin(phi)``."""

    a_d: np.ndarray
    grid_angles: np.ndarray

    @property
    def n_grid(self) -> int:
        return self.a_d.shape[1]


def build_dictionary(n_ant: int, n_grid: int | None = None, spacing_ratio: float = 0.5) -> Dictionary:
    """Dictionary with ``sin(phi_i) = -1 + 2 i / n_grid``; ``n_grid`` defaults to ``2 n_ant``."""
    n_grid = 2 * n_ant if n_grid is None else n_grid
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    angles = np.arcsin(_sin_grid(n_grid))
    return Dictionary(a_d=steering_matrix(angles, n_ant, spacing_ratio), grid_angles=angles)


class SompEstimate(NamedTuple):
    support: np.ndarray
    covariance: np.ndarray
    residual_norms: np.ndarray


def somp_estimate(y, comb: HybridCombiner, dictionary: Dictionary, l: int) -> SompEstimate:
    """Simultaneous OMP over all ``T K`` fibers, then an LS-Gram covariance.

    Each round adds the atom of ``Phi = W^H A_D`` whose normalized aggregate
    correlation with the residual is largest, then refits all fibers on the
    selected atoms by least squares. The covariance estimate is
    ``A_S X_S X_S^H A_S^H / (T K)`` with ``X_S`` the LS coefficients.
    ``residual_norms`` starts with ``||Y||`` and has one entry per round.
    """
    y = np.asarray(y)
    y1 = unfold(y, 1)
    a_d = dictionary.a_d
    if a_d.shape[0] != comb.n_ant or y1.shape[0] != comb.m_rf:
        raise ValueError("dictionary, combiner and measurement dimensions disagree")
    if not 0 <= l <= dictionary.n_grid:
        raise ValueError(f"l must be in [0, {dictionary.n_grid}], got {l}")
    n_fib = y1.shape[1]
    n_ant = a_d.shape[0]
    phi = comb.w.conj().T @ a_d
    atom_norm2 = np.sum(np.abs(phi) ** 2, axis=0)
    usable = atom_norm2 > 1e-12 * atom_norm2.max()
    norms = [float(np.linalg.norm(y1))]
    support: list[int] = []
    resid = y1
    x_s = np.zeros((0, n_fib), dtype=complex)
    for _ in range(l):
        score = np.sum(np.abs(phi.conj().T @ resid) ** 2, axis=1) / np.where(usable, atom_norm2, 1.0)
        score[~usable] = -np.inf
        score[support] = -np.inf
        support.append(int(np.argmax(score)))
        phi_s = phi[:, support]
        x_s = np.linalg.lstsq(phi_s, y1, rcond=None)[0]
        resid = y1 - phi_s @ x_s
        norms.append(float(np.linalg.norm(resid)))
        if norms[-1] > norms[-2] * (1 + 1e-10) + 1e-12:
            raise ArithmeticError("SOMP residual increased")
    support_arr = np.array(support, dtype=int)
    if not support:
        return SompEstimate(support_arr, np.zeros((n_ant, n_ant), dtype=complex), np.array(norms))
    a_s = a_d[:, support_arr]
    r = a_s @ (x_s @ x_s.conj().T) @ a_s.conj().T / n_fib
    return SompEstimate(support_arr, 0.5 * (r + r.conj().T), np.array(norms))
