"""Spatial covariance reconstruction and the accuracy metrics built on it."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import fold_angle
from .tensor import DimensionError, FactorTriple

__all__ = [
    "RpeResult",
    "true_covariance",
    "reconstruct_covariance",
    "dominant_subspace",
    "rpe",
    "aoa_mse",
    "rpe_lower_bound",
    "is_hermitian_psd",
]

logger = logging.getLogger(__name__)


def _weighted_outer(a, weight, k_sbcr, t_frm):
    r = a @ weight @ a.conj().T / (k_sbcr * t_frm)
    return 0.5 * (r + r.conj().T)


def true_covariance(factors: FactorTriple, k_sbcr: int | None = None, t_frm: int | None = None) -> np.ndarray:
    """Sample covariance of the channel's mode-1 fibers.

    ``R = H_(1) H_(1)^H / (K T) = A conj((G^H G) * (C^H C)) A^H / (K T)``
    for factors ``(A, C, G)``.
    """
    a, c, g = factors
    k_sbcr = c.shape[0] if k_sbcr is None else k_sbcr
    t_frm = g.shape[0] if t_frm is None else t_frm
    weight = ((g.conj().T @ g) * (c.conj().T @ c)).conj()
    return _weighted_outer(a, weight, k_sbcr, t_frm)


def reconstruct_covariance(a_hat, delta_hat, c_hat, g_hat, k_sbcr: int, t_frm: int) -> np.ndarray:
    """Covariance estimate from recovered steering vectors and CP factors.

    ``R~ = A^ conj(D^H ((G^^H G^) * (C^^H C^)) D) A^^H / (K T)`` with
    ``D = diag(delta_hat)``.
    The CP permutation cancels, so it never has to be resolved.
    """
    a_hat = np.atleast_2d(np.asarray(a_hat))
    delta_hat = np.asarray(delta_hat)
    d = np.diag(delta_hat) if delta_hat.ndim == 1 else delta_hat
    c_hat = np.asarray(c_hat)
    g_hat = np.asarray(g_hat)
    if not (a_hat.shape[1] == d.shape[0] == c_hat.shape[1] == g_hat.shape[1]):
        raise DimensionError("factor column counts disagree")
    weight = (d.conj().T @ ((g_hat.conj().T @ g_hat) * (c_hat.conj().T @ c_hat)) @ d).conj()
    return _weighted_outer(a_hat, weight, k_sbcr, t_frm)


def is_hermitian_psd(r, tol: float = 1e-10) -> bool:
    r = np.asarray(r)
    scale = np.linalg.norm(r)
    if scale == 0:
        return True
    if np.linalg.norm(r - r.conj().T) > tol * scale:
        return False
    lam = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    return bool(lam[0] >= -tol * max(lam[-1], 0.0))


def dominant_subspace(r, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors of the ``m`` largest eigenvalues, in descending order.

    Returns ``(U, eigenvalues_descending)``. A tie straddling the cut is
    reported through the module logger.
    """
    r = np.asarray(r)
    lam, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    lam = lam[::-1]
    v = v[:, ::-1]
    if 0 < m < lam.size:
        top = max(lam[0], 0.0)
        gap = abs(lam[m - 1] - lam[m])
        if lam[m - 1] > 1e-10 * top and gap <= 1e-12 * top:
            logger.warning("eigenvalue tie at the dominant-subspace cut (m=%d): %.3e", m, lam[m - 1])
    return v[:, :m], lam


@dataclass(frozen=True)
class RpeResult:
    eta: float
    m_rf: int
    trace_num: float
    trace_den: float


def rpe(r_true, r_est, m_rf: int) -> RpeResult:
    """Relative precoding efficiency of an estimated covariance.

    ``eta = Tr(U~^H R U~) / Tr(U^H R U)`` where ``U`` and ``U~`` hold the
    ``m_rf`` dominant eigenvectors of the true and estimated covariance.
    """
    r_true = np.asarray(r_true)
    r_est = np.asarray(r_est)
    if r_true.shape != r_est.shape or r_true.shape[0] != r_true.shape[1]:
        raise DimensionError(f"covariance shapes differ: {r_true.shape} vs {r_est.shape}")
    if not 1 <= m_rf <= r_true.shape[0]:
        raise ValueError(f"m_rf must be in [1, {r_true.shape[0]}], got {m_rf}")
    if not np.any(r_true):
        raise ValueError("true covariance is zero; RPE undefined")
    u, _ = dominant_subspace(r_true, m_rf)
    u_est, _ = dominant_subspace(r_est, m_rf)
    den = float(np.real(np.trace(u.conj().T @ r_true @ u)))
    num = float(np.real(np.trace(u_est.conj().T @ r_true @ u_est)))
    return RpeResult(eta=num / den, m_rf=m_rf, trace_num=num, trace_den=den)


def _wrapped_diff(a, b):
    # period pi: the folded domain [-pi/2, pi/2] has its ends identified
    return np.mod(a - b + np.pi / 2, np.pi) - np.pi / 2


def aoa_mse(phi_true, phi_est) -> float:
    """Mean squared AoA error in rad^2 after optimal matching.

    Both angle sets are folded onto [-pi/2, pi/2]; estimates are paired with
    true paths by the Hungarian algorithm on squared wrapped differences.
    """
    phi_true = np.atleast_1d(np.asarray(phi_true, dtype=float))
    phi_est = np.atleast_1d(np.asarray(phi_est, dtype=float))
    if phi_true.shape != phi_est.shape:
        raise DimensionError(f"length mismatch: {phi_true.size} vs {phi_est.size}")
    if phi_true.size == 0:
        return 0.0
    cost = _wrapped_diff(fold_angle(phi_true)[:, None], fold_angle(phi_est)[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def rpe_lower_bound(phi_true, crlb_phi, n_ant: int, spacing_ratio: float = 0.5) -> float:
    """Small-error lower bound on ``1 - E[eta]`` implied by per-path AoA CRLBs.

    ``N^2 pi^2 d^2 / (3 L) * sum_l cos^2(phi_l) CRLB(phi_l)``.
    """
    phi_true = np.atleast_1d(np.asarray(phi_true, dtype=float))
    crlb_phi = np.atleast_1d(np.asarray(crlb_phi, dtype=float))
    if phi_true.shape != crlb_phi.shape:
        raise DimensionError("phi_true and crlb_phi lengths differ")
    if np.any(crlb_phi < 0):
        raise ValueError("CRLB values must be non-negative")
    n_paths = phi_true.size
    scale = n_ant**2 * np.pi**2 * spacing_ratio**2 / (3.0 * n_paths)
    return float(scale * np.sum(np.cos(phi_true) ** 2 * crlb_phi))
