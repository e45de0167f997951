"""Log-likelihood, Fisher information and Cramér-Rao bounds for the AoAs.

The unknowns are the AoAs ``phi`` (L, real), the delays ``tau`` (L, real) and
the frame gains ``g = vec(G)`` (TL, complex). The FIM is written over
``(phi, tau, g, conj(g))`` and the AoA bound follows from eliminating the
nuisance parameters with a Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquisition import HybridCombiner, NumericalError
from .channel import ChannelScene
from .tensor import khatri_rao, unfold

__all__ = [
    "DegenerateSceneError",
    "NotApplicableError",
    "FimBlocks",
    "log_likelihood",
    "steering_derivative",
    "fim_blocks",
    "assemble_fim",
    "crlb_phi",
    "music_crlb",
]

MAX_COND = 1e12


class DegenerateSceneError(NumericalError):
    """The Fisher information is singular for this scene."""


class NotApplicableError(ValueError):
    """The bound is not defined for this configuration."""


def _effective_steering(scene: ChannelScene, comb: HybridCombiner):
    return comb.w.conj().T @ scene.steering()


def log_likelihood(y, scene: ChannelScene, comb: HybridCombiner, sigma: float, mode: int = 1) -> float:
    """Gaussian log-likelihood of the measurement tensor under ``scene``.

    ``f = -M K T ln(pi sigma^2) - ||Y - [[W^H A, C, G]]||^2 / sigma^2``,
    evaluated through the chosen unfolding (all three agree).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = np.asarray(y)
    b = _effective_steering(scene, comb)
    c = scene.freq_factor()
    g = scene.gains
    if y.shape != (b.shape[0], c.shape[0], g.shape[0]):
        raise ValueError(f"measurement shape {y.shape} does not match the scene")
    if mode == 1:
        resid = unfold(y, 1) - b @ khatri_rao(g, c).T
    elif mode == 2:
        resid = unfold(y, 2) - c @ khatri_rao(g, b).T
    elif mode == 3:
        resid = unfold(y, 3) - g @ khatri_rao(c, b).T
    else:
        raise ValueError("mode must be 1, 2 or 3")
    m, k, t = y.shape
    return float(-m * k * t * np.log(np.pi * sigma**2) - np.vdot(resid, resid).real / sigma**2)


def steering_derivative(phi, n_ant: int, spacing_ratio: float, comb: HybridCombiner | None = None) -> np.ndarray:
    """Derivative of ``W^H a(phi)`` with respect to ``phi``.

    ``(j 2 pi d) W^H diag(0..N-1) cos(phi) a(phi)``. A scalar ``phi`` gives a
    vector; a vector of angles gives one column per angle. ``comb=None``
    means ``W = I``.
    """
    scalar = np.ndim(phi) == 0
    phis = np.atleast_1d(np.asarray(phi, dtype=float))
    n = np.arange(n_ant)[:, None]
    a = np.exp(2j * np.pi * spacing_ratio * n * np.sin(phis)[None, :])
    da = 2j * np.pi * spacing_ratio * n * np.cos(phis)[None, :] * a
    out = da if comb is None else comb.w.conj().T @ da
    return out[:, 0] if scalar else out


@dataclass(frozen=True)
class FimBlocks:
    """Distinct sub-blocks of the complex FIM over ``(phi, tau, g, conj(g))``.

    ``omega_gg`` is stored in full (``TL x TL``); ``gram_bc`` keeps the
    ``L x L`` matrix ``(B^H B) * (C^H C)`` whose transpose, Kronecker-ed with
    ``I_T`` and divided by ``sigma^2``, gives ``omega_gg``.
    """

    omega_phi_phi: np.ndarray
    omega_tau_tau: np.ndarray
    omega_phi_tau: np.ndarray
    omega_gg: np.ndarray
    omega_phi_g: np.ndarray
    omega_tau_g: np.ndarray
    gram_bc: np.ndarray
    sigma: float
    n_paths: int
    t_frm: int

    @property
    def omega_1(self) -> np.ndarray:
        """Coupling of ``phi`` with ``(tau, g, conj(g))``, shape ``(L, L + 2TL)``."""
        return np.hstack([self.omega_phi_tau, self.omega_phi_g, self.omega_phi_g.conj()])

    @property
    def omega_2(self) -> np.ndarray:
        """Nuisance block over ``(tau, g, conj(g))``."""
        tl = self.omega_gg.shape[0]
        z = np.zeros((tl, tl), dtype=complex)
        tg = self.omega_tau_g
        return np.block(
            [
                [self.omega_tau_tau.astype(complex), tg, tg.conj()],
                [tg.conj().T, self.omega_gg, z],
                [tg.T, z, self.omega_gg.conj()],
            ]
        )


def fim_blocks(scene: ChannelScene, comb: HybridCombiner, sigma: float) -> FimBlocks:
    """All FIM sub-blocks for a scene observed through ``comb`` at noise level ``sigma``."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s2 = sigma**2
    b = _effective_steering(scene, comb)
    db = steering_derivative(scene.aoas_rad, scene.n_ant, scene.spacing_ratio, comb)
    c = scene.freq_factor()
    dc = scene.freq_factor_derivative()
    g = scene.gains
    t_frm, n_paths = g.shape

    bb = b.conj().T @ b
    bdb = b.conj().T @ db
    dbdb = db.conj().T @ db
    cc = c.conj().T @ c
    cdc = c.conj().T @ dc
    dcdc = dc.conj().T @ dc
    gg = g.conj().T @ g

    omega_phi_phi = (2.0 / s2) * np.real((dbdb * cc * gg).T)
    omega_tau_tau = (2.0 / s2) * np.real((bb * dcdc * gg).T)
    omega_phi_tau = (2.0 / s2) * np.real((bdb * cdc.conj().T * gg).T)
    gram_bc = bb * cc
    omega_gg = np.kron(gram_bc.T, np.eye(t_frm)) / s2
    omega_phi_g = khatri_rao(bdb * cc, g).T / s2
    omega_tau_g = khatri_rao(bb * cdc, g).T / s2
    return FimBlocks(
        omega_phi_phi=0.5 * (omega_phi_phi + omega_phi_phi.T),
        omega_tau_tau=0.5 * (omega_tau_tau + omega_tau_tau.T),
        omega_phi_tau=omega_phi_tau,
        omega_gg=omega_gg,
        omega_phi_g=omega_phi_g,
        omega_tau_g=omega_tau_g,
        gram_bc=gram_bc,
        sigma=float(sigma),
        n_paths=n_paths,
        t_frm=t_frm,
    )


def assemble_fim(blocks: FimBlocks) -> np.ndarray:
    """Full Hermitian FIM of size ``2L(T+1)`` over ``(phi, tau, g, conj(g))``."""
    o1 = blocks.omega_1
    top = np.hstack([blocks.omega_phi_phi.astype(complex), o1])
    bottom = np.hstack([o1.conj().T, blocks.omega_2])
    return np.vstack([top, bottom])


def _cond_check(mat, what):
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0 or sv[-1] < sv[0] / MAX_COND:
        cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
        raise DegenerateSceneError(f"{what} is singular (condition number {cond:.3e})")


def _reduced_theta_fim(blocks: FimBlocks) -> np.ndarray:
    """FIM over ``(phi, tau)`` after eliminating the gains (real, ``2L x 2L``)."""
    n_paths, t_frm, s2 = blocks.n_paths, blocks.t_frm, blocks.sigma**2
    _cond_check(blocks.gram_bc, "gain information (B^H B * C^H C)")
    # omega_gg^{-1} = sigma^2 * inv(gram_bc^T) kron I_T
    q = s2 * np.linalg.inv(blocks.gram_bc.T)
    theta_g = np.vstack([blocks.omega_phi_g, blocks.omega_tau_g])
    x = theta_g.reshape(2 * n_paths, n_paths, t_frm)
    x_inv = np.einsum("rlt,lm->rmt", x, q).reshape(2 * n_paths, n_paths * t_frm)
    # the conj(g) block contributes the complex conjugate of the g block
    elim = 2.0 * np.real(x_inv @ theta_g.conj().T)
    theta = np.block(
        [
            [blocks.omega_phi_phi, blocks.omega_phi_tau],
            [blocks.omega_phi_tau.T, blocks.omega_tau_tau],
        ]
    )
    red = theta - elim
    return 0.5 * (red + red.T)


def crlb_phi(blocks: FimBlocks, method: str = "structured") -> np.ndarray:
    """Per-path CRLB of the AoAs, ``diag((O_pp - O_1 O_2^{-1} O_1^H)^{-1})``.

    ``method="structured"`` uses the Kronecker form of the gain block and only
    inverts ``L x L`` matrices; ``method="dense"`` inverts the nuisance block
    directly and serves as a cross-check.
    """
    n_paths = blocks.n_paths
    if method == "structured":
        red = _reduced_theta_fim(blocks)
        tt = red[n_paths:, n_paths:]
        _cond_check(tt, "delay information")
        pt = red[:n_paths, n_paths:]
        schur = red[:n_paths, :n_paths] - pt @ np.linalg.solve(tt, pt.T)
    elif method == "dense":
        o2 = blocks.omega_2
        _cond_check(o2, "nuisance information")
        o1 = blocks.omega_1
        schur = blocks.omega_phi_phi - np.real(o1 @ np.linalg.solve(o2, o1.conj().T))
    else:
        raise ValueError(f"unknown method {method!r}")
    schur = 0.5 * (schur + schur.T)
    _cond_check(schur, "Schur complement for the AoAs")
    bound = np.diag(np.linalg.inv(schur)).copy()
    if np.any(bound <= 0):
        raise DegenerateSceneError(f"non-positive CRLB entries: {bound}")
    return bound


def music_crlb(scene: ChannelScene, comb: HybridCombiner, sigma: float, printed_sigma: bool = False) -> np.ndarray:
    """AoA bound for the subspace (MUSIC-type) approach.

    ``diag((s/2) (sum_{t,k} Re(Z^H dB^H P dB Z))^{-1})`` with ``P`` the
    projector onto the orthogonal complement of ``B = W^H A`` and
    ``Z = diag(g_t * c_k)``. ``s`` is ``sigma**2``; ``printed_sigma=True``
    substitutes ``sigma`` instead.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n_paths = scene.n_paths
    if n_paths > comb.m_rf:
        raise NotApplicableError(f"needs L <= M_RF, got L={n_paths}, M_RF={comb.m_rf}")
    b = _effective_steering(scene, comb)
    db = steering_derivative(scene.aoas_rad, scene.n_ant, scene.spacing_ratio, comb)
    c = scene.freq_factor()
    g = scene.gains
    bb = b.conj().T @ b
    _cond_check(bb, "B^H B")
    proj = np.eye(b.shape[0]) - b @ np.linalg.solve(bb, b.conj().T)
    h = db.conj().T @ proj @ db
    info = np.real(h * (g.conj().T @ g) * (c.conj().T @ c))
    info = 0.5 * (info + info.T)
    _cond_check(info, "MUSIC information matrix")
    scale = sigma if printed_sigma else sigma**2
    return 0.5 * scale * np.diag(np.linalg.inv(info)).copy()
