"""End-to-end covariance estimation: CPD, then AoA recovery, then reconstruction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquisition import HybridCombiner
from .aoa import AoaEstimate, recover_aoa
from .channel import steering_matrix
from .covariance import reconstruct_covariance
from .cpd import AlsDiagnostics, AlsOptions, cpd_als
from .tensor import FactorTriple

__all__ = ["CovarianceEstimate", "estimate_covariance"]


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: np.ndarray
    aoas: np.ndarray
    deltas: np.ndarray
    factors: FactorTriple
    diagnostics: AlsDiagnostics
    aoa_estimates: tuple[AoaEstimate, ...]


def estimate_covariance(
    y,
    comb: HybridCombiner,
    rank: int,
    rng: np.random.Generator,
    als: AlsOptions | None = None,
    spacing_ratio: float = 0.5,
) -> CovarianceEstimate:
    """Estimate the spatial channel covariance from a measurement tensor.

    Parameters
    ----------
    y : ndarray, shape (M, K, T)
    comb : HybridCombiner
        Combiner that produced ``y``.
    rank : int
        CP rank (number of paths, or ``M_RF`` for clustered channels).
    rng : numpy.random.Generator
        Drives the ALS initializations.
    als : AlsOptions, optional
        Overrides everything but the rank.
    """
    y = np.asarray(y)
    opts = AlsOptions(rank=rank) if als is None else AlsOptions(**{**als.__dict__, "rank": rank})
    factors, diag = cpd_als(y, opts, rng)
    b_hat, c_hat, g_hat = factors
    n_ant = comb.n_ant
    if not np.any(b_hat):
        # all-zero measurement: nothing to recover
        zero = np.zeros((n_ant, n_ant), dtype=complex)
        return CovarianceEstimate(zero, np.zeros(rank), np.zeros(rank, complex), factors, diag, ())
    ests = tuple(
        recover_aoa(b_hat[:, i], comb, spacing_ratio) if np.any(b_hat[:, i]) else AoaEstimate(0.0, 1.0 + 0j, 0j)
        for i in range(rank)
    )
    aoas = np.array([e.phi_hat for e in ests])
    deltas = np.array([e.delta_hat for e in ests])
    a_hat = steering_matrix(aoas, n_ant, spacing_ratio)
    _, k_sbcr, t_frm = y.shape
    r = reconstruct_covariance(a_hat, deltas, c_hat, g_hat, k_sbcr, t_frm)
    return CovarianceEstimate(r, aoas, deltas, factors, diag, ests)
