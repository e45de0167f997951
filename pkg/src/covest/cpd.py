"""Rank-R CP decomposition of a third-order tensor by alternating least squares."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .tensor import FactorTriple, khatri_rao, tensor_norm, unfold

__all__ = ["AlsOptions", "AlsDiagnostics", "als_update_mode", "pinv_hermitian", "cpd_als"]

logger = logging.getLogger(__name__)

FIT_FLOOR = 1e-12


@dataclass(frozen=True)
class AlsOptions:
    """Settings for :func:`cpd_als`.

    Attributes
    ----------
    rank : int
        Number of rank-one components.
    max_iters : int
        Iteration cap per restart.
    rel_tol : float
        Stop once the relative change of the normalized residual drops below this.
    n_restarts : int
        Independent initializations; the lowest final residual wins.
    init_mode : {"random", "svd_warm"}
        ``svd_warm`` seeds the first restart algebraically: compress modes 1
        and 2 onto their leading singular vectors and diagonalize two random
        mode-3 slice combinations (exact for noiseless data of rank
        ``R <= min(I1, I2)``). Remaining restarts are random.
    pinv_tol : float
        Relative eigenvalue cut-off in the Gram pseudoinverse.
    """

    rank: int
    max_iters: int = 500
    rel_tol: float = 1e-8
    n_restarts: int = 3
    init_mode: str = "random"
    pinv_tol: float = 1e-10

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_mode not in ("random", "svd_warm"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class AlsDiagnostics:
    final_residual: float
    iterations: int
    restart_index: int
    converged: bool
    fit_history: list[float] = field(default_factory=list)
    half_step_history: list[float] = field(default_factory=list)
    restart_residuals: list[float] = field(default_factory=list)


def pinv_hermitian(a, rtol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian PSD matrix with relative truncation."""
    a = np.asarray(a)
    lam, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    top = lam[-1] if lam.size else 0.0
    if top <= 0:
        return np.zeros_like(a)
    keep = lam > rtol * top
    return (v[:, keep] / lam[keep]) @ v[:, keep].conj().T


def als_update_mode(y_unfold, f_a, f_b, pinv_tol: float = 1e-10) -> np.ndarray:
    """Least-squares factor update ``Y_(n) ((F_a kr F_b)^T)^+``.

    Evaluated through the Gram form
    ``Y_(n) conj((F_a kr F_b) ((F_a^H F_a) * (F_b^H F_b))^+)``, so only an
    ``R x R`` matrix is inverted.
    """
    kr = khatri_rao(f_a, f_b)
    y_unfold = np.asarray(y_unfold)
    if y_unfold.shape[1] != kr.shape[0]:
        raise ValueError(
            f"unfolding has {y_unfold.shape[1]} columns but Khatri-Rao product has {kr.shape[0]} rows"
        )
    gram = (f_a.conj().T @ f_a) * (f_b.conj().T @ f_b)
    return y_unfold @ (kr @ pinv_hermitian(gram, pinv_tol)).conj()


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _svd_init(mat, rank, rng):
    u = np.linalg.svd(mat, full_matrices=False)[0][:, :rank]
    if u.shape[1] < rank:
        u = np.hstack([u, _crandn(rng, (mat.shape[0], rank - u.shape[1]))])
    return u


def _gevd_init(y, y3, rank, rng):
    """Factors from the eigenvectors of ``S_a S_b^{-1}`` for two slice mixtures."""
    i1, i2, i3 = y.shape
    if rank > min(i1, i2) or i3 < 2:
        return None
    u1 = np.linalg.svd(unfold(y, 1), full_matrices=False)[0][:, :rank]
    u2 = np.linalg.svd(unfold(y, 2), full_matrices=False)[0][:, :rank]
    core = np.einsum("ia,jb,ijt->abt", u1.conj(), u2.conj(), y)
    # each slice is B' diag(g_t) C'^T, so S_a S_b^{-1} = B' D B'^{-1}
    s_a = core @ _crandn(rng, i3)
    s_b = core @ _crandn(rng, i3)
    try:
        _, vecs = np.linalg.eig(np.linalg.solve(s_b.T, s_a.T).T)
        c_core = np.linalg.solve(vecs, s_a).T
    except np.linalg.LinAlgError:
        return None
    b, c = u1 @ vecs, u2 @ c_core
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        return None
    g = als_update_mode(y3, c, b, 1e-10)
    return b, c, g


def _balance(b, c, g):
    nb = np.linalg.norm(b, axis=0)
    nc = np.linalg.norm(c, axis=0)
    ng = np.linalg.norm(g, axis=0)
    ok = (nb > 0) & (nc > 0) & (ng > 0)
    target = np.cbrt(np.where(ok, nb * nc * ng, 1.0))
    sb = np.where(ok, target / np.where(ok, nb, 1.0), 1.0)
    sc = np.where(ok, target / np.where(ok, nc, 1.0), 1.0)
    sg = np.where(ok, target / np.where(ok, ng, 1.0), 1.0)
    return b * sb, c * sc, g * sg


def _run_als(y1, y2, y3, ynorm, init, opts):
    b, c, g = init
    fits: list[float] = []
    halves: list[float] = []
    converged = False
    it = 0
    prev = np.inf
    for it in range(1, opts.max_iters + 1):
        kr = khatri_rao(g, c)
        b = als_update_mode(y1, g, c, opts.pinv_tol)
        halves.append(np.linalg.norm(y1 - b @ kr.T) / ynorm)
        kr = khatri_rao(g, b)
        c = als_update_mode(y2, g, b, opts.pinv_tol)
        halves.append(np.linalg.norm(y2 - c @ kr.T) / ynorm)
        kr = khatri_rao(c, b)
        g = als_update_mode(y3, c, b, opts.pinv_tol)
        fit = float(np.linalg.norm(y3 - g @ kr.T) / ynorm)
        halves.append(fit)
        fits.append(fit)
        b, c, g = _balance(b, c, g)
        # below ~1e-12 the residual is roundoff and no longer decreases reliably
        if fit < FIT_FLOOR or abs(prev - fit) < opts.rel_tol * prev:
            converged = True
            break
        prev = fit
    return (b, c, g), fits, halves, it, converged


def cpd_als(y, opts: AlsOptions, rng: np.random.Generator) -> tuple[FactorTriple, AlsDiagnostics]:
    """Fit ``Y ~ [[B, C, G]]`` with ``opts.rank`` components.

    Each restart alternates exact least-squares updates of the three factors
    until the normalized residual ``||Y - [[B, C, G]]|| / ||Y||`` stalls. The
    best restart is returned; its factors carry the usual CP scaling and
    permutation ambiguity.
    """
    y = np.asarray(y)
    if y.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("measurement tensor contains non-finite entries")
    i1, i2, i3 = y.shape
    bound = min(i2 * i3, i1 * i3, i1 * i2)
    if opts.rank > bound:
        raise ValueError(f"rank {opts.rank} exceeds the sanity bound {bound} for shape {y.shape}")
    y = y.astype(complex, copy=False)
    y1, y2, y3 = unfold(y, 1), unfold(y, 2), unfold(y, 3)
    ynorm = tensor_norm(y)
    r = opts.rank
    if ynorm == 0:
        zero = FactorTriple(np.zeros((i1, r), complex), np.zeros((i2, r), complex), np.zeros((i3, r), complex))
        return zero, AlsDiagnostics(0.0, 0, 0, True, [0.0], [], [0.0])

    best = None
    residuals = []
    for restart in range(opts.n_restarts):
        init = None
        if opts.init_mode == "svd_warm" and restart == 0:
            init = _gevd_init(y, y3, r, rng)
            if init is None:
                init = (_svd_init(y1, r, rng), _svd_init(y2, r, rng), _svd_init(y3, r, rng))
        if init is None:
            init = (_crandn(rng, (i1, r)), _crandn(rng, (i2, r)), _crandn(rng, (i3, r)))
        factors, fits, halves, iters, converged = _run_als(y1, y2, y3, ynorm, init, opts)
        residuals.append(fits[-1])
        logger.debug("restart %d: residual %.3e after %d iterations", restart, fits[-1], iters)
        if best is None or fits[-1] < best[1][-1]:
            best = (factors, fits, halves, iters, converged, restart)

    (b, c, g), fits, halves, iters, converged, restart = best
    diag = AlsDiagnostics(
        final_residual=fits[-1],
        iterations=iters,
        restart_index=restart,
        converged=converged,
        fit_history=fits,
        half_step_history=halves,
        restart_residuals=residuals,
    )
    return FactorTriple(b, c, g), diag
