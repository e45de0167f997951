"""Hybrid analog/digital combiner and noisy baseband measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import DimensionError, mode1_product

__all__ = [
    "HybridCombiner",
    "ConfigurationError",
    "NumericalError",
    "draw_rf_combiner",
    "whitened_combiner",
    "inv_sqrtm_hermitian",
    "measure",
]


class ConfigurationError(ValueError):
    """Invalid front-end or experiment configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


@dataclass(frozen=True)
class HybridCombiner:
    """Phase-shifter network ``w_rf`` followed by baseband stage ``w_bb``.

    ``w = w_rf @ w_bb`` is the effective combiner; for the whitened design it
    has orthonormal columns.
    """

    w_rf: np.ndarray
    w_bb: np.ndarray
    w: np.ndarray

    @property
    def n_ant(self) -> int:
        return self.w.shape[0]

    @property
    def m_rf(self) -> int:
        return self.w.shape[1]

    @classmethod
    def identity(cls, n_ant: int) -> "HybridCombiner":
        """Fully digital front end (``w = I``), handy for testing."""
        eye = np.eye(n_ant, dtype=complex)
        return cls(eye, np.eye(n_ant, dtype=complex), eye)


def draw_rf_combiner(n_ant: int, m_rf: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit-modulus phase matrix of shape ``(n_ant, m_rf)``."""
    if not 1 <= m_rf <= n_ant:
        raise ConfigurationError(f"need 1 <= m_rf <= n_ant, got m_rf={m_rf}, n_ant={n_ant}")
    theta = 2.0 * np.pi * rng.random((n_ant, m_rf))
    return np.exp(1j * theta)


def inv_sqrtm_hermitian(a, floor: float = 1e-12) -> np.ndarray:
    """Inverse square root of a Hermitian positive definite matrix.

    Raises :class:`NumericalError` when the smallest eigenvalue is below
    ``floor`` times the largest.
    """
    a = np.asarray(a)
    a = 0.5 * (a + a.conj().T)
    lam, v = np.linalg.eigh(a)
    if lam[-1] <= 0 or lam[0] < floor * lam[-1]:
        raise NumericalError(
            f"matrix is numerically rank deficient (eigenvalues {lam[0]:.3e} .. {lam[-1]:.3e})"
        )
    return (v / np.sqrt(lam)) @ v.conj().T


def whitened_combiner(w_rf) -> HybridCombiner:
    """Attach the whitening baseband stage ``(w_rf^H w_rf)^{-1/2}``."""
    w_rf = np.asarray(w_rf, dtype=complex)
    w_bb = inv_sqrtm_hermitian(w_rf.conj().T @ w_rf)
    return HybridCombiner(w_rf=w_rf, w_bb=w_bb, w=w_rf @ w_bb)


def complex_gaussian(rng: np.random.Generator, shape, sigma: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with variance sigma^2."""
    return sigma * np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def measure(h, comb: HybridCombiner, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Baseband measurement tensor ``Y = H x_1 W^H + N``.

    The noise entries are i.i.d. CN(0, sigma^2). With ``sigma == 0`` no
    random numbers are consumed.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    h = np.asarray(h)
    if h.ndim != 3 or h.shape[0] != comb.n_ant:
        raise DimensionError(f"channel tensor {h.shape} does not match {comb.n_ant} antennas")
    x = mode1_product(h, comb.w.conj().T)
    if sigma == 0:
        return x
    return x + complex_gaussian(rng, x.shape, sigma)
