"""Dense third-order complex tensor algebra.

Tensors are plain ``numpy`` arrays of shape ``(I1, I2, I3)``. Modes are
numbered 1, 2, 3 to match the usual multilinear-algebra notation; the
conversion to numpy's 0-based axes happens inside each function.

The mode-n unfolding follows the convention in which the remaining indices
are enumerated with the *lowest* mode varying fastest, i.e. entry
``(i1, i2, i3)`` of a tensor lands in column

    j = 1 + sum_{k != n} (i_k - 1) * prod_{m < k, m != n} I_m

of the unfolding. With this convention the CP model satisfies
``unfold(X, 1) == F1 @ khatri_rao(F3, F2).T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "FactorTriple",
    "unfold",
    "fold",
    "khatri_rao",
    "mode1_product",
    "mode_product",
    "from_factors",
    "tensor_norm",
]


class DimensionError(ValueError):
    """Raised when array shapes are inconsistent with an operation."""


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def _as_tensor3(t) -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 3:
        raise DimensionError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t


@dataclass(frozen=True)
class FactorTriple:
    """Factor matrices of a rank-R CP model ``[[F1, F2, F3]]``.

    Attributes
    ----------
    f1, f2, f3 : ndarray
        Factor matrices of shapes ``(I1, R)``, ``(I2, R)`` and ``(I3, R)``.
    """

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(f)) for f in (self.f1, self.f2, self.f3)]
        ranks = {m.shape[1] for m in mats}
        if any(m.ndim != 2 for m in mats) or len(ranks) != 1:
            raise DimensionError(
                "factor matrices must be 2-D with a common column count, got shapes "
                + ", ".join(str(m.shape) for m in mats)
            )
        if ranks.pop() < 1:
            raise DimensionError("CP rank must be at least 1")
        object.__setattr__(self, "f1", mats[0])
        object.__setattr__(self, "f2", mats[1])
        object.__setattr__(self, "f3", mats[2])

    @property
    def rank(self) -> int:
        return self.f1.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.f1.shape[0], self.f2.shape[0], self.f3.shape[0])

    def __iter__(self):
        return iter((self.f1, self.f2, self.f3))

    def permuted(self, perm) -> "FactorTriple":
        """Apply one common column permutation to all three factors."""
        perm = np.asarray(perm)
        return FactorTriple(self.f1[:, perm], self.f2[:, perm], self.f3[:, perm])

    def scaled(self, d1, d2, d3) -> "FactorTriple":
        """Scale the columns of each factor by the given vectors."""
        return FactorTriple(self.f1 * d1, self.f2 * d2, self.f3 * d3)


def unfold(t, mode: int) -> np.ndarray:
    """Mode-`mode` unfolding (matricization) of a third-order tensor.

    Parameters
    ----------
    t : array_like, shape (I1, I2, I3)
    mode : {1, 2, 3}

    Returns
    -------
    ndarray, shape (I_mode, prod of the other two dims)
    """
    t = _as_tensor3(t)
    ax = _check_mode(mode)
    return np.reshape(np.moveaxis(t, ax, 0), (t.shape[ax], -1), order="F")


def fold(m, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    ax = _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise DimensionError(f"dims must be three positive integers, got {dims}")
    m = np.asarray(m)
    if m.ndim == 1 and m.size == 1:
        m = m.reshape(1, 1)
    rest = [d for i, d in enumerate(dims) if i != ax]
    if m.ndim != 2 or m.shape != (dims[ax], rest[0] * rest[1]):
        raise DimensionError(
            f"cannot fold matrix of shape {m.shape} into {dims} along mode {mode}"
        )
    t = np.reshape(m, (dims[ax], rest[0], rest[1]), order="F")
    return np.moveaxis(t, 0, ax)


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Khatri-Rao product.

    Column ``r`` of the result is ``np.kron(a[:, r], b[:, r])``, so the row
    index of ``b`` varies fastest.
    """
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"Khatri-Rao operands need equal column counts, got {a.shape} and {b.shape}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def mode_product(t, m, mode: int) -> np.ndarray:
    """Mode-n product ``t x_n m`` for a matrix ``m`` of shape ``(J, I_n)``."""
    t = _as_tensor3(t)
    ax = _check_mode(mode)
    m = np.atleast_2d(np.asarray(m))
    if m.shape[1] != t.shape[ax]:
        raise DimensionError(
            f"matrix with {m.shape[1]} columns cannot act on mode {mode} of size {t.shape[ax]}"
        )
    out = np.tensordot(m, t, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def mode1_product(t, m) -> np.ndarray:
    """Mode-1 product ``t x_1 m``; ``unfold(result, 1) == m @ unfold(t, 1)``."""
    return mode_product(t, m, 1)


def from_factors(f: FactorTriple) -> np.ndarray:
    """Full tensor of a CP model: ``sum_r f1[:, r] o f2[:, r] o f3[:, r]``."""
    return np.einsum("ir,jr,kr->ijk", f.f1, f.f2, f.f3)


def tensor_norm(t) -> float:
    """Frobenius-type norm: square root of the sum of squared magnitudes."""
    return float(np.linalg.norm(np.ravel(t)))
