"""Tensor basics: unfoldings, Khatri-Rao products and rank-one sums.

Run with ``python3 demos/01_tensor_basics.py``.
"""

import numpy as np

from covest import FactorTriple, fold, from_factors, khatri_rao, unfold

rng = np.random.default_rng(0)

# %% A rank-2 tensor from three factor matrices
# Each column triple (b_r, c_r, g_r) is one rank-one term b_r o c_r o g_r.

b = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
c = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
y = from_factors(FactorTriple(b, c, g))
print("tensor shape:", y.shape)

# %% Unfoldings
# The mode-1 unfolding stacks the mode-1 fibres as columns. For a CP tensor it
# factors as B (G kr C)^T, which is what ALS exploits one mode at a time.

y1 = unfold(y, 1)
print("mode-1 unfolding:", y1.shape)
print("Y(1) == B (G kr C)^T:", np.allclose(y1, b @ khatri_rao(g, c).T))
print("Y(2) == C (G kr B)^T:", np.allclose(unfold(y, 2), c @ khatri_rao(g, b).T))
print("Y(3) == G (C kr B)^T:", np.allclose(unfold(y, 3), g @ khatri_rao(c, b).T))

# %% fold undoes unfold

print("fold(unfold(Y)) == Y:", all(np.array_equal(fold(unfold(y, m), m, y.shape), y) for m in (1, 2, 3)))

# %% Khatri-Rao product
# Column r is kron(a_r, b_r), so the row count multiplies and the column count stays.

kr = khatri_rao(g, c)
print("G kr C:", kr.shape, "column 0 is kron(g_0, c_0):", np.allclose(kr[:, 0], np.kron(g[:, 0], c[:, 0])))

# %% The CP representation is not unique
# Scaling a column in one factor and unscaling it in another, or permuting
# all three factors together, gives the same tensor. Any estimate is only
# meaningful up to these ambiguities.

s = np.array([2.0 - 1j, 0.5j])
perm = [1, 0]
alt = FactorTriple(b[:, perm] * s[perm], c[:, perm] / s[perm], g[:, perm])
print("rescaled and permuted factors, same tensor:", np.allclose(from_factors(alt), y))
