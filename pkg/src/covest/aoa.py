"""Angle-of-arrival recovery from an estimated effective steering column.

Given ``b_hat ~ delta * W^H a(phi)``, the angle is found by minimizing the
angle between ``b_hat`` and ``W^H a(z)`` over ``z = exp(j 2 pi d sin(phi))``.
The numerator of that objective is a Laurent polynomial in ``z``; its roots
come in pairs ``(w, 1/conj(w))`` and the candidates are the ``N - 1`` roots
closest to the origin, pushed onto the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquisition import HybridCombiner, NumericalError

__all__ = [
    "AoaEstimate",
    "RootFindingError",
    "aoa_polynomial_coeffs",
    "polynomial_roots",
    "recover_aoa",
    "recover_aoas",
    "z_to_angle",
]


class RootFindingError(NumericalError):
    """Root finder failed; ``coeffs`` holds the offending polynomial."""

    def __init__(self, message, coeffs):
        super().__init__(message)
        self.coeffs = coeffs


@dataclass(frozen=True)
class AoaEstimate:
    phi_hat: float
    z_hat: complex
    delta_hat: complex


def z_to_angle(z, spacing_ratio: float = 0.5):
    """Angle in [-pi/2, pi/2] whose array phase step is ``arg(z)``."""
    s = np.angle(z) / (2.0 * np.pi * spacing_ratio)
    return np.arcsin(np.clip(s, -1.0, 1.0))


def aoa_polynomial_coeffs(b_hat, w) -> np.ndarray:
    """Coefficients of ``a(z)^H Q a(z)`` with ``Q = W (||b||^2 I - b b^H) W^H``.

    Returns a vector of length ``2N - 1`` whose entry ``i`` is the coefficient
    of ``z**(i - N + 1)``, i.e. ordered from ``z^{-(N-1)}`` up to ``z^{N-1}``.
    The coefficient of ``z^m`` is the sum of the ``m``-th diagonal of ``Q``
    (entries ``Q[n1, n2]`` with ``n2 - n1 = m``), so ``coef(-m) = conj(coef(m))``.
    """
    b_hat = np.asarray(b_hat, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex)
    nb2 = np.vdot(b_hat, b_hat).real
    if nb2 == 0:
        raise ValueError("b_hat must be non-zero")
    wb = w @ b_hat
    q = nb2 * (w @ w.conj().T) - np.outer(wb, wb.conj())
    n = q.shape[0]
    return np.array([np.trace(q, offset=m) for m in range(-n + 1, n)])


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of ``sum_m coeffs[m] z^m`` via companion-matrix eigenvalues."""
    coeffs = np.asarray(coeffs)
    # np.roots expects the highest power first
    try:
        roots = np.roots(coeffs[::-1])
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"root finding failed: {exc}", coeffs) from exc
    if not np.all(np.isfinite(roots)):
        raise RootFindingError("root finding produced non-finite roots", coeffs)
    return roots


def _match_metric(b_hat, w, z):
    n = w.shape[0]
    a = z[None, :] ** np.arange(n)[:, None]
    wa = w.conj().T @ a
    num = np.abs(b_hat.conj() @ wa) ** 2
    den = np.sum(np.abs(wa) ** 2, axis=0)
    return num / np.maximum(den, np.finfo(float).tiny), num


def _trim_zero_ends(coeffs, rtol=1e-14):
    # symmetric ends below rtol * max drop the degree (roots at 0 and infinity)
    top = np.max(np.abs(coeffs))
    while coeffs.size > 1 and max(abs(coeffs[0]), abs(coeffs[-1])) <= rtol * top:
        coeffs = coeffs[1:-1]
    return coeffs


def _polish_on_circle(coeffs, z, iters: int = 8):
    """Newton steps on ``p(e^{j psi})`` starting from ``arg(z)``.

    A noiseless column puts a double root on the unit circle, which the
    companion-matrix eigensolver only resolves to about ``sqrt(eps)``; the
    minimum of ``p`` along the circle pins it down to machine precision.
    """
    n = (coeffs.size + 1) // 2
    m = np.arange(-n + 1, n)

    def p(psi, order=0):
        return np.real(np.sum(coeffs * (1j * m) ** order * np.exp(1j * m * psi)))

    psi = np.angle(z)
    val = p(psi)
    for _ in range(iters):
        d2 = p(psi, 2)
        if d2 <= 0:
            break
        step = p(psi, 1) / d2
        new = psi - step
        new_val = p(new)
        if new_val > val:
            break
        psi, val = new, new_val
        if abs(step) < 1e-15:
            break
    return complex(np.exp(1j * psi))


def _unit_circle_grid(n):
    return np.exp(2j * np.pi * np.arange(8 * n) / (8 * n))


def recover_aoa(b_hat, comb: HybridCombiner | np.ndarray, spacing_ratio: float = 0.5) -> AoaEstimate:
    """Estimate the AoA and complex scaling behind one factor column.

    Parameters
    ----------
    b_hat : array_like, shape (M,)
        Column of the mode-1 CP factor.
    comb : HybridCombiner or ndarray
        The combiner, or directly its effective matrix ``W`` of shape (N, M).
    spacing_ratio : float
        Element spacing over wavelength.

    Notes
    -----
    With a single RF chain every angle fits equally well and the polynomial
    vanishes identically; the angle then comes from the tie-break alone
    (largest ``|b^H W^H a(z)|``) over a fine grid on the unit circle.
    """
    w = comb.w if isinstance(comb, HybridCombiner) else np.asarray(comb, dtype=complex)
    b_hat = np.asarray(b_hat, dtype=complex).ravel()
    n = w.shape[0]
    if n == 1:
        z_hat = 1.0 + 0j
    else:
        coeffs = aoa_polynomial_coeffs(b_hat, w)
        scale = np.vdot(b_hat, b_hat).real * np.linalg.norm(w) ** 2
        if np.max(np.abs(coeffs)) <= 1e-12 * scale:
            cand = _unit_circle_grid(n)
        else:
            coeffs = _trim_zero_ends(coeffs)
            roots = polynomial_roots(coeffs)
            if roots.size == 0:
                raise RootFindingError("polynomial has no roots", coeffs)
            # half the roots, nearest the origin; on-circle pairs contribute one each
            order = np.argsort(np.abs(roots), kind="stable")
            cand = roots[order[: max(1, roots.size // 2)]]
            cand = cand[np.abs(cand) > 0]
            if cand.size == 0:
                raise RootFindingError("all candidate roots are at the origin", coeffs)
            near = np.abs(np.abs(cand) - 1.0) <= 1e-6
            cand = cand / np.abs(cand)
            cand = np.array([_polish_on_circle(coeffs, z) if ok else z for z, ok in zip(cand, near)])
        metric, num = _match_metric(b_hat, w, cand)
        if not np.all(np.isfinite(metric)):
            raise RootFindingError("non-finite selection metric", cand)
        best = np.flatnonzero(metric >= metric.max() * (1 - 1e-12))
        z_hat = complex(cand[best[np.argmax(num[best])]])
    a_hat = z_hat ** np.arange(n)
    wa = w.conj().T @ a_hat
    delta = np.vdot(wa, b_hat) / np.vdot(wa, wa).real
    return AoaEstimate(phi_hat=float(z_to_angle(z_hat, spacing_ratio)), z_hat=z_hat, delta_hat=complex(delta))


def recover_aoas(b_hat_matrix, comb, spacing_ratio: float = 0.5) -> list[AoaEstimate]:
    """Apply :func:`recover_aoa` to every column."""
    b_hat_matrix = np.atleast_2d(np.asarray(b_hat_matrix))
    return [recover_aoa(b_hat_matrix[:, i], comb, spacing_ratio) for i in range(b_hat_matrix.shape[1])]
