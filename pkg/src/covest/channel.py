"""Ground-truth multipath scenes and the channel tensor.

A scene holds ``L`` paths, each with an angle of arrival, a delay in units of
the sample period, and one complex gain per frame. The frequency response at
frame ``t`` and subcarrier ``k`` is

    h[t, k] = sum_l g[t, l] * c[k, l] * a(phi_l)

which makes the ``N_ant x K_sbcr x T_frm`` channel tensor a rank-``L`` CP
model with factors ``(A, C, G)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import FactorTriple, from_factors

__all__ = [
    "ChannelScene",
    "ClusterConfig",
    "SceneConfig",
    "array_response",
    "steering_matrix",
    "sinc",
    "sinc_derivative",
    "pulse_coeffs",
    "pulse_coeffs_derivative",
    "draw_scene",
    "channel_tensor",
    "fold_angle",
    "snr_to_sigma",
]


def snr_to_sigma(snr_db: float) -> float:
    """Noise standard deviation for a given SNR, with SNR defined as 1/sigma^2."""
    return float(10.0 ** (-snr_db / 20.0))


def fold_angle(phi):
    """Map angles onto [-pi/2, pi/2], where a ULA cannot tell phi from pi - phi."""
    return np.arcsin(np.clip(np.sin(phi), -1.0, 1.0))


def array_response(phi, n_ant: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """ULA response ``[1, e^{j 2 pi d sin(phi)}, ..., e^{j 2 pi d (N-1) sin(phi)}]``.

    Parameters
    ----------
    phi : float
        Angle of arrival in radians.
    n_ant : int
        Number of antennas.
    spacing_ratio : float
        Element spacing over wavelength.
    """
    n = np.arange(n_ant)
    return np.exp(2j * np.pi * spacing_ratio * n * np.sin(phi))


def steering_matrix(phis, n_ant: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Stack :func:`array_response` columns for a vector of angles."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    n = np.arange(n_ant)[:, None]
    return np.exp(2j * np.pi * spacing_ratio * n * np.sin(phis)[None, :])


def sinc(x):
    """Normalized sinc, sin(pi x) / (pi x)."""
    return np.sinc(x)


def sinc_derivative(x):
    """First derivative of the normalized sinc.

    Uses ``(cos(pi x) - sinc(x)) / x`` away from the origin and a Taylor
    expansion ``-pi^2 x / 3 + pi^4 x^3 / 30`` for ``|x| < 1e-4``.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = (np.cos(np.pi * xs) - np.sinc(xs)) / xs
    series = -(np.pi**2) * x / 3.0 + np.pi**4 * x**3 / 30.0
    return np.where(small, series, out)


def _check_delay(tau, n_cp):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or np.any(tau > n_cp):
        raise ValueError(f"delay must lie in [0, {n_cp}], got {tau}")
    return tau


def _dft_kernel(k_sbcr, n_cp):
    k = np.arange(k_sbcr)[:, None]
    d = np.arange(n_cp)[None, :]
    return np.exp(-2j * np.pi * k * d / k_sbcr)


def pulse_coeffs(tau, k_sbcr: int, n_cp: int) -> np.ndarray:
    """Per-subcarrier response of one delayed sinc pulse.

    Element ``k`` (0-based) is ``sum_{d=0}^{n_cp-1} sinc(d - tau) e^{-j 2 pi k d / K}``.
    ``tau`` may be a scalar (returns shape ``(K,)``) or a vector of delays
    (returns ``(K, L)``).
    """
    tau = _check_delay(tau, n_cp)
    d = np.arange(n_cp)
    taps = sinc(d[:, None] - np.atleast_1d(tau)[None, :])
    out = _dft_kernel(k_sbcr, n_cp) @ taps
    return out[:, 0] if tau.ndim == 0 else out


def pulse_coeffs_derivative(tau, k_sbcr: int, n_cp: int) -> np.ndarray:
    """Derivative of :func:`pulse_coeffs` with respect to the delay.

    Element ``k`` is ``-sum_d sinc'(d - tau) e^{-j 2 pi k d / K}``.
    """
    tau = _check_delay(tau, n_cp)
    d = np.arange(n_cp)
    taps = -sinc_derivative(d[:, None] - np.atleast_1d(tau)[None, :])
    out = _dft_kernel(k_sbcr, n_cp) @ taps
    return out[:, 0] if tau.ndim == 0 else out


@dataclass(frozen=True)
class ChannelScene:
    """Ground-truth parameters of a multipath channel.

    Attributes
    ----------
    aoas_rad : ndarray, shape (L,)
    delays : ndarray, shape (L,)
        Path delays in sample periods, within ``[0, n_cp]``.
    gains : ndarray, shape (T, L)
        Complex path gain per frame.
    n_ant, k_sbcr, t_frm, n_cp : int
    spacing_ratio : float
    cluster_of : ndarray or None
        Cluster index of each path for clustered scenes.
    """

    aoas_rad: np.ndarray
    delays: np.ndarray
    gains: np.ndarray
    n_ant: int
    k_sbcr: int
    t_frm: int
    n_cp: int
    spacing_ratio: float = 0.5
    cluster_of: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        aoas = np.atleast_1d(np.asarray(self.aoas_rad, dtype=float))
        delays = np.atleast_1d(np.asarray(self.delays, dtype=float))
        gains = np.asarray(self.gains, dtype=complex)
        if gains.ndim == 1:
            gains = gains[:, None]
        n_paths = aoas.size
        if n_paths < 1 or delays.size != n_paths or gains.shape != (self.t_frm, n_paths):
            raise ValueError(
                f"inconsistent scene: {aoas.size} AoAs, {delays.size} delays, "
                f"gains {gains.shape}, t_frm={self.t_frm}"
            )
        _check_delay(delays, self.n_cp)
        for arr in (aoas, delays, gains):
            arr.setflags(write=False)
        object.__setattr__(self, "aoas_rad", aoas)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "gains", gains)

    @property
    def n_paths(self) -> int:
        return self.aoas_rad.size

    def steering(self) -> np.ndarray:
        return steering_matrix(self.aoas_rad, self.n_ant, self.spacing_ratio)

    def freq_factor(self) -> np.ndarray:
        return pulse_coeffs(self.delays, self.k_sbcr, self.n_cp)

    def freq_factor_derivative(self) -> np.ndarray:
        return pulse_coeffs_derivative(self.delays, self.k_sbcr, self.n_cp)


@dataclass(frozen=True)
class ClusterConfig:
    """Clustered-channel layout: clusters of subrays sharing one delay.

    ``angular_spread_deg`` is used as the scale of the Laplacian subray offsets.
    """

    n_clusters: int
    n_subrays: int
    angular_spread_deg: float = 2.0

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_subrays < 1:
            raise ValueError("n_clusters and n_subrays must be positive")
        if self.angular_spread_deg <= 0:
            raise ValueError("angular spread must be positive")


@dataclass(frozen=True)
class SceneConfig:
    """Dimensions and path layout for random scene generation.

    Exactly one of ``n_paths`` or ``clusters`` is used; ``clusters`` wins if
    both are given. ``n_cp`` defaults to ``k_sbcr // 4``.
    """

    n_ant: int
    k_sbcr: int
    t_frm: int
    n_paths: int = 1
    n_cp: int | None = None
    spacing_ratio: float = 0.5
    clusters: ClusterConfig | None = None

    @property
    def cp_len(self) -> int:
        return self.n_cp if self.n_cp is not None else max(1, self.k_sbcr // 4)

    @property
    def total_paths(self) -> int:
        if self.clusters is not None:
            return self.clusters.n_clusters * self.clusters.n_subrays
        return self.n_paths


def _uniform_angle(rng, size):
    # (-pi, pi]
    return np.pi - 2.0 * np.pi * rng.random(size)


def _wrap(phi):
    return np.pi - np.mod(np.pi - phi, 2.0 * np.pi)


def draw_gains(rng, t_frm, n_paths):
    """i.i.d. CN(0, 1/L) path gains, shape ``(t_frm, n_paths)``."""
    scale = np.sqrt(0.5 / n_paths)
    return scale * (rng.standard_normal((t_frm, n_paths)) + 1j * rng.standard_normal((t_frm, n_paths)))


def draw_scene(cfg: SceneConfig, rng: np.random.Generator) -> ChannelScene:
    """Draw a random scene.

    AoAs are uniform on (-pi, pi], delays uniform on ``[0, n_cp]`` and gains
    i.i.d. CN(0, 1/L). In clustered mode the cluster centres are uniform,
    subray offsets are Laplacian and every subray of a cluster shares the
    cluster's delay.
    """
    n_cp = cfg.cp_len
    if cfg.clusters is None:
        n_paths = cfg.n_paths
        if n_paths < 1:
            raise ValueError("a scene needs at least one path")
        aoas = _uniform_angle(rng, n_paths)
        delays = n_cp * rng.random(n_paths)
        cluster_of = None
    else:
        cl = cfg.clusters
        centres = _uniform_angle(rng, cl.n_clusters)
        cdelays = n_cp * rng.random(cl.n_clusters)
        offsets = rng.laplace(0.0, np.deg2rad(cl.angular_spread_deg), (cl.n_clusters, cl.n_subrays))
        aoas = _wrap(centres[:, None] + offsets).ravel()
        delays = np.repeat(cdelays, cl.n_subrays)
        cluster_of = np.repeat(np.arange(cl.n_clusters), cl.n_subrays)
        n_paths = aoas.size
    gains = draw_gains(rng, cfg.t_frm, n_paths)
    return ChannelScene(
        aoas_rad=aoas,
        delays=delays,
        gains=gains,
        n_ant=cfg.n_ant,
        k_sbcr=cfg.k_sbcr,
        t_frm=cfg.t_frm,
        n_cp=n_cp,
        spacing_ratio=cfg.spacing_ratio,
        cluster_of=cluster_of,
    )


def channel_tensor(scene: ChannelScene) -> tuple[np.ndarray, FactorTriple]:
    """Channel tensor ``H = [[A, C, G]]`` and its factor triple."""
    factors = FactorTriple(scene.steering(), scene.freq_factor(), scene.gains)
    return from_factors(factors), factors
