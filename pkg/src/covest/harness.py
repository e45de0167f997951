"""Seeded Monte Carlo sweeps over SNR, frame count or path count.

Every trial draws its scene, combiner and noise from a stream keyed on
``(base_seed, sweep value, trial index)``, so results do not depend on how
trials are scheduled. All enabled methods see the same measurement tensor.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .acquisition import ConfigurationError, draw_rf_combiner, measure, whitened_combiner
from .baselines import build_dictionary, music_estimate, somp_estimate
from .channel import ChannelScene, ClusterConfig, SceneConfig, channel_tensor, draw_gains, draw_scene, snr_to_sigma
from .covariance import aoa_mse, rpe, true_covariance
from .cpd import AlsOptions
from .crlb import crlb_phi, fim_blocks, music_crlb
from .estimator import estimate_covariance

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "TrialRecord",
    "trial_rng",
    "build_scene",
    "run_trial",
    "run_trials",
    "aggregate",
    "sweep",
    "write_results",
]

logger = logging.getLogger(__name__)

METHODS = ("cpd", "music", "somp", "crlb", "music_crlb")
SWEEP_AXES = ("snr_db", "t_frm", "l_ch")
SCENE_MODES = ("discrete", "clustered", "fixed")
# (method, metric) pairs in output order
COLUMNS = (
    ("cpd", "eta"),
    ("cpd", "aoa_mse"),
    ("music", "eta"),
    ("music", "aoa_mse"),
    ("somp", "eta"),
    ("crlb", "crlb_phi"),
    ("music_crlb", "crlb_phi"),
)
SOMP_NOTE = (
    "The compressed-sensing baseline is plain SOMP on a sin-uniform grid "
    "(default 2*n_ant atoms) with an LS-Gram covariance, standing in for the "
    "more advanced covariance-sensing algorithm."
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a sweep.

    ``sweep_axis`` names the field that takes each of ``sweep_values``:
    ``snr_db``, ``t_frm`` or ``l_ch`` (number of paths, or clusters in
    clustered mode). Scene modes: ``discrete`` draws ``l_ch`` random paths,
    ``clustered`` draws ``l_ch`` clusters of ``n_subrays`` rays, ``fixed``
    uses ``aoas_deg`` and ``delays`` with random gains.
    """

    n_ant: int = 64
    m_rf: int = 8
    k_sbcr: int = 128
    t_frm: int = 20
    n_cp: int | None = None
    spacing_ratio: float = 0.5
    snr_db: float = 0.0
    l_ch: int = 6
    scene_mode: str = "discrete"
    n_subrays: int = 10
    angular_spread_deg: float = 2.0
    aoas_deg: tuple[float, ...] | None = None
    delays: tuple[float, ...] | None = None
    sweep_axis: str = "snr_db"
    sweep_values: tuple[float, ...] = (0.0,)
    methods: tuple[str, ...] = ("cpd", "music", "somp", "crlb")
    n_trials: int = 10
    base_seed: int = 0
    als_max_iters: int = 500
    als_rel_tol: float = 1e-8
    als_restarts: int = 3
    als_init: str = "svd_warm"
    music_grid: int = 2048
    somp_grid: int | None = None
    workers: int = 1
    out: str = "covest-out"

    def __post_init__(self):
        for name in ("aoas_deg", "delays", "sweep_values", "methods"):
            v = getattr(self, name)
            if v is not None and not isinstance(v, tuple):
                object.__setattr__(self, name, tuple(v))
        self.validate()

    def validate(self):
        if not self.sweep_values:
            raise ConfigurationError("sweep_values must be non-empty")
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be >= 1")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigurationError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if self.scene_mode not in SCENE_MODES:
            raise ConfigurationError(f"scene_mode must be one of {SCENE_MODES}, got {self.scene_mode!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigurationError(f"unknown or empty methods {bad}; choose from {METHODS}")
        if not 1 <= self.m_rf <= self.n_ant:
            raise ConfigurationError("need 1 <= m_rf <= n_ant")
        if min(self.k_sbcr, self.t_frm, self.l_ch, self.n_subrays) < 1:
            raise ConfigurationError("k_sbcr, t_frm, l_ch and n_subrays must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be non-negative")
        if self.scene_mode == "fixed":
            if self.aoas_deg is None or self.delays is None or len(self.aoas_deg) != len(self.delays):
                raise ConfigurationError("fixed scenes need aoas_deg and delays of equal length")
            if self.sweep_axis == "l_ch":
                raise ConfigurationError("l_ch cannot be swept for a fixed scene")
        if self.sweep_axis in ("t_frm", "l_ch") and any(v != int(v) or v < 1 for v in self.sweep_values):
            raise ConfigurationError(f"{self.sweep_axis} values must be positive integers")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def with_value(self, value) -> "ExperimentConfig":
        """Copy with the sweep axis set to ``value``."""
        if self.sweep_axis == "snr_db":
            return replace(self, snr_db=float(value))
        return replace(self, **{self.sweep_axis: int(value)})

    @property
    def n_paths(self) -> int:
        if self.scene_mode == "fixed":
            return len(self.aoas_deg)
        if self.scene_mode == "clustered":
            return self.l_ch * self.n_subrays
        return self.l_ch

    def als_options(self, rank: int) -> AlsOptions:
        return AlsOptions(
            rank=rank,
            max_iters=self.als_max_iters,
            rel_tol=self.als_rel_tol,
            n_restarts=self.als_restarts,
            init_mode=self.als_init,
        )


@dataclass
class TrialRecord:
    """Outcome of one trial; ``values`` maps ``(method, metric)`` to a float or ``None``."""

    sweep_value: float
    trial_index: int
    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    als_iterations: int | None = None
    als_residual: float | None = None
    als_converged: bool | None = None
    wall_time_s: float = 0.0


def trial_rng(base_seed: int, sweep_value, trial_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for the (scene, combiner, noise) draw and for ALS initialization."""
    key = zlib.crc32(repr(float(sweep_value)).encode())
    ss = np.random.SeedSequence([int(base_seed), key, int(trial_index)])
    data_ss, als_ss = ss.spawn(2)
    return np.random.default_rng(data_ss), np.random.default_rng(als_ss)


def build_scene(cfg: ExperimentConfig, rng: np.random.Generator) -> ChannelScene:
    """Draw the ground-truth scene for one trial of ``cfg``."""
    if cfg.scene_mode == "fixed":
        n_cp = cfg.n_cp if cfg.n_cp is not None else max(1, cfg.k_sbcr // 4)
        phi = np.deg2rad(np.asarray(cfg.aoas_deg, dtype=float))
        return ChannelScene(
            aoas_rad=phi,
            delays=np.asarray(cfg.delays, dtype=float),
            gains=draw_gains(rng, cfg.t_frm, phi.size),
            n_ant=cfg.n_ant,
            k_sbcr=cfg.k_sbcr,
            t_frm=cfg.t_frm,
            n_cp=n_cp,
            spacing_ratio=cfg.spacing_ratio,
        )
    clusters = None
    if cfg.scene_mode == "clustered":
        clusters = ClusterConfig(cfg.l_ch, cfg.n_subrays, cfg.angular_spread_deg)
    scfg = SceneConfig(
        n_ant=cfg.n_ant,
        k_sbcr=cfg.k_sbcr,
        t_frm=cfg.t_frm,
        n_paths=cfg.l_ch,
        n_cp=cfg.n_cp,
        spacing_ratio=cfg.spacing_ratio,
        clusters=clusters,
    )
    return draw_scene(scfg, rng)


_RECOVERABLE = (ArithmeticError, ValueError, np.linalg.LinAlgError)


def run_trial(cfg: ExperimentConfig, sweep_value, trial_index: int) -> TrialRecord:
    """Run every enabled method on one freshly drawn scene and measurement."""
    start = time.perf_counter()
    c = cfg.with_value(sweep_value)
    rng, als_rng = trial_rng(cfg.base_seed, sweep_value, trial_index)
    scene = build_scene(c, rng)
    comb = whitened_combiner(draw_rf_combiner(c.n_ant, c.m_rf, rng))
    sigma = snr_to_sigma(c.snr_db) if math.isfinite(c.snr_db) else 0.0
    h, factors = channel_tensor(scene)
    y = measure(h, comb, sigma, rng)
    r_true = true_covariance(factors)
    clustered = c.scene_mode == "clustered"
    # clustered scenes: CPD/SOMP use M_RF components, MUSIC the cluster count
    rank = c.m_rf if clustered else scene.n_paths
    music_l = c.l_ch if clustered else scene.n_paths

    rec = TrialRecord(sweep_value=float(sweep_value), trial_index=int(trial_index))
    for method in METHODS:
        if method not in c.methods:
            continue
        try:
            if method == "cpd":
                est = estimate_covariance(y, comb, rank, als_rng, c.als_options(rank), c.spacing_ratio)
                rec.values[("cpd", "eta")] = rpe(r_true, est.covariance, c.m_rf).eta
                if not clustered:
                    rec.values[("cpd", "aoa_mse")] = aoa_mse(scene.aoas_rad, est.aoas)
                rec.als_iterations = est.diagnostics.iterations
                rec.als_residual = est.diagnostics.final_residual
                rec.als_converged = est.diagnostics.converged
            elif method == "music":
                mu = music_estimate(y, comb, music_l, c.music_grid, c.spacing_ratio)
                rec.values[("music", "eta")] = rpe(r_true, mu.covariance, c.m_rf).eta
                if not clustered:
                    rec.values[("music", "aoa_mse")] = aoa_mse(scene.aoas_rad, mu.aoas)
            elif method == "somp":
                dic = build_dictionary(c.n_ant, c.somp_grid, c.spacing_ratio)
                so = somp_estimate(y, comb, dic, rank)
                rec.values[("somp", "eta")] = rpe(r_true, so.covariance, c.m_rf).eta
            elif sigma == 0:
                raise ValueError("bounds are undefined without noise")
            elif method == "crlb":
                rec.values[("crlb", "crlb_phi")] = float(np.mean(crlb_phi(fim_blocks(scene, comb, sigma))))
            elif method == "music_crlb":
                rec.values[("music_crlb", "crlb_phi")] = float(np.mean(music_crlb(scene, comb, sigma)))
        except _RECOVERABLE as exc:
            logger.debug("value %s trial %d: %s failed: %s", sweep_value, trial_index, method, exc)
            rec.errors[method] = f"{type(exc).__name__}: {exc}"
    rec.wall_time_s = time.perf_counter() - start
    return rec


def _run_one(args):
    cfg, value, idx = args
    return run_trial(cfg, value, idx)


def run_trials(cfg: ExperimentConfig, workers: int | None = None) -> list[TrialRecord]:
    """All ``sweep_values x n_trials`` records, ordered by (value, trial)."""
    workers = cfg.workers if workers is None else workers
    tasks = [(cfg, v, i) for v in cfg.sweep_values for i in range(cfg.n_trials)]
    if workers <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves task order, so scheduling cannot reorder records
        return list(pool.map(_run_one, tasks, chunksize=1))


def aggregate(cfg: ExperimentConfig, records: list[TrialRecord]) -> list[dict]:
    """Per (value, method, metric) summary rows over the non-null trial values."""
    rows = []
    for v in cfg.sweep_values:
        recs = [r for r in records if r.sweep_value == float(v)]
        for key in COLUMNS:
            if key[0] not in cfg.methods:
                continue
            vals = np.array([r.values[key] for r in recs if r.values.get(key) is not None], dtype=float)
            row = {"sweep_value": float(v), "method": key[0], "metric": key[1], "n_effective": int(vals.size)}
            if vals.size:
                p10, med, p90 = np.percentile(vals, [10, 50, 90])
                row.update(mean=float(vals.mean()), median=float(med), p10=float(p10), p90=float(p90))
            else:
                row.update(mean=None, median=None, p10=None, p90=None)
            rows.append(row)
    return rows


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


RESULT_FIELDS = ("sweep_value", "method", "metric", "mean", "median", "p10", "p90", "n_effective")


def _version() -> str:
    from . import __version__

    return f"covest {__version__}"


def write_results(cfg: ExperimentConfig, records: list[TrialRecord], out_dir) -> Path:
    """Write ``results.csv``, ``trials.csv`` and ``meta.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = aggregate(cfg, records)
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in RESULT_FIELDS])

    keys = [k for k in COLUMNS if k[0] in cfg.methods]
    with open(out / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["sweep_value", "trial_index"]
            + [f"{m}_{k}" for m, k in keys]
            + ["als_iterations", "als_residual", "als_converged", "wall_time_s", "errors"]
        )
        for r in records:
            w.writerow(
                [_fmt(r.sweep_value), r.trial_index]
                + [_fmt(r.values.get(k)) for k in keys]
                + [_fmt(r.als_iterations), _fmt(r.als_residual), _fmt(r.als_converged), f"{r.wall_time_s:.4f}"]
                + ["; ".join(f"{m}: {e}" for m, e in sorted(r.errors.items()))]
            )

    meta = {
        "version": _version(),
        "config": cfg.to_dict(),
        "n_records": len(records),
        "decisions": [
            SOMP_NOTE,
            "SNR is 1/sigma^2 with CN(0, 1/L) path gains and a whitened combiner.",
            "Clustered scenes: CPD and SOMP use M_RF components, MUSIC uses the cluster count.",
            "Per-trial streams are keyed on (base_seed, crc32(repr(value)), trial_index).",
        ],
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def sweep(cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> list[dict]:
    """Run the full sweep, write the output files and return the aggregate rows."""
    records = run_trials(cfg, workers)
    write_results(cfg, records, cfg.out if out_dir is None else out_dir)
    return aggregate(cfg, records)
