"""Particle-based Monte Carlo oracle for the absorption probabilities.

Each trial walks one molecule from the origin in Gaussian steps of standard
deviation sqrt(2*D*dt) per coordinate; the walk stops at the first step
endpoint inside any receiver. Empirical absorption CDFs at the requested
record times estimate the same quantities the analytical models compute.

Determinism contract: trial ``i`` (globally numbered) always consumes the
stream PCG64(SeedSequence(seed, spawn_key=(i,))). Results are therefore
bit-identical for a given (seed, config, geometry) no matter how many
workers run the trials or which backend (compiled or numpy) executes them.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..channel import hit_n, hit_three
from ..errors import ConfigError, GeometryError, StepSizeWarning
from ..geometry import Receiver, SystemGeometry, validate
from ..laplace import InversionConfig
from ._backends import BACKEND, run_trials

__all__ = [
    "BACKEND",
    "SimConfig",
    "SimEstimate",
    "simulate",
    "GridFamily",
    "ErrorMap",
    "estimate_error_map",
]

# 95% two-sided normal quantile for the confidence halfwidths.
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    """Step size, horizon, trial count, seed and CDF sampling times."""

    dt: float
    t_max: float
    trials: int
    seed: int
    record_times: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (self.dt > 0) or not math.isfinite(self.dt):
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")
        if not (self.t_max > 0) or not math.isfinite(self.t_max):
            raise ConfigError(f"t_max must be positive and finite, got {self.t_max}")
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.record_times is None:
            object.__setattr__(self, "record_times", (self.t_max,))
        else:
            times = tuple(float(t) for t in self.record_times)
            if not times:
                raise ConfigError("record_times must not be empty")
            if any(not (0 < t <= self.t_max) or not math.isfinite(t) for t in times):
                raise ConfigError(f"record_times must lie in (0, t_max], got {times}")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ConfigError(f"record_times must be strictly ascending, got {times}")
            object.__setattr__(self, "record_times", times)
        if self.step_count(self.t_max) < 1:
            raise ConfigError(f"t_max={self.t_max} is below one step of dt={self.dt}")

    def step_count(self, t: float) -> int:
        """Number of whole steps completed by time ``t`` (k*dt <= t)."""
        # The epsilon absorbs binary representation error in t/dt for grid
        # times that are exact multiples of dt.
        return int(math.floor(t / self.dt + 1e-9))


@dataclass(frozen=True, eq=False)
class SimEstimate:
    """Absorption counts per receiver at each record time, with 95% CIs.

    ``hits[i, k]`` counts trials absorbed by receiver i+1 within
    record_times[k]; ``escape_count[k]`` counts trials never absorbed within
    the full horizon (constant across k by construction; escape is decided
    at t_max). Trials absorbed after record_times[k] but before t_max are the
    still-diffusing remainder.
    """

    record_times: tuple[float, ...]
    hits: np.ndarray
    trials: int
    escape_count: np.ndarray
    ci_halfwidth: np.ndarray

    def __post_init__(self):
        hits = np.asarray(self.hits, dtype=np.int64)
        escapes = np.asarray(self.escape_count, dtype=np.int64)
        ci = np.asarray(self.ci_halfwidth, dtype=float)
        if hits.ndim != 2 or hits.shape[1] != len(self.record_times):
            raise ValueError(f"hits shape {hits.shape} does not match record times")
        if np.any(hits.sum(axis=0) > self.trials):
            raise ValueError("absorbed counts exceed the number of trials")
        if hits.shape[1] > 1 and np.any(np.diff(hits, axis=1) < 0):
            raise ValueError("absorption counts must be nondecreasing in time")
        for arr in (hits, escapes, ci):
            arr.setflags(write=False)
        object.__setattr__(self, "hits", hits)
        object.__setattr__(self, "escape_count", escapes)
        object.__setattr__(self, "ci_halfwidth", ci)
        object.__setattr__(self, "record_times", tuple(self.record_times))

    @property
    def probs(self) -> np.ndarray:
        """Empirical absorption CDF per receiver."""
        return self.hits / self.trials

    @property
    def still_diffusing(self) -> np.ndarray:
        """Trials not yet absorbed at each record time but absorbed by t_max."""
        return self.trials - self.hits.sum(axis=0) - self.escape_count


def _run_range(centers, radius_a, sigma, n_steps, seed, start_trial, count):
    return run_trials(centers, radius_a, sigma, n_steps, seed, start_trial, count)


def _split_ranges(total: int, workers: int) -> list[tuple[int, int]]:
    """Contiguous (start, count) chunks covering range(total)."""
    workers = max(1, min(workers, total))
    base, extra = divmod(total, workers)
    ranges = []
    start = 0
    for w in range(workers):
        count = base + (1 if w < extra else 0)
        if count:
            ranges.append((start, count))
        start += count
    return ranges


def simulate(
    geom: SystemGeometry,
    cfg: SimConfig,
    workers: int = 1,
    trace=None,
    trial_offset: int = 0,
) -> SimEstimate:
    """Monte Carlo estimate of every receiver's absorption CDF.

    ``workers`` only changes how trials are batched across processes, never
    the result. ``trial_offset`` shifts the global trial numbering so that
    disjoint runs (e.g. the cells of an error map) consume disjoint streams.
    ``trace``, if given, is a file path receiving one CSV row per trial:
    trial, receiver_index (-1 for escape), absorption_time (nan for escape).
    """
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    if not isinstance(trial_offset, int) or trial_offset < 0:
        raise ConfigError(f"trial_offset must be a nonnegative integer, got {trial_offset!r}")
    sigma = math.sqrt(2.0 * geom.diffusion_d * cfg.dt)
    if sigma >= geom.radius_a / 2.0:
        warnings.warn(
            f"step deviation sqrt(2*D*dt)={sigma:.4g} is not small against the "
            f"receiver radius a={geom.radius_a:.4g}; absorption will be "
            "underdetected. Decrease dt.",
            StepSizeWarning,
            stacklevel=2,
        )
    centers = geom.centers()
    n_steps = cfg.step_count(cfg.t_max)
    ranges = _split_ranges(cfg.trials, workers)
    if len(ranges) == 1:
        results = [_run_range(centers, geom.radius_a, sigma, n_steps, cfg.seed, trial_offset, cfg.trials)]
    else:
        with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
            futures = [
                pool.submit(
                    _run_range,
                    centers,
                    geom.radius_a,
                    sigma,
                    n_steps,
                    cfg.seed,
                    trial_offset + start,
                    count,
                )
                for start, count in ranges
            ]
            results = [f.result() for f in futures]
    hit_idx = np.concatenate([r[0] for r in results])
    hit_step = np.concatenate([r[1] for r in results])

    if trace is not None:
        _write_trace(trace, hit_idx, hit_step, cfg.dt, trial_offset)

    record_steps = np.array([cfg.step_count(t) for t in cfg.record_times], dtype=np.int64)
    n_rec = geom.n
    hits = np.empty((n_rec, len(record_steps)), dtype=np.int64)
    for i in range(n_rec):
        steps_i = np.sort(hit_step[hit_idx == i])
        hits[i] = np.searchsorted(steps_i, record_steps, side="right")
    escapes = np.full(len(record_steps), int(np.count_nonzero(hit_idx == -1)), dtype=np.int64)
    p_hat = hits / cfg.trials
    ci = _Z95 * np.sqrt(p_hat * (1.0 - p_hat) / cfg.trials)
    return SimEstimate(
        record_times=cfg.record_times,
        hits=hits,
        trials=cfg.trials,
        escape_count=escapes,
        ci_halfwidth=ci,
    )


def _write_trace(trace, hit_idx: np.ndarray, hit_step: np.ndarray, dt: float, offset: int) -> None:
    with open(trace, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "receiver_index", "absorption_time"])
        for i in range(hit_idx.size):
            if hit_idx[i] < 0:
                writer.writerow([offset + i, -1, "nan"])
            else:
                writer.writerow([offset + i, int(hit_idx[i]) + 1, "%.12g" % (hit_step[i] * dt)])


@dataclass(frozen=True, eq=False)
class GridFamily:
    """One receiver of a base scene relocated over a y,z grid.

    The moving receiver keeps its x coordinate; every (y, z) cell replaces
    its other two coordinates. Cells whose scene violates the geometric
    invariants (overlap) are excluded rather than evaluated.
    """

    base: SystemGeometry
    moving: int
    y_values: tuple[float, ...]
    z_values: tuple[float, ...]

    def __post_init__(self):
        self.base.receiver(self.moving)
        for name in ("y_values", "z_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ConfigError(f"{name} must not be empty")
            if any(not math.isfinite(v) for v in vals):
                raise ConfigError(f"{name} must be finite, got {vals}")
            object.__setattr__(self, name, vals)

    def cell(self, iy: int, iz: int) -> SystemGeometry:
        """The geometry with the moving receiver at grid cell (iy, iz)."""
        moved_x = float(self.base.receiver(self.moving).center[0])
        receivers = []
        for rec in self.base.receivers:
            if rec.index == self.moving:
                receivers.append(
                    Receiver(center=(moved_x, self.y_values[iy], self.z_values[iz]), index=rec.index)
                )
            else:
                receivers.append(rec)
        return SystemGeometry(
            receivers=tuple(receivers),
            radius_a=self.base.radius_a,
            diffusion_d=self.base.diffusion_d,
        )


@dataclass(frozen=True, eq=False)
class ErrorMap:
    """|analytical - simulated| for the moving receiver over the grid.

    ``excluded`` marks infeasible cells (NaN everywhere in the value
    arrays); ``warned`` marks feasible cells whose geometry carries accuracy
    warnings (close receivers or line-of-sight shadowing), where the model
    is documented to degrade.
    """

    y_values: tuple[float, ...]
    z_values: tuple[float, ...]
    target: int
    analytic: np.ndarray
    simulated: np.ndarray
    abs_error: np.ndarray
    ci_halfwidth: np.ndarray
    excluded: np.ndarray
    warned: np.ndarray

    def __post_init__(self):
        for name in ("analytic", "simulated", "abs_error", "ci_halfwidth", "excluded", "warned"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def estimate_error_map(
    family: GridFamily,
    cfg: SimConfig,
    t: float | None = None,
    inv_cfg: InversionConfig | None = None,
) -> ErrorMap:
    """Analytical-vs-simulated absolute error of the moving receiver per cell.

    ``t`` defaults to the last record time. Every feasible cell runs an
    independent simulation on a disjoint block of trial indices (cell c uses
    trials [c*trials, (c+1)*trials)), so the whole map is deterministic for a
    given seed and grid.
    """
    if t is None:
        t = cfg.record_times[-1]
    if t not in cfg.record_times:
        raise ConfigError(f"t={t} is not one of the record times {cfg.record_times}")
    t_index = cfg.record_times.index(t)
    ny, nz = len(family.y_values), len(family.z_values)
    analytic = np.full((ny, nz), np.nan)
    simulated = np.full((ny, nz), np.nan)
    ci = np.full((ny, nz), np.nan)
    excluded = np.zeros((ny, nz), dtype=bool)
    warned = np.zeros((ny, nz), dtype=bool)
    for iy in range(ny):
        for iz in range(nz):
            cell_index = iy * nz + iz
            try:
                geom = family.cell(iy, iz)
            except GeometryError:
                excluded[iy, iz] = True
                continue
            warned[iy, iz] = bool(validate(geom).warnings)
            if geom.n == 3:
                analytic[iy, iz] = hit_three(t, geom, family.moving, inv_cfg)
            else:
                analytic[iy, iz] = hit_n(t, geom, family.moving, inv_cfg)
            est = simulate(geom, cfg, trial_offset=cell_index * cfg.trials)
            simulated[iy, iz] = est.probs[family.moving - 1, t_index]
            ci[iy, iz] = est.ci_halfwidth[family.moving - 1, t_index]
    return ErrorMap(
        y_values=family.y_values,
        z_values=family.z_values,
        target=family.moving,
        analytic=analytic,
        simulated=simulated,
        abs_error=np.abs(analytic - simulated),
        ci_halfwidth=ci,
        excluded=excluded,
        warned=warned,
    )
