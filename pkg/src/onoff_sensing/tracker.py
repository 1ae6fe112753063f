"""Windowed tracking of a time-varying channel with adaptive sample budgets.

After every window the off-rate and utilization estimates are treated as the
truth for the next window.  The sampling interval for that window is the one
at which the expected closed-form estimate under uniform sensing misses the
current estimate by about ``epsilon``.  Samples are then placed either at
random (uniformly over the window) or on a regular grid for comparison.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelModel, observe, sample_realization
from .errors import SensingError
from .estimation import estimate_theta0, estimate_u, expected_uniform_estimate
from .schedules import UNIFORM_PLACEMENT, iid_random_schedule
from .types import SampleSchedule

RANDOM_UNIFORM_PLACEMENT = "random"
UNIFORM = "uniform"

MEAN_OFF_UNITS = "mean_off"
RATE_UNITS = "rate"

TRACK_SCHEMA = "track/v1"
OBJECTIVE_TOL = 1e-3


@dataclass(frozen=True)
class TrackerConfig:
    window_Tw: float = 3500.0
    epsilon: float = 1.0
    initial_samples: int = 350
    dtp_grid: tuple[float, float, float] | None = None
    schedule_kind: str = RANDOM_UNIFORM_PLACEMENT
    seed: int = 0
    error_units: str = MEAN_OFF_UNITS
    quantize: bool = False

    def __post_init__(self):
        if not self.window_Tw > 0:
            raise ValueError("window_Tw must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.initial_samples < 4:
            raise ValueError("initial_samples must be >= 4")
        if self.schedule_kind not in (RANDOM_UNIFORM_PLACEMENT, UNIFORM):
            raise ValueError(f"unknown schedule kind {self.schedule_kind!r}")
        if self.error_units not in (MEAN_OFF_UNITS, RATE_UNITS):
            raise ValueError(f"unknown error units {self.error_units!r}")
        lo, hi, step = self.grid
        if not (0 < lo <= hi <= self.window_Tw and step > 0):
            raise ValueError(f"invalid interval search grid {self.grid}")

    @property
    def grid(self) -> tuple[float, float, float]:
        if self.dtp_grid is None:
            return 1.0, float(math.floor(self.window_Tw / 3.0)), 1.0
        return tuple(float(v) for v in self.dtp_grid)

    def grid_points(self) -> np.ndarray:
        lo, hi, step = self.grid
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)


@dataclass
class WindowEstimate:
    window_index: int
    t_start: float
    true_mean_off: float
    u_hat: float
    theta0_hat: float
    samples_used: int
    next_dtp: float
    failed: bool = False
    notes: list = field(default_factory=list)

    @property
    def mean_off_hat(self) -> float:
        return 1.0 / self.theta0_hat if self.theta0_hat > 0 else float("nan")


def interval_objective(u_hat, theta0_hat, Tw, epsilon, dtp, error_units=MEAN_OFF_UNITS):
    """| |expected estimate - current estimate| - epsilon | for every candidate interval.

    In ``mean_off`` units the gap is measured between 1/theta (mean off
    times); in ``rate`` units between the rates themselves.
    """
    expected = expected_uniform_estimate(Tw, np.asarray(dtp, dtype=float), u_hat, theta0_hat)
    if error_units == MEAN_OFF_UNITS:
        with np.errstate(divide="ignore"):
            gap = np.abs(1.0 / expected - 1.0 / theta0_hat)
    else:
        gap = np.abs(expected - theta0_hat)
    return np.abs(gap - epsilon)


def next_interval(u_hat: float, theta0_hat: float, Tw: float, epsilon: float,
                  grid: np.ndarray, error_units: str = MEAN_OFF_UNITS) -> tuple[float, int] | None:
    """Sampling interval and sample budget for the next window.

    Returns the largest grid interval whose objective is within
    ``OBJECTIVE_TOL`` of the minimum, with M = ceil(Tw / interval), or None
    when the expected estimate is undefined on the whole grid.
    """
    grid = np.asarray(grid, dtype=float)
    obj = interval_objective(u_hat, theta0_hat, Tw, epsilon, grid, error_units)
    finite = np.isfinite(obj)
    if not finite.any():
        return None
    best = np.min(obj[finite])
    ok = finite & (obj <= best + OBJECTIVE_TOL)
    dtp = float(grid[ok][-1])
    return dtp, int(math.ceil(Tw / dtp))


def _window_schedule(cfg: TrackerConfig, M: int, dtp: float, seed) -> SampleSchedule:
    Tw = cfg.window_Tw
    if cfg.schedule_kind == RANDOM_UNIFORM_PLACEMENT:
        return iid_random_schedule(Tw, M, UNIFORM_PLACEMENT, seed)
    # M = ceil(Tw / dtp), so (M - 1) * dtp < Tw
    return SampleSchedule(np.minimum(dtp * np.arange(M), Tw), Tw, kind="uniform")


def track(channel_script: Callable[[float], ChannelModel] | Sequence[ChannelModel],
          cfg: TrackerConfig, n_windows: int | None = None) -> list[WindowEstimate]:
    """Run the adaptive scheme window by window.

    ``channel_script`` is either a list with one model per window or a
    function mapping a window's start time to its model.  Each window gets an
    independent stationary path.  When a window's trace has no state change
    the previous estimate and budget are carried forward.
    """
    if callable(channel_script):
        if n_windows is None:
            raise ValueError("n_windows is required when the channel script is a function")
        models = [channel_script(i * cfg.window_Tw) for i in range(n_windows)]
    else:
        models = list(channel_script)
    ss = np.random.SeedSequence(cfg.seed)
    grid = cfg.grid_points()
    Tw = cfg.window_Tw

    out: list[WindowEstimate] = []
    M = int(cfg.initial_samples)
    dtp = Tw / M
    u_prev, theta_prev = float("nan"), float("nan")
    for i, (model, child) in enumerate(zip(models, ss.spawn(len(models)))):
        ch_seed, sch_seed = child.generate_state(2)
        real = sample_realization(model, Tw, int(ch_seed), quantize=cfg.quantize)
        sched = _window_schedule(cfg, M, dtp, int(sch_seed))
        trace = observe(real, sched)
        used = sched.m
        notes = []
        failed = False
        try:
            u_hat = estimate_u(trace)
            if not 0.0 < u_hat < 1.0:
                raise SensingError("utilization estimate at 0 or 1")
            theta_hat = estimate_theta0(trace, u_hat).theta0_hat
        except SensingError as exc:
            failed = True
            notes.append(f"estimation failed: {exc}")
            u_hat, theta_hat = u_prev, theta_prev

        if math.isfinite(theta_hat):
            nxt = next_interval(u_hat, theta_hat, Tw, cfg.epsilon, grid, cfg.error_units)
            if nxt is None:
                notes.append("expected estimate undefined on grid; keeping interval")
            else:
                dtp, M = nxt
        out.append(WindowEstimate(window_index=i, t_start=i * Tw, true_mean_off=model.mean_off,
                                  u_hat=u_hat, theta0_hat=theta_hat, samples_used=used,
                                  next_dtp=dtp, failed=failed, notes=notes))
        u_prev, theta_prev = u_hat, theta_hat
    return out


def step_scenario(start: float = 6.0, increment: float = 5.0, period: float = 30000.0,
                  on_ratio: float = 0.5) -> Callable[[float], ChannelModel]:
    """Exponential channel whose mean off time rises by ``increment`` every ``period``."""
    def model_at(t: float) -> ChannelModel:
        mean_off = start + increment * math.floor(t / period)
        return ChannelModel.exponential(mean_off, on_ratio * mean_off)
    return model_at


def track_to_csv(rows: list[WindowEstimate]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={TRACK_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window_index", "t_start", "true_E_T0", "u_hat", "E_T0_hat", "M", "next_dtp"])
    for r in rows:
        w.writerow([r.window_index, f"{r.t_start:.12g}", f"{r.true_mean_off:.12g}",
                    f"{r.u_hat:.12g}", f"{r.mean_off_hat:.12g}", r.samples_used,
                    f"{r.next_dtp:.12g}"])
    return buf.getvalue()
