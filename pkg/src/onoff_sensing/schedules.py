"""Sensing-schedule generators and best/worst schedule search."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .circular_beta import (McmcConfig, angles_to_unit_interval, sample_angles_cmv,
                            sample_angles_mcmc)
from .errors import BoundsNotApplicableError
from .fisher import FisherContext, fisher_g, fisher_information
from .types import SampleSchedule

UNIFORM_PLACEMENT = "uniform_placement"
UNIFORM_INTERVALS = "uniform_intervals"
NORMAL_INTERVALS = "normal_intervals"
EXPONENTIAL_INTERVALS = "exponential_intervals"
IID_DISTS = (UNIFORM_PLACEMENT, UNIFORM_INTERVALS, NORMAL_INTERVALS, EXPONENTIAL_INTERVALS)

MAXIMIZE = "max"
MINIMIZE = "min"
DP_MAX_CELLS = 10_000

SCHEDULE_SCHEMA = "schedule/v1"


def uniform_schedule(T: float, m: int) -> SampleSchedule:
    if m < 2:
        raise ValueError("a uniform schedule needs m >= 2")
    if not T > 0:
        raise ValueError("T must be positive")
    return SampleSchedule(np.linspace(0.0, T, m), T, kind="uniform")


def iid_random_schedule(T: float, m_avg: int, dist: str, seed,
                        sigma: float | None = None) -> SampleSchedule:
    """Random schedule with ``m_avg`` points on average.

    ``uniform_placement`` drops ``m_avg - 2`` interior points uniformly on
    (0, T) besides the two endpoints.  The interval modes start at 0, draw
    gaps with mean T / (m_avg - 1) until the running sum passes T, and put the
    last point at T; the final gap is therefore clipped.  Normal gaps default
    to sigma = mean / 3 and are redrawn until positive.
    """
    if m_avg < 2:
        raise ValueError("m_avg must be >= 2")
    if dist not in IID_DISTS:
        raise ValueError(f"unknown interval distribution {dist!r}")
    rng = np.random.default_rng(seed)
    if dist == UNIFORM_PLACEMENT:
        inner = np.sort(rng.uniform(0.0, T, size=int(m_avg) - 2))
        times = np.unique(np.concatenate(([0.0], inner, [T])))
        return SampleSchedule(times, T, kind=f"iid({dist})", seed=seed)

    mean = T / (m_avg - 1)
    if dist == NORMAL_INTERVALS:
        sd = mean / 3.0 if sigma is None else float(sigma)
        if not sd > 0:
            raise ValueError("sigma must be positive")

    def draw(n):
        if dist == EXPONENTIAL_INTERVALS:
            return rng.exponential(mean, size=n)
        if dist == UNIFORM_INTERVALS:
            return rng.uniform(0.0, 2.0 * mean, size=n)
        out = rng.normal(mean, sd, size=n)
        bad = out <= 0
        while np.any(bad):
            out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
            bad = out <= 0
        return out

    gaps = []
    total = 0.0
    batch = int(m_avg) + 8
    while total <= T:
        chunk = draw(batch)
        gaps.append(chunk)
        total += chunk.sum()
    points = np.cumsum(np.concatenate(gaps))
    interior = points[points < T]
    times = np.concatenate(([0.0], interior[interior > 0], [T]))
    return SampleSchedule(np.unique(times), T, kind=f"iid({dist})", seed=seed)


def circular_beta_schedule(T: float, m: int, beta: float, seed,
                           mcmc_config: McmcConfig = McmcConfig(),
                           backend: str = "mcmc") -> SampleSchedule:
    """``m`` times from a circular beta ensemble draw, scaled to [0, T).

    No point is forced onto 0 or T.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    rng = np.random.default_rng(seed)
    if backend == "mcmc":
        angles, _ = sample_angles_mcmc(m, beta, rng, mcmc_config)
    elif backend == "cmv":
        angles = sample_angles_cmv(m, beta, rng)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    times = T * angles_to_unit_interval(angles)
    return SampleSchedule(times, T, kind=f"circular_beta({beta:g})", seed=seed)


def theorem_best_schedule(ctx: FisherContext, T: float, m: int) -> SampleSchedule:
    """Best sparse-admissible schedule: m-2 gaps at the sparsity threshold, then the rest."""
    if m < 3:
        raise ValueError("m must be >= 3")
    thr = ctx.threshold
    if not T > (m - 1) * thr:
        raise BoundsNotApplicableError(
            f"T={T} must exceed (m-1) alpha u/theta0 = {(m - 1) * thr}")
    times = np.concatenate((thr * np.arange(m - 1), [T]))
    return SampleSchedule(times, T, kind="theorem_best")


@dataclass
class DpSolution:
    schedule: SampleSchedule
    value: float
    grid_step: float
    objective: str


def dp_schedule(ctx: FisherContext, T: float, m: int, grid_step: float | None = None,
                objective: str = MAXIMIZE) -> DpSolution:
    """Exact best or worst schedule on a grid of step ``grid_step``.

    Samples are fixed at 0 and T.  ``V[k, j]`` is the optimal information
    collected by the last k points given the latest sample sits at grid index
    j, the k-th of them being at T.  Ties go to the earliest grid point.
    """
    if m < 3:
        raise ValueError("m must be >= 3")
    if objective not in (MAXIMIZE, MINIMIZE):
        raise ValueError(f"objective must be {MAXIMIZE!r} or {MINIMIZE!r}")
    delta = T / 400.0 if grid_step is None else float(grid_step)
    ratio = T / delta
    N = int(round(ratio))
    if not delta > 0 or abs(ratio - N) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"grid step {delta} does not divide T={T}")
    if N > DP_MAX_CELLS:
        raise ValueError(f"T/delta = {N} exceeds the limit of {DP_MAX_CELLS} grid cells")
    if N < m - 1:
        raise ValueError(f"grid too coarse: {N} cells cannot hold {m} distinct points")

    sign = 1.0 if objective == MAXIMIZE else -1.0
    G = np.empty(N + 1)
    G[0] = np.nan
    G[1:] = sign * fisher_g(ctx, delta * np.arange(1, N + 1))

    V = np.full((m, N + 1), -np.inf)
    choice = np.full((m, N + 1), -1, dtype=np.int64)
    V[1, :N] = G[N - np.arange(N)]
    choice[1, :N] = N
    for k in range(2, m):
        for j in range(N - k + 1):
            # next sample x in (j, N); it must leave room for k-1 more points
            xs = np.arange(j + 1, N - k + 2)
            vals = G[xs - j] + V[k - 1, xs]
            best = int(np.argmax(vals))
            V[k, j] = vals[best]
            choice[k, j] = xs[best]

    idx = [0]
    j = 0
    for k in range(m - 1, 0, -1):
        j = int(choice[k, j])
        idx.append(j)
    times = delta * np.asarray(idx, dtype=float)
    times[-1] = T
    kind = "dp_best" if objective == MAXIMIZE else "dp_worst"
    sched = SampleSchedule(times, T, kind=kind)
    value = fisher_information(ctx, sched).total
    return DpSolution(schedule=sched, value=value, grid_step=delta, objective=objective)


def schedule_to_csv(sched: SampleSchedule) -> str:
    buf = io.StringIO()
    seed = "" if sched.seed is None else sched.seed
    buf.write(f"# schema={SCHEDULE_SCHEMA} kind={sched.kind} seed={seed} "
              f"T={sched.window_T:.12g} m={sched.m}\n")
    buf.write("time\n")
    for t in sched.times:
        buf.write(f"{t:.12g}\n")
    return buf.getvalue()


def schedule_from_csv(text: str) -> SampleSchedule:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing schedule header line")
    meta = dict(item.split("=", 1) for item in lines[0].lstrip("#").split())
    if meta.get("schema") != SCHEDULE_SCHEMA:
        raise ValueError(f"unsupported schedule schema {meta.get('schema')!r}")
    if lines[1] != "time":
        raise ValueError("expected a 'time' column header")
    times = [float(v) for v in lines[2:]]
    if len(times) != int(meta["m"]):
        raise ValueError("row count does not match header m")
    seed = meta.get("seed") or None
    return SampleSchedule(times, float(meta["T"]), kind=meta["kind"],
                          seed=int(seed) if seed is not None else None)
