"""On/off alternating renewal channel: simulation, state queries and the
exponential-sojourn transition kernel.

State 1 is busy, state 0 is idle.  Exponential sojourns are parameterised by
their rates (``theta0`` off, ``theta1`` on); gamma sojourns by shape ``k`` and
scale ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import ObservationTrace, SampleSchedule

EXPONENTIAL = "exponential"
GAMMA = "gamma"

BURN_IN_CYCLES = 20


@dataclass(frozen=True)
class ChannelModel:
    kind: str
    theta0: float | None = None
    theta1: float | None = None
    k0: float | None = None
    k1: float | None = None
    lambda0: float | None = None
    lambda1: float | None = None

    def __post_init__(self):
        if self.kind == EXPONENTIAL:
            params = (self.theta0, self.theta1)
        elif self.kind == GAMMA:
            params = (self.k0, self.k1, self.lambda0, self.lambda1)
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        for p in params:
            if p is None or not math.isfinite(p) or p <= 0:
                raise ValueError(f"{self.kind} channel parameters must be positive, got {params}")

    @classmethod
    def exponential(cls, mean_off: float, mean_on: float) -> "ChannelModel":
        return cls(EXPONENTIAL, theta0=1.0 / mean_off, theta1=1.0 / mean_on)

    @classmethod
    def gamma(cls, mean_off: float, mean_on: float, shape_off: float = 2.0,
              shape_on: float = 2.0) -> "ChannelModel":
        return cls(GAMMA, k0=shape_off, k1=shape_on,
                   lambda0=mean_off / shape_off, lambda1=mean_on / shape_on)

    @property
    def mean_off(self) -> float:
        if self.kind == EXPONENTIAL:
            return 1.0 / self.theta0
        return self.k0 * self.lambda0

    @property
    def mean_on(self) -> float:
        if self.kind == EXPONENTIAL:
            return 1.0 / self.theta1
        return self.k1 * self.lambda1

    @property
    def u(self) -> float:
        """Long-run busy fraction E[T1] / (E[T1] + E[T0])."""
        return self.mean_on / (self.mean_on + self.mean_off)

    @property
    def off_rate(self) -> float:
        """1 / E[T0]; equals ``theta0`` for the exponential model."""
        return 1.0 / self.mean_off

    def draw(self, rng: np.random.Generator, state: int, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. sojourn lengths for ``state``."""
        if self.kind == EXPONENTIAL:
            rate = self.theta1 if state else self.theta0
            return rng.exponential(1.0 / rate, size=n)
        if state:
            return rng.gamma(self.k1, self.lambda1, size=n)
        return rng.gamma(self.k0, self.lambda0, size=n)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One sampled path on ``[0, horizon]``.

    Sojourn ``i`` has state ``initial_state ^ (i % 2)``.  The first sojourn is
    the residual of the period that straddles time 0.
    """

    initial_state: int
    sojourns: np.ndarray
    horizon: float

    def __post_init__(self):
        soj = np.array(self.sojourns, dtype=float).reshape(-1)
        if soj.size == 0 or np.any(soj <= 0):
            raise ValueError("sojourns must be a non-empty list of positive durations")
        if self.initial_state not in (0, 1):
            raise ValueError("initial_state must be 0 or 1")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")
        ends = np.cumsum(soj)
        if ends[-1] < self.horizon:
            raise ValueError("sojourns do not cover the horizon")
        soj.setflags(write=False)
        ends.setflags(write=False)
        object.__setattr__(self, "sojourns", soj)
        object.__setattr__(self, "_ends", ends)

    @property
    def transition_times(self) -> np.ndarray:
        return self._ends[:-1]

    def states(self) -> np.ndarray:
        return (self.initial_state ^ (np.arange(self.sojourns.size) % 2)).astype(np.int8)

    def busy_time(self) -> float:
        """Total busy time inside ``[0, horizon]``."""
        starts = np.concatenate(([0.0], self._ends[:-1]))
        ends = np.minimum(self._ends, self.horizon)
        lengths = np.clip(ends - starts, 0.0, None)
        return float(np.sum(lengths[self.states() == 1]))


def sample_realization(model: ChannelModel, horizon: float, seed,
                       quantize: bool = False) -> ChannelRealization:
    """Simulate a stationary path on ``[0, horizon]``.

    The process is started ``BURN_IN_CYCLES`` mean cycles before time 0 in a
    Bernoulli(u) state and the burn-in is discarded, so gamma sojourns are
    close to equilibrium at time 0 as well.  With ``quantize`` every sojourn is
    rounded up to a whole number of time units (geometric sojourns for the
    exponential model).
    """
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon <= 0:
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    rng = np.random.default_rng(seed)
    burn = BURN_IN_CYCLES * (model.mean_off + model.mean_on)
    if quantize:
        burn = math.ceil(burn)
    state0 = int(rng.random() < model.u)
    need = burn + horizon
    cycle = model.mean_off + model.mean_on
    chunks = []
    total = 0.0
    n = max(16, int(2 * need / cycle) + 16)
    while total < need:
        off = model.draw(rng, 0, n)
        on = model.draw(rng, 1, n)
        pair = np.empty(2 * n)
        if state0 == 0:
            pair[0::2], pair[1::2] = off, on
        else:
            pair[0::2], pair[1::2] = on, off
        if quantize:
            pair = np.maximum(np.ceil(pair), 1.0)
        chunks.append(pair)
        total += pair.sum()
    # Whole pairs keep the alternation phase intact across chunks.
    soj = np.concatenate(chunks)
    ends = np.cumsum(soj)
    first = int(np.searchsorted(ends, burn, side="right"))
    last = int(np.searchsorted(ends, need, side="left"))
    kept = soj[first:last + 1].copy()
    kept[0] = ends[first] - burn
    initial = state0 ^ (first % 2)
    return ChannelRealization(initial_state=initial, sojourns=kept, horizon=horizon)


def state_at(real: ChannelRealization, t):
    """Channel state at time(s) ``t``; a transition instant belongs to the new sojourn."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > real.horizon) or not np.all(np.isfinite(t_arr)):
        raise ValueError(f"query time outside [0, {real.horizon}]")
    idx = np.searchsorted(real._ends, t_arr, side="right")
    out = (real.initial_state ^ (idx % 2)).astype(np.int8)
    if out.ndim == 0:
        return int(out)
    return out


def observe(real: ChannelRealization, sched: SampleSchedule) -> ObservationTrace:
    """Error-free readings of the path at every scheduled time."""
    if sched.m and sched.times[-1] > real.horizon:
        raise ValueError("schedule extends past the realization horizon")
    states = state_at(real, sched.times) if sched.m else np.zeros(0, dtype=np.int8)
    return ObservationTrace(sched.times, states, window_T=sched.window_T)


def transition_prob(theta0, u, i: int, j: int, dt):
    """P(state j now | state i observed ``dt`` ago) for exponential sojourns.

    The total rate theta0 + theta1 is written as theta0 / u.
    """
    u = np.asarray(u, dtype=float)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if np.any(np.asarray(theta0) <= 0):
        raise ValueError("theta0 must be positive")
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0):
        raise ValueError("dt must be non-negative")
    x = theta0 * dt / u
    e = np.exp(-x)
    if i == 0 and j == 0:
        p = (1.0 - u) + u * e
    elif i == 0 and j == 1:
        p = -u * np.expm1(-x)
    elif i == 1 and j == 0:
        p = -(1.0 - u) * np.expm1(-x)
    elif i == 1 and j == 1:
        p = u + (1.0 - u) * e
    else:
        raise ValueError("states must be 0 or 1")
    if np.ndim(p) == 0:
        return float(p)
    return p
