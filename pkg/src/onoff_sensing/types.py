"""Value types shared between the simulator, schedulers and estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleSchedule:
    """Strictly increasing sensing times inside the window ``[0, window_T]``.

    ``kind`` is a free-form provenance tag such as ``"uniform"``,
    ``"iid(exponential)"`` or ``"circular_beta(2)"``.
    """

    times: np.ndarray
    window_T: float
    kind: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        times = _frozen_array(self.times)
        object.__setattr__(self, "times", times)
        T = float(self.window_T)
        object.__setattr__(self, "window_T", T)
        if not np.isfinite(T) or T <= 0:
            raise ValueError(f"window_T must be positive and finite, got {T}")
        if not np.all(np.isfinite(times)):
            raise ValueError("schedule times must be finite")
        if times.size:
            if times[0] < 0 or times[-1] > T:
                raise ValueError(f"schedule times must lie in [0, {T}]")
            if np.any(np.diff(times) <= 0):
                raise ValueError("schedule times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def m(self) -> int:
        return self.times.size

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)


@dataclass(frozen=True, eq=False)
class ObservationTrace:
    """Paired ``(time, state)`` readings taken on one channel path."""

    times: np.ndarray
    states: np.ndarray
    window_T: float | None = None

    def __post_init__(self):
        times = _frozen_array(self.times)
        states = _frozen_array(self.states, dtype=np.int8)
        if times.shape != states.shape:
            raise ValueError("times and states must have the same length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("observation times must be strictly increasing")
        if np.any((states != 0) & (states != 1)):
            raise ValueError("states must be 0 or 1")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return self.times.size

    @property
    def m(self) -> int:
        return self.times.size

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)

    def transition_counts(self) -> tuple[int, int, int, int]:
        """Counts of 0->0, 0->1, 1->0 and 1->1 pairs between consecutive samples."""
        prev, cur = self.states[:-1], self.states[1:]
        code = 2 * prev.astype(int) + cur
        counts = np.bincount(code, minlength=4)
        return tuple(int(c) for c in counts)

    def has_transition(self) -> bool:
        return bool(np.any(self.states[1:] != self.states[:-1]))


@dataclass
class EstimateResult:
    u_hat: float
    theta0_hat: float
    log_likelihood_at_max: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean_off_hat(self) -> float:
        return 1.0 / self.theta0_hat
