"""Fisher information of sensing schedules for the exponential channel.

Each sampling interval contributes ``g(dt)`` to the Fisher information about
the off-rate; a schedule's information is the sum over its intervals.  Under
the sparsity condition ``dt > alpha u / theta0`` the function ``g`` is
strictly convex, which pins down the worst (uniform) and best schedules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsNotApplicableError
from .types import SampleSchedule

NORMAL = "normal"
UNIFORM = "uniform"
EXPONENTIAL = "exponential"


def sparsity_alpha(u: float) -> float:
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return max(2.0 + math.sqrt(2.0), math.log((1.0 - u) / u), math.log(u / (1.0 - u)))


@dataclass(frozen=True)
class FisherContext:
    u: float
    theta0: float

    def __post_init__(self):
        if not 0.0 < self.u < 1.0:
            raise ValueError(f"u must lie in (0, 1), got {self.u}")
        if not (self.theta0 > 0 and math.isfinite(self.theta0)):
            raise ValueError(f"theta0 must be positive, got {self.theta0}")

    @property
    def alpha(self) -> float:
        return sparsity_alpha(self.u)

    @property
    def threshold(self) -> float:
        """Smallest interval allowed by the sparsity condition, alpha u / theta0."""
        return self.alpha * self.u / self.theta0


def fisher_g(ctx: FisherContext, dt):
    """Per-interval Fisher function.

    With x = theta0 dt / u and e = exp(-x) the three-term bracket sums to

        u (1-u) e (1+e) / ((1-e) ((1-u) + u e) (u + (1-u) e))

    so no large terms cancel as x grows, and 1 - e comes from expm1.
    """
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0):
        raise ValueError("dt must be positive")
    u, th = ctx.u, ctx.theta0
    x = th * dt / u
    e = np.exp(-x)
    one_minus_e = -np.expm1(-x)
    g = (dt * dt / u) * (1.0 - u) * e * e * (1.0 + e) / (
        one_minus_e * ((1.0 - u) + u * e) * (u + (1.0 - u) * e))
    if g.ndim == 0:
        return float(g)
    return g


@dataclass
class FisherReport:
    per_interval_g: np.ndarray
    total: float
    sparsity_ok: np.ndarray
    min_bound: float = float("nan")
    max_bound: float = float("nan")
    bounds_applicable: bool = False
    extra: dict = field(default_factory=dict)


def _check_bounds(ctx: FisherContext, T: float, m: int):
    if m < 3:
        raise ValueError("bounds need m >= 3")
    if not T > (m - 1) * ctx.threshold:
        raise BoundsNotApplicableError(
            f"bounds not applicable: T={T} <= (m-1) alpha u/theta0 = {(m - 1) * ctx.threshold}")


def min_fisher_bound(ctx: FisherContext, T: float, m: int) -> tuple[float, np.ndarray]:
    """Smallest information over sparse-admissible schedules and the uniform schedule attaining it."""
    _check_bounds(ctx, T, m)
    value = (m - 1) * fisher_g(ctx, T / (m - 1))
    return float(value), np.linspace(0.0, T, m)


def max_fisher_bound(ctx: FisherContext, T: float, m: int) -> tuple[float, np.ndarray]:
    """Largest information over sparse-admissible schedules and its maximiser.

    The maximiser spaces the first m-2 intervals at the sparsity threshold and
    gives the remainder to the last interval.
    """
    _check_bounds(ctx, T, m)
    thr = ctx.threshold
    value = (m - 2) * fisher_g(ctx, thr) + fisher_g(ctx, T - (m - 2) * thr)
    times = np.concatenate((thr * np.arange(m - 1), [T]))
    return float(value), times


def fisher_information(ctx: FisherContext, sched) -> FisherReport:
    times = sched.times if isinstance(sched, SampleSchedule) else np.asarray(sched, dtype=float)
    if times.size < 2:
        raise ValueError("Fisher information needs at least two sampling times")
    dts = np.diff(times)
    g = fisher_g(ctx, dts)
    report = FisherReport(per_interval_g=np.atleast_1d(g), total=float(np.sum(g)),
                          sparsity_ok=dts > ctx.threshold)
    T = float(times[-1] - times[0])
    m = times.size
    if m >= 3 and T > (m - 1) * ctx.threshold:
        report.min_bound = min_fisher_bound(ctx, T, m)[0]
        report.max_bound = max_fisher_bound(ctx, T, m)[0]
        report.bounds_applicable = True
    return report


def central_moment(dist: str, n: int, mu_o: float, sigma: float | None = None) -> float:
    """n-th central moment of the sampling-interval law with mean ``mu_o``.

    ``uniform`` is the uniform law on [0, 2 mu_o]; ``normal`` uses the
    untruncated Gaussian moments with standard deviation ``sigma``
    (default mu_o / 3).
    """
    if n < 1:
        raise ValueError("moment order must be >= 1")
    if dist == NORMAL:
        if n % 2:
            return 0.0
        s = mu_o / 3.0 if sigma is None else sigma
        return math.factorial(n) * s ** n / (math.factorial(n // 2) * 2 ** (n // 2))
    if dist == UNIFORM:
        return 0.0 if n % 2 else mu_o ** n / (n + 1)
    if dist == EXPONENTIAL:
        return mu_o ** n * sum((-1) ** k * math.factorial(n) / math.factorial(k)
                               for k in range(n + 1))
    raise ValueError(f"unsupported interval distribution {dist!r}")


def _central_difference(f, x, n, h):
    # n-th derivative from the centred stencil of n + 1 points; O(h^2) error.
    k = np.arange(n + 1)
    weights = np.array([(-1) ** i * math.comb(n, i) for i in k], dtype=float)
    return float(np.dot(weights, f(x + (n / 2.0 - k) * h))) / h ** n


def derivative(f, x: float, n: int, h: float, refinements: int = 2) -> float:
    """n-th derivative by central differences with Richardson extrapolation."""
    if n == 0:
        return float(f(x))
    table = [_central_difference(f, x, n, h / 2 ** r) for r in range(refinements + 1)]
    for level in range(1, refinements + 1):
        factor = 4.0 ** level
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    value = table[0]
    if not math.isfinite(value):
        raise ArithmeticError(f"derivative of order {n} is not finite at {x}")
    return value


def expected_fisher_series(ctx: FisherContext, dist: str, mu_o: float, order: int = 4,
                           sigma: float | None = None) -> float:
    """Truncated Taylor series of E[g(dt)] around the mean interval ``mu_o``.

    Only a ranking heuristic: the exponential moments grow factorially, so
    the series does not converge in general.
    """
    if mu_o <= 0:
        raise ValueError("mu_o must be positive")
    if order not in (0, 2, 4, 6, 8):
        raise ValueError("order must be one of 0, 2, 4, 6, 8")
    h = 1e-2 * mu_o
    f = lambda t: fisher_g(ctx, t)
    total = fisher_g(ctx, mu_o)
    for n in range(2, order + 1):
        mom = central_moment(dist, n, mu_o, sigma)
        if mom == 0.0:
            continue
        total += derivative(f, mu_o, n, h) * mom / math.factorial(n)
    return float(total)
