"""Maximum-likelihood estimation of the busy fraction and the off-rate.

The off-rate ``theta0`` is estimated with ``u`` held fixed (normally at the
sample mean) and ``theta1 = (1 - u) theta0 / u``, which turns the likelihood
into a function of one variable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .channel import transition_prob
from .errors import EstimatorUndefinedError, UnidentifiableError
from .types import EstimateResult, ObservationTrace

NUMERIC_ML = "numeric_ml"
CLOSED_FORM_UNIFORM = "closed_form_uniform"

PRESCAN_POINTS = 64
BRACKET_LOWER = 1e-6
BRACKET_SPAN = 50.0
REL_TOL = 1e-8
ROOT_TOL = 1e-9
FLAT_TOL = 1e-12


def _check_u(u):
    if not (0.0 < u < 1.0):
        raise ValueError(f"u must lie in (0, 1), got {u}")


def estimate_u(trace: ObservationTrace) -> float:
    if trace.m == 0:
        raise ValueError("cannot estimate utilization from an empty trace")
    return float(np.mean(trace.states))


def _transition_log_terms(theta0, u, prev, cur, dt):
    """ln P_{prev,cur}(dt) for every consecutive pair.

    ``theta0`` may be a column vector to evaluate several rates at once.
    Each case is written so the argument stays positive for dt > 0.
    """
    x = np.asarray(theta0, dtype=float) * dt / u
    e = np.exp(-x)
    one_minus_e = -np.expm1(-x)
    p = np.where(
        prev == 0,
        np.where(cur == 0, (1.0 - u) + u * e, u * one_minus_e),
        np.where(cur == 0, (1.0 - u) * one_minus_e, u + (1.0 - u) * e),
    )
    return np.log(p)


def _score(theta0: float, u: float, trace: ObservationTrace) -> float:
    """d/dtheta0 of the log-likelihood."""
    z = trace.states.astype(int)
    prev, cur = z[:-1], z[1:]
    dt = trace.intervals
    x = theta0 * dt / u
    e = np.exp(-x)
    de = -(dt / u) * e
    p = np.exp(_transition_log_terms(theta0, u, prev, cur, dt))
    # dP/dtheta: the e-coefficient of each kernel entry times de
    coef = np.where(prev == 0, np.where(cur == 0, u, -u), np.where(cur == 0, -(1.0 - u), 1.0 - u))
    return float(np.sum(coef * de / p))


def log_likelihood(theta0, u: float, trace: ObservationTrace):
    """Log-likelihood of the trace as a function of the off-rate.

    Accepts a scalar ``theta0`` or a 1-D array of candidate rates.
    """
    _check_u(u)
    if trace.m < 2:
        raise ValueError("need at least two samples")
    th = np.asarray(theta0, dtype=float)
    if np.any(th <= 0) or not np.all(np.isfinite(th)):
        raise ValueError("theta0 must be positive and finite")
    z = trace.states.astype(int)
    first = math.log(u) if z[0] else math.log(1.0 - u)
    dt = trace.intervals
    if th.ndim == 0:
        return first + float(np.sum(_transition_log_terms(th, u, z[:-1], z[1:], dt)))
    terms = _transition_log_terms(th[:, None], u, z[:-1], z[1:], dt)
    return first + terms.sum(axis=1)


def default_bracket(trace: ObservationTrace, u: float) -> tuple[float, float]:
    """Rate range over which exp(-theta0 dt / u) sweeps from ~1 to ~0.

    The upper end uses the shortest observed gap, which is where random
    schedules get their information.
    """
    return BRACKET_LOWER * u, BRACKET_SPAN * u / float(np.min(trace.intervals))


def estimate_theta0(trace: ObservationTrace, u: float,
                    bracket: tuple[float, float] | None = None) -> EstimateResult:
    """Maximise the reduced log-likelihood over ``bracket``.

    A log-spaced pre-scan picks the best grid cell, a bounded Brent search in
    log(theta0) refines it, and when the score changes sign across the cell
    its root is taken as the estimate.
    """
    _check_u(u)
    if trace.m < 2:
        raise ValueError("need at least two samples")
    if not trace.has_transition():
        raise UnidentifiableError("trace has no state change; likelihood is monotone in theta0")
    lo, hi = default_bracket(trace, u) if bracket is None else map(float, bracket)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"invalid bracket ({lo}, {hi})")

    grid = np.geomspace(lo, hi, PRESCAN_POINTS)
    ll_grid = log_likelihood(grid, u, trace)
    best = int(np.argmax(ll_grid))
    a = math.log(grid[max(best - 1, 0)])
    b = math.log(grid[min(best + 1, PRESCAN_POINTS - 1)])

    res = minimize_scalar(lambda s: -log_likelihood(math.exp(s), u, trace),
                          bounds=(a, b), method="bounded",
                          options={"xatol": REL_TOL, "maxiter": 500})
    theta_hat, ll_hat = math.exp(res.x), -float(res.fun)
    if ll_grid[best] > ll_hat:
        theta_hat, ll_hat = float(grid[best]), float(ll_grid[best])

    # the likelihood is flat to ~sqrt(eps) near its peak; the score root is sharper
    ga, gb = math.exp(a), math.exp(b)
    sa, sb = _score(ga, u, trace), _score(gb, u, trace)
    if sa > 0 > sb:
        root = brentq(_score, ga, gb, args=(u, trace), xtol=1e-14 * theta_hat, rtol=1e-15)
        ll_root = float(log_likelihood(root, u, trace))
        if ll_root >= ll_hat - 1e-9 * max(1.0, abs(ll_hat)):
            theta_hat, ll_hat = root, ll_root

    # a bracket end whose likelihood ties the maximum means the data cannot
    # tell the estimate apart from that end
    tie = FLAT_TOL * max(1.0, abs(ll_hat))
    at_bound = None
    if theta_hat <= lo * (1 + 10 * REL_TOL) or ll_grid[0] >= ll_hat - tie:
        at_bound = "lower"
    elif theta_hat >= hi * (1 - 10 * REL_TOL) or ll_grid[-1] >= ll_hat - tie:
        at_bound = "upper"
    diagnostics = {
        "bracket": (lo, hi),
        "iterations": int(res.nfev),
        "prescan_index": best,
        "at_bound": at_bound,
    }
    return EstimateResult(u_hat=u, theta0_hat=theta_hat, log_likelihood_at_max=ll_hat,
                          method=NUMERIC_ML, diagnostics=diagnostics)


def _closed_form_theta0(n0, n3, n_trans, u, dt_p):
    """Root of the uniform-sampling score equation.

    Works element-wise on arrays and returns NaN wherever the quadratic has no
    root in (0, 1).
    """
    n0 = np.asarray(n0, dtype=float)
    n3 = np.asarray(n3, dtype=float)
    n_trans = np.asarray(n_trans, dtype=float)
    A = (u - u * u) * n_trans
    B = -2.0 * A + n_trans - (1.0 - u) * n0 - u * n3
    C = A - u * n0 - (1.0 - u) * n3
    disc = B * B - 4.0 * A * C
    with np.errstate(invalid="ignore", divide="ignore"):
        root = (-B + np.sqrt(disc)) / (2.0 * A)
        theta = -(u / dt_p) * np.log(root)
    ok = (disc >= 0) & (root > 0) & (root < 1)
    return np.where(ok, theta, np.nan), disc, root


def closed_form_uniform_estimate(trace: ObservationTrace, u: float) -> EstimateResult:
    """Closed-form ML off-rate for a trace with one constant sampling interval."""
    _check_u(u)
    if trace.m < 2:
        raise ValueError("need at least two samples")
    dts = trace.intervals
    dt_p = float(np.mean(dts))
    if np.max(np.abs(dts - dt_p)) > ROOT_TOL * dt_p:
        raise ValueError("closed-form estimator needs constant sampling intervals")
    n0, n1, n2, n3 = trace.transition_counts()
    if n1 + n2 == 0:
        raise UnidentifiableError("trace has no state change; likelihood is monotone in theta0")
    theta, disc, root = _closed_form_theta0(n0, n3, trace.m - 1, u, dt_p)
    theta = float(theta)
    if not math.isfinite(theta):
        raise EstimatorUndefinedError(
            f"estimator undefined for this trace (discriminant={float(disc):.6g}, root={float(root):.6g})")
    diagnostics = {"counts": (n0, n1, n2, n3), "dt_p": dt_p, "root": float(root)}
    return EstimateResult(u_hat=u, theta0_hat=theta,
                          log_likelihood_at_max=float(log_likelihood(theta, u, trace)),
                          method=CLOSED_FORM_UNIFORM, diagnostics=diagnostics)


def expected_uniform_estimate(Tw, dt_p, u: float, theta0: float):
    """Plug-in expectation of the closed-form estimate for one window.

    Uses M = ceil(Tw / dt_p) samples and expected counts M (1-u) P00 and
    M u P11; the quadratic keeps its M - 1 transition factor.  ``dt_p`` may
    be an array, in which case undefined entries come back as NaN.
    """
    _check_u(u)
    if theta0 <= 0:
        raise ValueError("theta0 must be positive")
    dt = np.asarray(dt_p, dtype=float)
    if np.any(dt <= 0) or np.any(dt > Tw):
        raise ValueError("need 0 < dt_p <= Tw")
    M = np.ceil(Tw / dt)
    e_n0 = M * (1.0 - u) * transition_prob(theta0, u, 0, 0, dt)
    e_n3 = M * u * transition_prob(theta0, u, 1, 1, dt)
    theta, _, _ = _closed_form_theta0(e_n0, e_n3, M - 1.0, u, dt)
    if theta.ndim == 0:
        if not np.isfinite(theta):
            raise EstimatorUndefinedError("expected estimate undefined at this interval")
        return float(theta)
    return theta
