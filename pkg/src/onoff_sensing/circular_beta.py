"""Samplers for the circular beta ensemble.

The joint density of the angles is proportional to
prod_{k<l} |exp(i a_k) - exp(i a_l)|^beta.  The default sampler is a
random-walk Metropolis chain on that density; the CMV matrix model of
Killip and Nenciu is available as an exact alternative backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import McmcConvergenceError


@dataclass(frozen=True)
class McmcConfig:
    burn_in: int = 10_000
    thin: int = 10
    target_accept: float = 0.3
    initial_step: float = 0.5


@numba.njit(cache=True)
def _metropolis(theta, beta, step, burn_in, thin, target, seed):
    np.random.seed(seed)
    m = theta.shape[0]
    # |sin((a_k - a_l) / 2)| is half the chord length; cache it for every pair.
    S = np.ones((m, m))
    for k in range(m):
        for l in range(k + 1, m):
            s = abs(math.sin(0.5 * (theta[k] - theta[l])))
            S[k, l] = s
            S[l, k] = s
    new = np.ones(m)
    accepted = 0
    for sweep in range(burn_in + thin):
        acc = 0
        for k in range(m):
            prop = theta[k] + step * np.random.standard_normal()
            prop = (prop + math.pi) % (2.0 * math.pi) - math.pi
            log_ratio = 0.0
            prod = 1.0
            for l in range(m):
                if l != k:
                    s = abs(math.sin(0.5 * (prop - theta[l])))
                    new[l] = s
                    prod *= s / S[k, l]
                    if (l & 15) == 15:
                        log_ratio += math.log(prod)
                        prod = 1.0
            log_ratio += math.log(prod)
            if math.log(np.random.random()) < beta * log_ratio:
                theta[k] = prop
                for l in range(m):
                    if l != k:
                        S[k, l] = new[l]
                        S[l, k] = new[l]
                acc += 1
        if sweep < burn_in:
            step *= math.exp(acc / m - target)
            if step > math.pi:
                step = math.pi
        else:
            accepted += acc
    return step, accepted


def sample_angles_mcmc(m: int, beta: float, rng: np.random.Generator,
                       config: McmcConfig = McmcConfig()) -> tuple[np.ndarray, dict]:
    """One draw of ``m`` angles in [-pi, pi) after burn-in and thinning.

    The chain starts from the equally spaced configuration with a random
    rotation and adapts its Gaussian step size during burn-in only.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError("beta must be positive and finite")
    offset = rng.uniform(-math.pi, math.pi)
    theta = (offset + 2.0 * math.pi * np.arange(m) / m + math.pi) % (2.0 * math.pi) - math.pi
    seed = int(rng.integers(0, 2**31 - 1))
    if m == 1:
        return theta, {"step": math.pi, "acceptance": 1.0}
    step, accepted = _metropolis(theta, float(beta), float(config.initial_step),
                                 int(config.burn_in), int(config.thin),
                                 float(config.target_accept), seed)
    rate = accepted / max(1, config.thin * m)
    if config.thin > 0 and (accepted == 0 or (rate == 1.0 and step < math.pi)):
        raise McmcConvergenceError(
            f"circular-beta chain stuck: acceptance={rate:.3f}, step={step:.3g}")
    return theta, {"step": step, "acceptance": rate}


def _xi_block(alpha: complex) -> np.ndarray:
    rho = math.sqrt(max(0.0, 1.0 - abs(alpha) ** 2))
    return np.array([[np.conj(alpha), rho], [rho, -alpha]])


def sample_angles_cmv(m: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Exact draw via the eigenvalues of a random CMV matrix.

    Verblunsky coefficient k (k < m-1) is rotation invariant in the unit disk
    with |a_k|^2 ~ Beta(1, beta (m-k-1) / 2); the last one is uniform on the
    unit circle.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError("beta must be positive and finite")
    radii = np.sqrt(rng.beta(1.0, beta * (m - 1 - np.arange(m - 1)) / 2.0))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=m)
    alphas = np.append(radii * np.exp(1j * phases[:-1]), np.exp(1j * phases[-1]))

    L = np.zeros((m, m), dtype=complex)
    M = np.zeros((m, m), dtype=complex)
    M[0, 0] = 1.0
    for k in range(m):
        target = L if k % 2 == 0 else M
        if k == m - 1:
            target[k, k] = np.conj(alphas[k])
        else:
            target[k:k + 2, k:k + 2] = _xi_block(alphas[k])
    eig = np.linalg.eigvals(L @ M)
    return np.angle(eig)


def angles_to_unit_interval(theta: np.ndarray) -> np.ndarray:
    """Map angles in [-pi, pi) onto [0, 1) and sort."""
    return np.sort((np.asarray(theta) + math.pi) / (2.0 * math.pi) % 1.0)
