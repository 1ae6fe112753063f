"""Seeded Monte Carlo experiments comparing sensing schedules.

Seed splitting: replication ``r`` of schedule kind ``k`` under master seed
``s`` uses ``derive_seed(s, k, r)``, the first 8 bytes (little endian) of
BLAKE2b over ``"{s}/{k}/{r}"``.  The channel path of replication ``r`` uses
the label ``"channel"`` and is shared by every schedule kind, so kinds are
compared on the same paths.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import EXPONENTIAL, GAMMA, ChannelModel, observe, sample_realization
from .circular_beta import McmcConfig
from .errors import SensingError
from .estimation import estimate_theta0, estimate_u
from .fisher import FisherContext, fisher_information
from .schedules import (EXPONENTIAL_INTERVALS, MAXIMIZE, MINIMIZE, NORMAL_INTERVALS,
                        UNIFORM_INTERVALS, UNIFORM_PLACEMENT, circular_beta_schedule,
                        dp_schedule, iid_random_schedule, theorem_best_schedule,
                        uniform_schedule)
from .types import SampleSchedule

COMPARISON_SCHEMA = "comparison/v1"
FISHER_SCAN_SCHEMA = "fisher_scan/v1"

IID_KINDS = {
    "random": UNIFORM_PLACEMENT,
    "exponential": EXPONENTIAL_INTERVALS,
    "normal": NORMAL_INTERVALS,
    "uniform_intervals": UNIFORM_INTERVALS,
}
FIXED_KINDS = ("uniform", "dp_best", "dp_worst", "theorem_best")


def derive_seed(master: int, label: str, r: int) -> int:
    digest = hashlib.blake2b(f"{master}/{label}/{r}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def check_kind(kind: str) -> str:
    if kind in IID_KINDS or kind in FIXED_KINDS:
        return kind
    if kind.startswith("beta:"):
        beta = float(kind.split(":", 1)[1])
        if not beta > 0:
            raise ValueError(f"beta must be positive in {kind!r}")
        return kind
    raise ValueError(f"unknown schedule kind {kind!r}")


def make_schedule(kind: str, T: float, m: int, seed: int, ctx: FisherContext | None = None,
                  mcmc: McmcConfig = McmcConfig(), beta_backend: str = "mcmc") -> SampleSchedule:
    """Build one schedule of the named kind.

    ``dp_best``, ``dp_worst`` and ``theorem_best`` need the true parameters
    in ``ctx``.
    """
    if kind == "uniform":
        return uniform_schedule(T, m)
    if kind in IID_KINDS:
        return iid_random_schedule(T, m, IID_KINDS[kind], seed)
    if kind.startswith("beta:"):
        beta = float(kind.split(":", 1)[1])
        return circular_beta_schedule(T, m, beta, seed, mcmc, backend=beta_backend)
    if ctx is None:
        raise ValueError(f"schedule kind {kind!r} needs channel parameters")
    if kind == "theorem_best":
        return theorem_best_schedule(ctx, T, m)
    if kind in ("dp_best", "dp_worst"):
        objective = MAXIMIZE if kind == "dp_best" else MINIMIZE
        return dp_schedule(ctx, T, m, objective=objective).schedule
    raise ValueError(f"unknown schedule kind {kind!r}")


@dataclass
class Scenario:
    channel: ChannelModel
    window_T: float
    budgets: list[int]
    schedules: list[str]
    replications: int = 100
    seed: int = 0
    out: str | None = None
    quantize_time: bool = False
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    beta_backend: str = "mcmc"

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.window_T > 0:
            raise ValueError("window_T must be positive")
        if not self.budgets or any(int(m) < 2 for m in self.budgets):
            raise ValueError("every sample budget must be >= 2")
        if not self.schedules:
            raise ValueError("no schedule kinds given")
        for kind in self.schedules:
            check_kind(kind)

    @property
    def truth_context(self) -> FisherContext:
        """Exponential-model context at the true busy fraction and 1/E[T0]."""
        return FisherContext(self.channel.u, self.channel.off_rate)


@dataclass
class ComparisonRow:
    kind: str
    m: int
    replications: int
    failures: int
    bound_hits: int
    mean_E_T0: float
    std_E_T0: float
    mean_abs_err: float
    sem_abs_err: float
    mean_fisher: float
    mean_samples: float


def _replicate(scn: Scenario, kind: str, m: int, r: int, ctx: FisherContext,
               cache: dict) -> tuple[float | None, bool, float, int]:
    ch_seed = derive_seed(scn.seed, "channel", r)
    real = cache.get(r)
    if real is None:
        real = sample_realization(scn.channel, scn.window_T, ch_seed, quantize=scn.quantize_time)
        cache[r] = real
    if kind in FIXED_KINDS:
        key = (kind, m)
        sched = cache.get(key)
        if sched is None:
            sched = make_schedule(kind, scn.window_T, m, 0, ctx)
            cache[key] = sched
    else:
        sched = make_schedule(kind, scn.window_T, m, derive_seed(scn.seed, kind, r), ctx,
                              scn.mcmc, scn.beta_backend)
    fisher = fisher_information(ctx, sched).total if sched.m >= 2 else 0.0
    trace = observe(real, sched)
    try:
        u_hat = estimate_u(trace)
        if not 0.0 < u_hat < 1.0:
            return None, False, fisher, sched.m
        est = estimate_theta0(trace, u_hat)
    except SensingError:
        return None, False, fisher, sched.m
    return 1.0 / est.theta0_hat, est.diagnostics["at_bound"] is not None, fisher, sched.m


def _summarise(kind, m, R, values, hits, fishers, counts, truth) -> ComparisonRow:
    vals = np.asarray(values, dtype=float)
    n = vals.size
    if n:
        err = np.abs(vals - truth)
        mean, std = float(vals.mean()), float(vals.std(ddof=1)) if n > 1 else 0.0
        mae = float(err.mean())
        sem = float(err.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    else:
        mean = std = mae = sem = float("nan")
    return ComparisonRow(kind=kind, m=m, replications=R, failures=R - n, bound_hits=hits,
                         mean_E_T0=mean, std_E_T0=std, mean_abs_err=mae, sem_abs_err=sem,
                         mean_fisher=float(np.mean(fishers)), mean_samples=float(np.mean(counts)))


def run_comparison(scn: Scenario, write: bool = True) -> list[ComparisonRow]:
    """simulate -> schedule -> observe -> estimate, for every (kind, m, replication).

    Replications whose trace cannot be estimated (no state change, or a busy
    fraction of exactly 0 or 1) are counted in ``failures`` and left out of
    the means.
    """
    ctx = scn.truth_context
    truth = scn.channel.mean_off
    cache: dict = {}
    rows = []
    for kind in scn.schedules:
        for m in scn.budgets:
            values, fishers, counts = [], [], []
            hits = 0
            for r in range(scn.replications):
                est, hit, fisher, count = _replicate(scn, kind, int(m), r, ctx, cache)
                fishers.append(fisher)
                counts.append(count)
                if est is not None:
                    values.append(est)
                    hits += hit
            rows.append(_summarise(kind, int(m), scn.replications, values, hits,
                                   fishers, counts, truth))
    rows.sort(key=lambda row: (row.kind, row.m))
    if write and scn.out:
        write_text(scn.out, comparison_to_csv(rows))
    return rows


def _g(x: float) -> str:
    return f"{x:.12g}"


def comparison_to_csv(rows: list[ComparisonRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={COMPARISON_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "m", "replications", "failures", "bound_hits", "mean_E_T0",
                "std_E_T0", "mean_abs_err", "sem_abs_err", "mean_fisher", "mean_samples"])
    for r in rows:
        w.writerow([r.kind, r.m, r.replications, r.failures, r.bound_hits, _g(r.mean_E_T0),
                    _g(r.std_E_T0), _g(r.mean_abs_err), _g(r.sem_abs_err),
                    _g(r.mean_fisher), _g(r.mean_samples)])
    return buf.getvalue()


@dataclass
class FisherScanRow:
    kind: str
    m: int
    replications: int
    mean_fisher: float
    sem_fisher: float
    rank: int = 0


def run_fisher_scan(ctx: FisherContext, T: float, m: int, kinds: list[str], R: int,
                    seed: int, mcmc: McmcConfig = McmcConfig()) -> list[FisherScanRow]:
    """Mean Fisher information per schedule kind; rank 1 is the most informative."""
    if R < 1:
        raise ValueError("R must be >= 1")
    rows = []
    for kind in kinds:
        check_kind(kind)
        if kind in FIXED_KINDS:
            vals = [fisher_information(ctx, make_schedule(kind, T, m, 0, ctx)).total] * R
        else:
            vals = [fisher_information(ctx, make_schedule(kind, T, m, derive_seed(seed, kind, r),
                                                          ctx, mcmc)).total
                    for r in range(R)]
        vals = np.asarray(vals)
        sem = float(vals.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
        rows.append(FisherScanRow(kind, m, R, float(vals.mean()), sem))
    for rank, row in enumerate(sorted(rows, key=lambda r: -r.mean_fisher), start=1):
        row.rank = rank
    rows.sort(key=lambda row: row.kind)
    return rows


def fisher_scan_to_csv(rows: list[FisherScanRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={FISHER_SCAN_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "m", "replications", "mean_fisher", "sem_fisher", "rank"])
    for r in rows:
        w.writerow([r.kind, r.m, r.replications, _g(r.mean_fisher), _g(r.sem_fisher), r.rank])
    return buf.getvalue()


def write_text(path, text: str):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise SensingError(f"cannot write {path}: {exc}") from exc


# --- flat key = value configuration -------------------------------------

def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


SCENARIO_KEYS = {"channel", "mean_off", "mean_on", "shape_off", "shape_on", "window",
                 "budgets", "schedules", "replications", "seed", "out", "quantize_time",
                 "mcmc_burn_in", "mcmc_thin", "beta_backend"}


def channel_from_config(cfg: dict[str, str]) -> ChannelModel:
    kind = cfg.get("channel", EXPONENTIAL)
    mean_off = float(cfg["mean_off"])
    mean_on = float(cfg["mean_on"])
    if kind == EXPONENTIAL:
        return ChannelModel.exponential(mean_off, mean_on)
    if kind == GAMMA:
        return ChannelModel.gamma(mean_off, mean_on, float(cfg.get("shape_off", 2.0)),
                                  float(cfg.get("shape_on", 2.0)))
    raise ValueError(f"unknown channel {kind!r}")


def scenario_from_config(cfg: dict[str, str]) -> Scenario:
    unknown = set(cfg) - SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = {"mean_off", "mean_on", "window", "budgets", "schedules"} - set(cfg)
    if missing:
        raise ValueError(f"missing config keys: {sorted(missing)}")
    mcmc = McmcConfig()
    if "mcmc_burn_in" in cfg:
        mcmc = replace(mcmc, burn_in=int(cfg["mcmc_burn_in"]))
    if "mcmc_thin" in cfg:
        mcmc = replace(mcmc, thin=int(cfg["mcmc_thin"]))
    return Scenario(
        channel=channel_from_config(cfg),
        window_T=float(cfg["window"]),
        budgets=[int(v) for v in cfg["budgets"].split(",") if v.strip()],
        schedules=[v.strip() for v in cfg["schedules"].split(",") if v.strip()],
        replications=int(cfg.get("replications", 100)),
        seed=int(cfg.get("seed", 0)),
        out=cfg.get("out"),
        quantize_time=_bool(cfg.get("quantize_time", "false")),
        mcmc=mcmc,
        beta_backend=cfg.get("beta_backend", "mcmc"),
    )
