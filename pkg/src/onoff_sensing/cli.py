"""Command-line entry point.

Every subcommand writes CSV (or ``key,value`` lines) to stdout, or to
``--out`` when given.  Exit codes: 0 ok, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from .channel import ChannelModel, ChannelRealization, observe, sample_realization
from .circular_beta import McmcConfig
from .errors import SensingError
from .estimation import closed_form_uniform_estimate, estimate_theta0, estimate_u
from .fisher import FisherContext, fisher_information, max_fisher_bound, min_fisher_bound
from .harness import (comparison_to_csv, fisher_scan_to_csv, make_schedule, parse_config,
                      run_comparison, run_fisher_scan, scenario_from_config, write_text)
from .schedules import MAXIMIZE, MINIMIZE, dp_schedule, schedule_from_csv, schedule_to_csv
from .tracker import TrackerConfig, step_scenario, track, track_to_csv
from .types import ObservationTrace

REALIZATION_SCHEMA = "realization/v1"
TRACE_SCHEMA = "trace/v1"


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _times(ts) -> str:
    return " ".join(_fmt(t) for t in ts)


def _header(text: str) -> dict:
    first = text.splitlines()[0] if text else ""
    if not first.startswith("#"):
        raise ValueError("missing schema header line")
    return dict(item.split("=", 1) for item in first.lstrip("#").split())


def realization_to_csv(real: ChannelRealization) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={REALIZATION_SCHEMA} horizon={_fmt(real.horizon)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start", "duration", "state"])
    starts = np.concatenate(([0.0], np.cumsum(real.sojourns)[:-1]))
    for s, d, st in zip(starts, real.sojourns, real.states()):
        w.writerow([_fmt(s), _fmt(d), int(st)])
    return buf.getvalue()


def realization_from_csv(text: str) -> ChannelRealization:
    meta = _header(text)
    if meta.get("schema") != REALIZATION_SCHEMA:
        raise ValueError(f"not a realization file (schema {meta.get('schema')!r})")
    rows = list(csv.DictReader(text.splitlines()[1:]))
    if not rows:
        raise ValueError("realization file has no sojourns")
    return ChannelRealization(initial_state=int(rows[0]["state"]),
                              sojourns=[float(r["duration"]) for r in rows],
                              horizon=float(meta["horizon"]))


def trace_to_csv(trace: ObservationTrace) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={TRACE_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "state"])
    for t, s in zip(trace.times, trace.states):
        w.writerow([_fmt(t), int(s)])
    return buf.getvalue()


def trace_from_csv(text: str) -> ObservationTrace:
    meta = _header(text)
    if meta.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"not a trace file (schema {meta.get('schema')!r})")
    rows = list(csv.DictReader(text.splitlines()[1:]))
    return ObservationTrace([float(r["time"]) for r in rows], [int(r["state"]) for r in rows])


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _kv(pairs) -> str:
    return "".join(f"{k},{v}\n" for k, v in pairs)


# --- subcommands ---------------------------------------------------------

def _channel(args) -> ChannelModel:
    if args.channel == "gamma":
        return ChannelModel.gamma(args.mean_off, args.mean_on, args.shape_off, args.shape_on)
    return ChannelModel.exponential(args.mean_off, args.mean_on)


def cmd_simulate(args):
    real = sample_realization(_channel(args), args.T, args.seed, quantize=args.quantize_time)
    return realization_to_csv(real)


def cmd_observe(args):
    real = realization_from_csv(_read(args.realization))
    sched = schedule_from_csv(_read(args.schedule))
    return trace_to_csv(observe(real, sched))


def cmd_estimate(args):
    trace = trace_from_csv(_read(args.trace))
    u = estimate_u(trace) if args.u is None else args.u
    if args.method == "closed":
        res = closed_form_uniform_estimate(trace, u)
    else:
        res = estimate_theta0(trace, u)
    return _kv([("method", res.method), ("u_hat", _fmt(res.u_hat)),
                ("theta0_hat", _fmt(res.theta0_hat)), ("E_T0_hat", _fmt(res.mean_off_hat)),
                ("log_likelihood", _fmt(res.log_likelihood_at_max)),
                ("at_bound", res.diagnostics.get("at_bound") or "")])


def cmd_fisher(args):
    ctx = FisherContext(args.u, args.theta0)
    if args.schedule:
        times = schedule_from_csv(_read(args.schedule)).times
    elif args.times:
        times = np.array([float(v) for v in args.times.split(",")])
    else:
        raise UsageError("fisher needs --schedule or --times")
    rep = fisher_information(ctx, times)
    pairs = [("total", _fmt(rep.total)), ("threshold", _fmt(ctx.threshold)),
             ("all_sparse", str(bool(np.all(rep.sparsity_ok))).lower())]
    if rep.bounds_applicable:
        pairs += [("min_bound", _fmt(rep.min_bound)), ("max_bound", _fmt(rep.max_bound))]
    return _kv(pairs)


def cmd_bounds(args):
    ctx = FisherContext(args.u, args.theta0)
    lo, lo_t = min_fisher_bound(ctx, args.T, args.m)
    hi, hi_t = max_fisher_bound(ctx, args.T, args.m)
    return _kv([("threshold", _fmt(ctx.threshold)), ("min_bound", _fmt(lo)),
                ("min_schedule", _times(lo_t)), ("max_bound", _fmt(hi)),
                ("max_schedule", _times(hi_t))])


def cmd_dp(args):
    ctx = FisherContext(args.u, args.theta0)
    sol = dp_schedule(ctx, args.T, args.m, grid_step=args.grid, objective=args.objective)
    return _kv([("objective", sol.objective), ("grid_step", _fmt(sol.grid_step)),
                ("value", _fmt(sol.value)), ("schedule", _times(sol.schedule.times))])


def cmd_schedule(args):
    ctx = None
    if args.u is not None and args.theta0 is not None:
        ctx = FisherContext(args.u, args.theta0)
    mcmc = McmcConfig(burn_in=args.mcmc_burn_in)
    sched = make_schedule(args.kind, args.T, args.m, args.seed, ctx, mcmc, args.backend)
    return schedule_to_csv(sched)


def cmd_compare(args):
    if not args.config:
        raise UsageError("compare needs --config")
    cfg = parse_config(_read(args.config))
    if args.seed_given:
        cfg["seed"] = str(args.seed)
    if args.quantize_time:
        cfg["quantize_time"] = "true"
    config_out = cfg.pop("out", None)
    if not args.out:
        args.out = config_out
    scn = scenario_from_config(cfg)
    if args.fisher_scan:
        rows = []
        for m in scn.budgets:
            rows += run_fisher_scan(scn.truth_context, scn.window_T, m, scn.schedules,
                                    scn.replications, scn.seed, scn.mcmc)
        return fisher_scan_to_csv(rows)
    return comparison_to_csv(run_comparison(scn, write=False))


def cmd_track(args):
    cfg = TrackerConfig(window_Tw=args.Tw, epsilon=args.epsilon,
                        initial_samples=args.initial_samples, schedule_kind=args.kind,
                        seed=args.seed, error_units=args.error_units,
                        quantize=args.quantize_time)
    script = step_scenario(args.start, args.increment, args.period, args.on_ratio)
    return track_to_csv(track(script, cfg, args.windows))


# --- parser --------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, top: bool):
    # subcommands accept the global flags too; SUPPRESS keeps their absence
    # from clobbering values given before the subcommand
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (u64)")
    p.add_argument("--config", default=d(None), help="flat key = value config file")
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")
    p.add_argument("--quantize-time", action="store_true", default=d(False),
                   help="round sojourns up to whole time units")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onoff-sensing",
                                description="On/off channel sensing experiments.")
    _global_flags(p, top=True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        _global_flags(sp, top=False)
        sp.set_defaults(func=fn)
        return sp

    def ctx_flags(sp):
        sp.add_argument("--u", type=float, required=True)
        sp.add_argument("--theta0", type=float, required=True)

    sp = add("simulate", cmd_simulate, "sample a channel path")
    sp.add_argument("--channel", choices=["exponential", "gamma"], default="exponential")
    sp.add_argument("--mean-off", type=float, required=True)
    sp.add_argument("--mean-on", type=float, required=True)
    sp.add_argument("--shape-off", type=float, default=2.0)
    sp.add_argument("--shape-on", type=float, default=2.0)
    sp.add_argument("--T", type=float, required=True)

    sp = add("observe", cmd_observe, "read a path at the times of a schedule")
    sp.add_argument("--realization", required=True)
    sp.add_argument("--schedule", required=True)

    sp = add("estimate", cmd_estimate, "estimate the off rate from a trace")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--u", type=float, default=None, help="fixed busy fraction (default: sample mean)")
    sp.add_argument("--method", choices=["numeric", "closed"], default="numeric")

    sp = add("fisher", cmd_fisher, "Fisher information of a schedule")
    ctx_flags(sp)
    sp.add_argument("--schedule")
    sp.add_argument("--times", help="comma-separated sampling times")

    sp = add("bounds", cmd_bounds, "min/max Fisher information bounds")
    ctx_flags(sp)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)

    sp = add("dp", cmd_dp, "grid-optimal best or worst schedule")
    ctx_flags(sp)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--grid", type=float, default=None)
    sp.add_argument("--objective", choices=[MAXIMIZE, MINIMIZE], default=MAXIMIZE)

    sp = add("schedule", cmd_schedule, "generate a sensing schedule")
    sp.add_argument("--kind", required=True,
                    help="uniform, random, exponential, normal, uniform_intervals, beta:<b>, "
                         "dp_best, dp_worst, theorem_best")
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--u", type=float)
    sp.add_argument("--theta0", type=float)
    sp.add_argument("--backend", choices=["mcmc", "cmv"], default="mcmc")
    sp.add_argument("--mcmc-burn-in", type=int, default=McmcConfig().burn_in)

    sp = add("compare", cmd_compare, "Monte Carlo schedule comparison from a config file")
    sp.add_argument("--fisher-scan", action="store_true",
                    help="report mean Fisher information per kind instead of estimates")

    sp = add("track", cmd_track, "adaptive tracking on a stepped channel")
    sp.add_argument("--windows", type=int, required=True)
    sp.add_argument("--Tw", type=float, default=3500.0)
    sp.add_argument("--epsilon", type=float, default=1.0)
    sp.add_argument("--initial-samples", type=int, default=350)
    sp.add_argument("--kind", choices=["random", "uniform"], default="random")
    sp.add_argument("--error-units", choices=["mean_off", "rate"], default="mean_off")
    sp.add_argument("--start", type=float, default=6.0)
    sp.add_argument("--increment", type=float, default=5.0)
    sp.add_argument("--period", type=float, default=30000.0)
    sp.add_argument("--on-ratio", type=float, default=0.5)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    elif not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        text = args.func(args)
        if args.out:
            write_text(args.out, text)
        else:
            sys.stdout.write(text)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SensingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
