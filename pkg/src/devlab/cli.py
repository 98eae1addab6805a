"""Command-line entry point: ``devlab <subcommand> [options]``.

Option values come from, in increasing priority: built-in defaults, a flat
``key=value`` file given with ``--config``, then the command line.
``DEVLAB_WORKERS`` is the fallback for ``--workers``.

Exit codes: 0 success, 2 invalid options, 3 invariant violation during a run.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .belief import Belief, UpdateSource
from .diagnostics import run_diagnostics
from .engine import (
    InvariantViolation,
    RecordGranularity,
    SimConfig,
    resolve_workers,
    run_batch,
    run_trial,
    single_round_experiment,
)
from .io import RunManifest, Series, load_config, svg_plot, write_csv
from .policies import PolicyKind, PolicySpec, myopic_case, myopic_threshold, myopic_value

log = logging.getLogger("devlab")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3


class UsageError(Exception):
    pass


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _names(text) -> List[str]:
    if isinstance(text, (list, tuple)):
        return list(text)
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _policy_name(text) -> str:
    try:
        return PolicyKind(str(text).strip().lower()).value
    except ValueError:
        raise ValueError(f"unknown policy {text!r}; choose from {[k.value for k in PolicyKind]}") from None


def _policy_list(text) -> List[str]:
    return [_policy_name(v) for v in _names(text)]


# option name -> (converter, default); names are argparse dests
_COMMON = {
    "seed": (int, 0),
    "out": (str, "out"),
    "workers": (int, None),
    "backend": (str, None),
    "svg": (_bool, False),
}

_SPECS: Dict[str, Dict] = {
    "simulate": {
        "policy": (_policy_name, None),
        "T": (int, 10_000),
        "trials": (int, 5_000),
        "c_eps": (float, None),
        "paired_seeds": (_bool, False),
        "full_records": (_bool, False),
    },
    "shrink-experiment": {
        "policies": (_policy_list, ["straightforward", "myopic", "eve", "ternary"]),
        "u_fixed": (float, 0.5),
        "widths": (_floats, None),
        "samples": (int, 10_000),
        "c_eps": (float, 0.25),
    },
    "myopic-profile": {
        "x": (float, 3.0),
        "u": (float, 0.5),
        "l_list": (_floats, [-0.8, -0.4, -0.2, 0.0, 0.2, 0.4]),
        "rho_min": (float, -3.0),
        "rho_max": (float, 2.0),
        "points": (int, 501),
    },
    "diagnostics": {
        "policies": (_policy_list, ["straightforward", "ternary"]),
        "T": (int, 10_000),
        "trials": (int, 5_000),
        "c_eps": (float, 0.25),
        "every": (int, 1),
    },
}
_SPECS["per-round-regret"] = dict(_SPECS["shrink-experiment"])

_ALIASES = {"horizon": "T", "t": "T", "c": "c_eps", "policy_list": "policies", "l": "l_list"}

# settings that change where or how fast results are produced, not what they are
_NOT_ECHOED = {"out", "workers", "backend", "svg", "config"}


def default_widths() -> List[float]:
    return [round(0.015 * k, 3) for k in range(1, 101)]


def resolve_options(command: str, cli: Dict, config_file: Optional[str]) -> Dict:
    spec = {**_COMMON, **_SPECS[command]}
    values = {k: default for k, (_, default) in spec.items()}
    explicit = set()
    sources = []
    if config_file:
        try:
            sources.append(load_config(config_file))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    sources.append({k: v for k, v in cli.items() if v is not None and k in spec})
    for src in sources:
        for key, raw in src.items():
            key = _ALIASES.get(key, key)
            if key not in spec:
                raise UsageError(f"unknown option {key!r} for {command}")
            conv = spec[key][0]
            try:
                values[key] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid value for {key}: {exc}") from None
            explicit.add(key)
    values["_explicit"] = explicit
    return values


def _check_positive(opts: Dict, *names):
    for name in names:
        if opts.get(name) is not None and not opts[name] > 0:
            raise UsageError(f"{name} must be positive, got {opts[name]}")


def _experiment_policy(name: str, c_eps: float) -> PolicySpec:
    kind = PolicyKind(name)
    if kind is PolicyKind.TERNARY:
        return PolicySpec.ternary(c_eps)
    if kind is PolicyKind.EVE:
        return PolicySpec.eve_exploration()
    return PolicySpec(kind)


def _echo(command: str, opts: Dict) -> Dict:
    return {k: v for k, v in sorted(opts.items()) if k not in _NOT_ECHOED and not k.startswith("_")}


def _outdir(opts: Dict) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -----------------------------------------------------------


def cmd_simulate(opts: Dict) -> int:
    if opts["policy"] is None:
        raise UsageError("--policy is required")
    _check_positive(opts, "T", "trials", "c_eps")
    kind = PolicyKind(opts["policy"])
    if kind is PolicyKind.TERNARY:
        if opts["c_eps"] is None:
            opts["c_eps"] = 0.25
        policy = PolicySpec.ternary(opts["c_eps"])
    elif opts["c_eps"] is not None:
        raise UsageError("--c-eps only applies to the ternary policy")
    elif kind is PolicyKind.EVE:
        policy = PolicySpec.eve(opts["T"])
    else:
        policy = PolicySpec(kind)
    if opts["seed"] < 0:
        raise UsageError("--seed must be non-negative")
    config = SimConfig(policy, horizon=opts["T"], trials=opts["trials"], base_seed=opts["seed"],
                       paired_seeds=opts["paired_seeds"])
    out = _outdir(opts)
    echo = _echo("simulate", opts)
    manifest = RunManifest("simulate", echo, __version__)
    rid = manifest.run_id
    workers = resolve_workers(opts["workers"])
    start = time.perf_counter()
    agg = run_batch(config, workers=workers, backend=opts["backend"])
    t = np.arange(1, config.horizon + 1)
    write_csv(out / "regret_curve.csv", ["t", "mean_cum_regret", "p25", "p75"],
              zip(t, agg.mean_cum_regret, agg.p25, agg.p75), rid)
    write_csv(out / "final_summary.csv", ["mean", "two_sigma"], [(agg.final_mean, agg.final_two_sigma)], rid)
    if opts["full_records"]:
        trial = run_trial(replace(config, record=RecordGranularity.FULL), 0, opts["backend"])
        lg = trial.rounds
        write_csv(out / "rounds_trial0.csv",
                  ["t", "x", "z", "message", "chosen", "optimal", "reg", "z_mean", "lower_after",
                   "upper_after", "update_source"],
                  zip(t, lg.x, lg.z, lg.message, lg.chosen, lg.optimal, lg.reg, lg.z_mean,
                      lg.lower_after, lg.upper_after, (UpdateSource(int(s)).name.lower() for s in lg.source)),
                  rid)
    if opts["svg"]:
        svg_plot(out / "regret_curve.svg",
                 [Series(policy.label, t, agg.mean_cum_regret, (agg.p25, agg.p75))],
                 title="Cumulative regret", xlabel="round t", ylabel="E[Reg(t)]")
    manifest.duration_s = time.perf_counter() - start
    manifest.checks = {"invariants_hold": True, "no_degenerate_updates": agg.clamp_count == 0}
    manifest.extra = {"final_mean": agg.final_mean, "final_two_sigma": agg.final_two_sigma,
                      "clamp_count": agg.clamp_count, "workers": workers,
                      "backend": opts["backend"] or "default"}
    manifest.write(out)
    print(f"{policy.label}: final mean cumulative regret {agg.final_mean:.6g} "
          f"+/- {agg.final_two_sigma:.3g} over {config.trials} trials (T={config.horizon})")
    return EXIT_OK


def _single_round_cmd(opts: Dict, command: str) -> int:
    _check_positive(opts, "samples", "c_eps")
    widths = opts["widths"] if opts["widths"] is not None else default_widths()
    if not widths:
        raise UsageError("--widths is empty")
    for w in widths:
        if not w > 0:
            raise UsageError(f"widths must be positive, got {w}")
        if opts["u_fixed"] - w < -1.0 or opts["u_fixed"] > 1.0:
            raise UsageError(f"belief ({opts['u_fixed'] - w}, {opts['u_fixed']}) leaves [-1, 1]")
    opts["widths"] = widths
    out = _outdir(opts)
    manifest = RunManifest(command, _echo(command, opts), __version__)
    rid = manifest.run_id
    start = time.perf_counter()
    table = []
    curves = []
    for name in opts["policies"]:
        policy = _experiment_policy(name, opts["c_eps"])
        rows = single_round_experiment(policy, opts["u_fixed"], widths, opts["samples"], opts["seed"],
                                       opts["backend"])
        label = "eve_exploration" if policy.kind is PolicyKind.EVE else name
        for r in rows:
            if command == "shrink-experiment":
                table.append((label, r.width, r.shrink_pct, r.shrink_pct_se))
            else:
                table.append((label, r.width, r.regret, r.regret_se))
        ys = [r.shrink_pct if command == "shrink-experiment" else r.regret for r in rows]
        curves.append(Series(label, np.array(widths), np.array(ys)))
    if command == "shrink-experiment":
        fname, header, ylabel = "shrink.csv", ["policy", "width", "shrink_pct", "shrink_pct_se"], "shrink (%)"
    else:
        fname, header, ylabel = "per_round_regret.csv", ["policy", "width", "regret", "regret_se"], "E[reg(t)]"
    write_csv(out / fname, header, table, rid)
    if opts["svg"]:
        svg_plot(out / fname.replace(".csv", ".svg"), curves, title=command, xlabel="width w", ylabel=ylabel)
    manifest.duration_s = time.perf_counter() - start
    manifest.checks = {"completed": True}
    manifest.write(out)
    print(f"wrote {out / fname} ({len(table)} rows)")
    return EXIT_OK


def cmd_shrink(opts: Dict) -> int:
    return _single_round_cmd(opts, "shrink-experiment")


def cmd_per_round_regret(opts: Dict) -> int:
    return _single_round_cmd(opts, "per-round-regret")


def cmd_myopic_profile(opts: Dict) -> int:
    x = opts["x"]
    if x == 0.0:
        raise UsageError("--x must be nonzero")
    if not opts["rho_min"] < opts["rho_max"]:
        raise UsageError("--rho-min must be below --rho-max")
    if opts["points"] < 2:
        raise UsageError("--points must be at least 2")
    beliefs = []
    for lo in opts["l_list"]:
        try:
            beliefs.append(Belief(lo, opts["u"]))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    out = _outdir(opts)
    manifest = RunManifest("myopic-profile", _echo("myopic-profile", opts), __version__)
    rid = manifest.run_id
    start = time.perf_counter()
    grid = np.linspace(opts["rho_min"], opts["rho_max"], opts["points"])
    curve_rows, optima_rows, curves = [], [], []
    for b in beliefs:
        vals = np.array([myopic_value(r, x, b) for r in grid])
        curve_rows.extend((b.lower, r, v, myopic_case(r, x, b)) for r, v in zip(grid, vals))
        rho_star = myopic_threshold(x, b)
        optima_rows.append((b.lower, rho_star, myopic_value(rho_star, x, b), myopic_case(rho_star, x, b),
                            -x * b.mid, myopic_value(-x * b.mid, x, b)))
        curves.append(Series(f"l={b.lower:g}", grid, vals))
    write_csv(out / "myopic_profile.csv", ["l", "rho", "value", "case"], curve_rows, rid)
    write_csv(out / "myopic_optima.csv",
              ["l", "rho_star", "value_star", "case", "rho_straightforward", "value_straightforward"],
              optima_rows, rid)
    if opts["svg"]:
        svg_plot(out / "myopic_profile.svg", curves, title=f"V(rho), x={x:g}, u={opts['u']:g}",
                 xlabel="rho", ylabel="V(rho)")
    manifest.duration_s = time.perf_counter() - start
    manifest.checks = {"completed": True}
    manifest.write(out)
    for row in optima_rows:
        print(f"l={row[0]:g}: rho*={row[1]:.6g} (case {row[3]}), V*={row[2]:.6g}")
    return EXIT_OK


def cmd_diagnostics(opts: Dict) -> int:
    _check_positive(opts, "T", "trials", "c_eps", "every")
    if opts["seed"] < 0:
        raise UsageError("--seed must be non-negative")
    out = _outdir(opts)
    manifest = RunManifest("diagnostics", _echo("diagnostics", opts), __version__)
    rid = manifest.run_id
    workers = resolve_workers(opts["workers"])
    start = time.perf_counter()
    series_rows, summary_rows, curves = [], [], []
    finals = {}
    for name in opts["policies"]:
        kind = PolicyKind(name)
        policy = (PolicySpec.ternary(opts["c_eps"]) if kind is PolicyKind.TERNARY
                  else PolicySpec.eve(opts["T"]) if kind is PolicyKind.EVE else PolicySpec(kind))
        config = SimConfig(policy, horizon=opts["T"], trials=opts["trials"], base_seed=opts["seed"],
                           record=RecordGranularity.FULL)
        res = run_diagnostics(config, workers=workers, backend=opts["backend"])
        m = res.mean
        idx = np.arange(opts["every"] - 1, opts["T"], opts["every"])
        if idx[-1] != opts["T"] - 1:
            idx = np.append(idx, opts["T"] - 1)
        for i in idx:
            series_rows.append((name, i + 1, m.count_obey[i], m.count_deviate[i], m.count_otf[i],
                                m.acc_total[i], m.acc_obey[i], m.acc_deviate[i], m.acc_otf[i]))
        n = len(res.final_acc)
        sd = float(res.final_acc.std(ddof=1)) if n > 1 else 0.0
        finals[name] = float(res.final_acc.mean())
        summary_rows.append((name, n, finals[name], 2.0 * sd / np.sqrt(n), m.acc_obey[-1], m.acc_deviate[-1],
                             m.acc_otf[-1], m.count_obey[-1], m.count_deviate[-1], m.count_otf[-1],
                             res.max_identity_residual))
        curves.append(Series(name, np.arange(1, opts["T"] + 1), m.acc_total))
    write_csv(out / "diagnostics.csv",
              ["policy", "t", "count_obey", "count_deviate", "count_otf", "acc_total", "acc_obey",
               "acc_deviate", "acc_otf"], series_rows, rid)
    write_csv(out / "diagnostics_summary.csv",
              ["policy", "trials", "final_acc_mean", "final_acc_two_sigma", "acc_obey", "acc_deviate",
               "acc_otf", "count_obey", "count_deviate", "count_otf", "max_identity_residual"],
              summary_rows, rid)
    if opts["svg"]:
        svg_plot(out / "accuracy.svg", curves, title="Accuracy", xlabel="round t", ylabel="ACC(t)")
    manifest.duration_s = time.perf_counter() - start
    manifest.checks = {"invariants_hold": True,
                       "decomposition_identity": all(r[-1] <= 1e-9 for r in summary_rows)}
    if "ternary" in finals and "straightforward" in finals:
        manifest.extra["acc_gap_ternary_minus_straightforward"] = finals["ternary"] - finals["straightforward"]
    manifest.write(out)
    for row in summary_rows:
        print(f"{row[0]}: mean final accuracy {row[2]:.6g} nats (obey {row[4]:.4g}, deviate {row[5]:.4g}, "
              f"on-the-fence {row[6]:.4g})")
    return EXIT_OK


_COMMANDS: Dict[str, Callable[[Dict], int]] = {
    "simulate": cmd_simulate,
    "shrink-experiment": cmd_shrink,
    "per-round-regret": cmd_per_round_regret,
    "myopic-profile": cmd_myopic_profile,
    "diagnostics": cmd_diagnostics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="devlab", description="Recommendation-game simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="base seed (default 0)")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--workers", type=int, help="worker pool size (default $DEVLAB_WORKERS or CPU count)")
        p.add_argument("--backend", choices=["compiled", "python"], help="trial kernel (default: compiled if built)")
        p.add_argument("--svg", action="store_const", const=True, help="also write an SVG plot")
        p.add_argument("--config", help="flat key=value file; command-line flags take precedence")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("simulate", help="regret curves over many trials")
    p.add_argument("--policy", help="straightforward | ternary | myopic | eve")
    p.add_argument("--T", dest="T", type=int, help="rounds per trial (default 10000)")
    p.add_argument("--trials", type=int, help="number of trials (default 5000)")
    p.add_argument("--c-eps", dest="c_eps", type=float, help="ternary on-the-fence factor (default 0.25)")
    p.add_argument("--paired-seeds", action="store_const", const=True,
                   help="same random draws for every policy (trial i sees identical state and signals)")
    p.add_argument("--full-records", action="store_const", const=True,
                   help="also write every round of trial 0 to rounds_trial0.csv")
    common(p)

    for name, what in (("shrink-experiment", "expected one-round percentage shrink of the belief width"),
                       ("per-round-regret", "expected one-round regret")):
        p = sub.add_parser(name, help=what)
        p.add_argument("--policies", help="comma-separated policy list (default all four)")
        p.add_argument("--policy", dest="policies", help="single policy (alias of --policies)")
        p.add_argument("--u-fixed", dest="u_fixed", type=float, help="upper end of the belief (default 0.5)")
        p.add_argument("--widths", help="comma-separated belief widths (default 0.015..1.5)")
        p.add_argument("--samples", type=int, help="draws per width (default 10000)")
        p.add_argument("--c-eps", dest="c_eps", type=float, help="ternary factor (default 0.25)")
        common(p)

    p = sub.add_parser("myopic-profile", help="myopic payoff V(rho) curves and their maximisers")
    p.add_argument("--x", type=float, help="context (default 3.0)")
    p.add_argument("--u", type=float, help="upper end of the belief (default 0.5)")
    p.add_argument("--l-list", dest="l_list", help="comma-separated lower ends (default -0.8,-0.4,-0.2,0,0.2,0.4)")
    p.add_argument("--rho-min", dest="rho_min", type=float)
    p.add_argument("--rho-max", dest="rho_max", type=float)
    p.add_argument("--points", type=int, help="grid points (default 501)")
    common(p)

    p = sub.add_parser("diagnostics", help="update counts and accuracy decomposition by update source")
    p.add_argument("--policies", help="comma-separated policy list (default straightforward,ternary)")
    p.add_argument("--policy", dest="policies", help="single policy (alias of --policies)")
    p.add_argument("--T", dest="T", type=int)
    p.add_argument("--trials", type=int, help="number of trials (default 5000)")
    p.add_argument("--c-eps", dest="c_eps", type=float)
    p.add_argument("--every", type=int, help="write every k-th round (default 1)")
    common(p)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        opts = resolve_options(args.command, cli, args.config)
        if opts["workers"] is not None and opts["workers"] < 1:
            raise UsageError("--workers must be >= 1")
        try:
            resolve_workers(opts["workers"])
        except ValueError as exc:
            raise UsageError(f"DEVLAB_WORKERS: {exc}") from None
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"devlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"devlab {args.command}: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"devlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
