"""Command-line interface.

Subcommands mirror the experiment classes: ``tableaux list`` and
``tableaux check`` for validation, ``integrate`` for a single adaptive run,
and ``convergence`` / ``work-precision`` / ``needle`` for the benchmark
sweeps.  Output goes to stdout or, with --out, to a CSV/JSON file carrying
the fully resolved configuration in its header.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bench import (CSV_COLUMNS, ExperimentConfig, build_experiment,
                    render_csv, render_json, resolved_config,
                    run_convergence, run_needle, run_tableau_check,
                    run_work_precision, write_output)
from .catalog import catalog
from .controller import ControllerConfig, IntegrationError, integrate_adaptive
from .stepper import count_budget


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise SystemExit(f"--param expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _add_common(sp, *, tableau_default=None):
    sp.add_argument("--problem", default="rigid-body",
                    choices=("rigid-body", "van-der-pol", "heavy-top"))
    sp.add_argument("--tableau", default=tableau_default,
                    help="catalog name or path to a tableau JSON file")
    sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="problem parameter override (repeatable)")
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--t1", type=float, default=2.0)
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", dest="fmt", default="csv",
                    choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfrk",
        description="Adaptive commutator-free Lie group integrators")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tab = sub.add_parser("tableaux", help="inspect or validate tableaux")
    tab_sub = p_tab.add_subparsers(dest="tableaux_command", required=True)
    tab_sub.add_parser("list", help="list catalog tableaux")
    p_check = tab_sub.add_parser("check", help="validate one tableau")
    p_check.add_argument("--tableau", required=True)
    p_check.add_argument("--out", default=None)
    p_check.add_argument("--format", dest="fmt", default="csv",
                         choices=("csv", "json"))

    p_int = sub.add_parser("integrate", help="one adaptive integration")
    _add_common(p_int, tableau_default="cf43")
    p_int.add_argument("--atol", type=float, default=1e-6)
    p_int.add_argument("--rtol", type=float, default=1e-6)
    p_int.add_argument("--h0", type=float, default=None)
    p_int.add_argument("--hmax", type=float, default=None)

    p_conv = sub.add_parser("convergence", help="fixed-step convergence table")
    _add_common(p_conv, tableau_default="cf4")
    p_conv.add_argument("--steps", action="append", type=int,
                        help="step count (repeatable)")
    p_conv.add_argument("--embedded", action="store_true",
                        help="advance with the embedded solution instead")

    p_wp = sub.add_parser("work-precision",
                          help="cost vs error across tolerances")
    _add_common(p_wp, tableau_default="cf32a")
    p_wp.add_argument("--tol", action="append", type=float,
                      help="tolerance (repeatable)")
    p_wp.add_argument("--steps", action="append", type=int,
                      help="also run fixed-step entries (repeatable)")
    p_wp.add_argument("--h0", type=float, default=None)
    p_wp.add_argument("--hmax", type=float, default=None)

    p_needle = sub.add_parser("needle", help="adaptive step-size trace")
    _add_common(p_needle, tableau_default="cf32a")
    p_needle.add_argument("--tol", action="append", type=float)
    p_needle.add_argument("--h0", type=float, default=None)
    p_needle.add_argument("--hmax", type=float, default=None)
    p_needle.set_defaults(problem="van-der-pol", t1=15.0)

    return parser


def _config_from(args, mode: str, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        problem=args.problem,
        problem_params=_parse_params(getattr(args, "param", None)),
        tableau=args.tableau,
        mode=mode,
        tols=tuple(getattr(args, "tol", None) or ()),
        steps=tuple(getattr(args, "steps", None) or ()),
        t0=args.t0,
        t1=args.t1,
        h0=getattr(args, "h0", None),
        hmax=getattr(args, "hmax", None),
        seed=args.seed,
        out=args.out,
        fmt=args.fmt,
        **extra,
    )


def _emit(kind: str, rows, summary, config: ExperimentConfig) -> None:
    cols = CSV_COLUMNS[kind]
    cfg_dict = resolved_config(config)
    render = render_csv if config.fmt == "csv" else render_json
    write_output(render(cols, rows, cfg_dict, summary), config.out)


def _cmd_tableaux_list() -> int:
    for t in catalog():
        n_exp, n_feval = count_budget(t)
        pair = f"{t.order_p}({t.order_phat})" if t.has_embedded \
            else str(t.order_p)
        print(f"{t.name:14s} s={t.s} order={pair:5s} fsal={str(t.fsal):5s} "
              f"exp/step={n_exp} feval/step={n_feval}")
    return 0


def _cmd_tableaux_check(args) -> int:
    config = ExperimentConfig(tableau=args.tableau, mode="tableau-check",
                              out=args.out, fmt=args.fmt)
    text, payload = run_tableau_check(config)
    if args.fmt == "json":
        write_output(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                     args.out)
    else:
        write_output(text + "\n", args.out)
    return 0 if payload["ok"] else 1


def _cmd_integrate(args) -> int:
    config = _config_from(args, "adaptive", atol=args.atol, rtol=args.rtol)
    problem, tableau = build_experiment(config)
    cfg = ControllerConfig(atol=args.atol, rtol=args.rtol, h0=args.h0,
                           hmax=args.hmax if args.hmax is not None else math.inf)
    try:
        traj = integrate_adaptive(tableau, problem, problem.default_y0,
                                  args.t0, args.t1, cfg)
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    rows = []
    for at in traj.h_history:
        y = np.asarray(at.y, float).ravel()
        rows.append((at.t, at.h, at.accepted,
                     float(y[0]), float(y[1]) if y.size > 1 else float("nan"),
                     at.err))
    summary = {
        "t_end": traj.t_end,
        "y_end": np.asarray(traj.y_end, float).tolist(),
        "n_accepted": traj.totals.n_accepted,
        "n_rejected": traj.totals.n_rejected,
        "n_exp": traj.totals.n_exp,
        "n_feval": traj.totals.n_feval,
    }
    _emit("needle", rows, summary, config)
    return 0


def _run_sweep(kind: str, runner, config: ExperimentConfig) -> int:
    rows, summary = runner(config)
    _emit(kind, rows, summary, config)
    failures = summary.get("failures", []) if isinstance(summary, dict) else []
    return 1 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "tableaux":
        if args.tableaux_command == "list":
            return _cmd_tableaux_list()
        return _cmd_tableaux_check(args)
    if args.command == "integrate":
        return _cmd_integrate(args)
    if args.command == "convergence":
        config = _config_from(args, "convergence",
                              advance_embedded=args.embedded)
        return _run_sweep("convergence", run_convergence, config)
    if args.command == "work-precision":
        config = _config_from(args, "work-precision")
        return _run_sweep("work-precision", run_work_precision, config)
    if args.command == "needle":
        config = _config_from(args, "needle")
        return _run_sweep("needle", run_needle, config)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
