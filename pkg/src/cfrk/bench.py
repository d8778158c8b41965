"""Experiment harness: convergence, work-precision, step-size traces, and
tableau validation, with reproducible CSV/JSON output.

Every output embeds the fully resolved configuration (defaults filled in,
seed included) as a JSON comment, so any row can be reproduced from the
file alone.  Reference solutions are computed on demand and cached on disk
keyed by a content hash of the problem, parameters, initial state, and time
span; the cache directory honors the CFRK_CACHE environment variable and
is safe to delete.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .catalog import get_tableau
from .controller import (ControllerConfig, IntegrationError,
                         integrate_adaptive, integrate_fixed)
from .order_conditions import certify_pair, is_genuine_pair
from .problems import build_problem
from .stepper import count_budget
from .tableaux import load_tableau, reuse_groups, scan_identical_rows

NEEDLE_WINDOW = (1.4, 1.56)

CSV_COLUMNS = {
    "convergence": ("h", "global_error", "local_slope"),
    "work-precision": ("tol", "global_error", "n_exp", "n_feval",
                       "n_steps", "n_rejected"),
    "needle": ("t", "h", "accepted", "y1", "y2", "err"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "rigid-body"
    problem_params: dict = field(default_factory=dict)
    tableau: str = "cf32a"
    mode: str = "adaptive"
    tols: tuple = ()
    steps: tuple = ()
    t0: float = 0.0
    t1: float = 2.0
    atol: float = 1e-6
    rtol: float = 1e-6
    h0: float | None = None
    hmax: float | None = None
    seed: int = 7
    advance_embedded: bool = False
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise ValueError("format must be csv or json")


def build_experiment(config: ExperimentConfig):
    params = dict(config.problem_params)
    if config.problem == "rigid-body" and "seed" not in params:
        params["seed"] = config.seed
    problem = build_problem(config.problem, params)
    name = config.tableau
    if name.endswith(".json") or os.path.sep in name:
        tableau = load_tableau(name)
    else:
        tableau = get_tableau(name)
    return problem, tableau


def resolved_config(config: ExperimentConfig, problem=None, tableau=None) -> dict:
    """The full configuration with defaults filled in, for output headers."""
    if problem is None or tableau is None:
        problem, tableau = build_experiment(config)
    out = dataclasses.asdict(config)
    out["problem_params"] = dataclasses.asdict(problem.params)
    out["tableau"] = tableau.name
    out["tols"] = list(config.tols)
    out["steps"] = list(config.steps)
    return out


# ------------------------------------------------------- reference solutions

def _cache_dir() -> str:
    return os.environ.get(
        "CFRK_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "cfrk"))


def _reference_key(problem, y0, t0: float, t1: float) -> str:
    blob = json.dumps({
        "problem": problem.name,
        "params": dataclasses.asdict(problem.params),
        "y0": np.asarray(y0, float).tolist(),
        "t0": t0,
        "t1": t1,
    }, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def reference_endpoint(problem, y0, t0: float, t1: float) -> np.ndarray:
    """High-accuracy solution at t1, cached on disk.

    Van der Pol uses a tight-tolerance adaptive run cross-checked against a
    small fixed step; the geometric problems use a fine fixed-step run
    cross-checked against one twice as fine.  A failed cross-check raises
    rather than returning a silently bad reference.
    """
    key = _reference_key(problem, y0, t0, t1)
    path = os.path.join(_cache_dir(), key + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            return np.asarray(json.load(fh)["y"], float)

    span = t1 - t0
    if problem.name == "van-der-pol":
        cfg = ControllerConfig(atol=1e-12, rtol=1e-12, hmax=1e-3)
        ref = integrate_adaptive(get_tableau("cf43"), problem, y0,
                                 t0, t1, cfg).y_end
        n_check = max(1, round(span / 1e-5))
        check = integrate_fixed(get_tableau("cf4"), problem, y0,
                                t0, t1, n_check).y_end
        agreement = float(np.linalg.norm(ref - check))
        if agreement > 1e-9:
            raise RuntimeError(
                f"reference cross-check failed for {problem.name}: adaptive "
                f"and fixed references differ by {agreement:.2e}")
    else:
        n_lo = max(2560, int(math.ceil(1280 * span)))
        lo = integrate_fixed(get_tableau("cf4"), problem, y0, t0, t1, n_lo).y_end
        ref = integrate_fixed(get_tableau("cf4"), problem, y0, t0, t1,
                              2 * n_lo).y_end
        agreement = float(np.linalg.norm(ref - lo))
        if agreement > 1e-9:
            raise RuntimeError(
                f"reference cross-check failed for {problem.name}: "
                f"refinement changed the endpoint by {agreement:.2e}")

    os.makedirs(_cache_dir(), exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"y": np.asarray(ref, float).tolist(),
                   "cross_check_gap": agreement}, fh)
    return np.asarray(ref, float)


# ------------------------------------------------------------------- runners

def run_convergence(config: ExperimentConfig):
    """Fixed-step global errors against the reference, with local slopes.

    Rows are (h, global_error, local_slope); the slope on each row is
    measured against the previous (coarser) row and the first row carries
    NaN.
    """
    problem, tableau = build_experiment(config)
    steps = config.steps or (40, 80, 160, 320)
    y0 = problem.default_y0
    ref = reference_endpoint(problem, y0, config.t0, config.t1)
    action = problem.action

    rows = []
    prev = None
    for n in steps:
        traj = integrate_fixed(tableau, problem, y0, config.t0, config.t1,
                               int(n), advance_embedded=config.advance_embedded)
        h = (config.t1 - config.t0) / n
        err = action.ambient_distance(traj.y_end, ref)
        slope = float("nan")
        if prev is not None:
            h_prev, e_prev = prev
            if err > 0.0 and e_prev > 0.0 and h_prev != h:
                slope = math.log(e_prev / err) / math.log(h_prev / h)
        rows.append((h, err, slope))
        prev = (h, err)
    summary = {"reference_norm": float(np.linalg.norm(ref)),
               "advance_embedded": config.advance_embedded}
    return rows, summary


def run_work_precision(config: ExperimentConfig):
    """Cost and accuracy per tolerance (adaptive) and per step count (fixed).

    Rows are (tol, global_error, n_exp, n_feval, n_steps, n_rejected);
    fixed-step rows carry tol = NaN.  A failed entry is recorded with
    global_error = NaN and listed in the summary instead of aborting the
    sweep.
    """
    problem, tableau = build_experiment(config)
    tols = config.tols or (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    y0 = problem.default_y0
    ref = reference_endpoint(problem, y0, config.t0, config.t1)
    action = problem.action

    rows = []
    failures = []
    for tol in tols:
        cfg = ControllerConfig(atol=tol, rtol=tol, h0=config.h0,
                               hmax=config.hmax or math.inf)
        try:
            traj = integrate_adaptive(tableau, problem, y0,
                                      config.t0, config.t1, cfg)
            err = action.ambient_distance(traj.y_end, ref)
        except IntegrationError as exc:
            failures.append(f"tol={tol:g}: {exc}")
            traj = exc.trajectory
            err = float("nan")
        tt = traj.totals
        rows.append((tol, err, tt.n_exp, tt.n_feval, tt.n_accepted,
                     tt.n_rejected))
    for n in config.steps:
        try:
            traj = integrate_fixed(tableau, problem, y0, config.t0,
                                   config.t1, int(n))
            err = action.ambient_distance(traj.y_end, ref)
        except IntegrationError as exc:
            failures.append(f"steps={n}: {exc}")
            traj = exc.trajectory
            err = float("nan")
        tt = traj.totals
        rows.append((float("nan"), err, tt.n_exp, tt.n_feval, tt.n_accepted,
                     tt.n_rejected))
    summary = {"failures": failures}
    return rows, summary


def run_needle(config: ExperimentConfig):
    """Per-attempt step trace of an adaptive run, with a step-size summary
    over the spike window t in [1.4, 1.56] (the Van der Pol needle).

    Rows are (t, h, accepted, y1, y2, err) for every attempt, rejected ones
    included; t is the time at the start of the attempt and y the candidate
    end state.
    """
    problem, tableau = build_experiment(config)
    tol = config.tols[0] if config.tols else config.atol
    # Default max step of a tenth of the span (the usual ODE-suite choice)
    # keeps the slow-branch part of the trace resolved.
    hmax = config.hmax if config.hmax is not None \
        else (config.t1 - config.t0) / 10.0
    cfg = ControllerConfig(atol=tol, rtol=tol, h0=config.h0, hmax=hmax)
    y0 = problem.default_y0
    traj = integrate_adaptive(tableau, problem, y0, config.t0, config.t1, cfg)

    rows = []
    for at in traj.h_history:
        y = np.asarray(at.y, float).ravel()
        y1 = float(y[0]) if y.size > 0 else float("nan")
        y2 = float(y[1]) if y.size > 1 else float("nan")
        rows.append((at.t, at.h, at.accepted, y1, y2, at.err))

    lo, hi = NEEDLE_WINDOW
    accepted_h = [at.h for at in traj.h_history if at.accepted]
    window_h = [at.h for at in traj.h_history
                if at.accepted and lo <= at.t <= hi]
    n_att = len(traj.h_history)
    summary = {
        "needle_window": [lo, hi],
        "min_h_in_window": min(window_h) if window_h else float("nan"),
        "median_h": float(np.median(accepted_h)) if accepted_h else float("nan"),
        "n_accepted": traj.totals.n_accepted,
        "n_rejected": traj.totals.n_rejected,
        "reject_fraction": traj.totals.n_rejected / n_att if n_att else 0.0,
        "t_end": traj.t_end,
        "y_end": np.asarray(traj.y_end, float).tolist(),
        "n_exp": traj.totals.n_exp,
    }
    return rows, summary


def run_tableau_check(config: ExperimentConfig):
    """Validation report for one tableau: order-condition residuals,
    certified orders, reuse census, and static cost budget.

    Returns (text_report, payload).  The boolean payload["ok"] is true when
    the certified orders match the claimed ones and all declared reuse is
    sound and maximal.
    """
    name = config.tableau
    if name.endswith(".json") or os.path.sep in name:
        tableau = load_tableau(name)
    else:
        tableau = get_tableau(name)

    reports = certify_pair(tableau)
    principal = reports["principal"]
    lines = [f"tableau {tableau.name}: s={tableau.s}, fsal={tableau.fsal}, "
             f"claimed order {tableau.order_p}"
             + (f"({tableau.order_phat})" if tableau.has_embedded else "")]

    def render(report, claimed):
        lines.append(f"  {report.which}: certified algebraic order "
                     f"{report.certified_algebraic_order} "
                     f"(claimed {claimed}, tolerance {report.tolerance:g})")
        for label, value in report.classical_residuals.items():
            lines.append(f"    classical   {label:24s} residual {value: .3e}")
        for label, value in report.nonclassical_residuals.items():
            lines.append(f"    split       {label:36s} residual {value: .3e}")
        violated = report.failed(claimed, report.tolerance)
        for label in violated:
            lines.append(f"    VIOLATED at claimed order: {label}")
        for note in report.notes:
            lines.append(f"    note: {note}")
        return violated

    bad = list(render(principal, tableau.order_p))
    pair_ok = True
    if tableau.has_embedded:
        bad += render(reports["embedded"], tableau.order_phat)
        pair_ok, _ = is_genuine_pair(tableau)
        lines.append(f"  genuine {tableau.order_p}({tableau.order_phat}) "
                     f"pair: {pair_ok}")

    declared = reuse_groups(tableau)
    observed = scan_identical_rows(tableau)
    maximal = (sorted(map(sorted, declared)) == sorted(map(sorted, observed)))
    lines.append(f"  reuse groups declared: "
                 + ("; ".join(str(sorted(g)) for g in declared) or "none"))
    lines.append(f"  declared reuse maximal and sound: {maximal}")

    n_exp, n_feval = count_budget(tableau)
    lines.append(f"  budget per step (fsal carry, reuse on): "
                 f"{n_exp} exponentials, {n_feval} f evaluations")

    ok = (not bad) and maximal and pair_ok
    payload = {
        "name": tableau.name,
        "ok": bool(ok),
        "violated": bad,
        "certified_order": principal.certified_algebraic_order,
        "claimed_order": tableau.order_p,
        "reuse_maximal": bool(maximal),
        "n_exp": n_exp,
        "n_feval": n_feval,
    }
    if tableau.has_embedded:
        payload["certified_order_embedded"] = \
            reports["embedded"].certified_algebraic_order
        payload["genuine_pair"] = bool(pair_ok)
    return "\n".join(lines), payload


# -------------------------------------------------------------- serialization

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(columns, rows, config_dict: dict, summary: dict | None = None) -> str:
    lines = ["# " + json.dumps(config_dict, sort_keys=True,
                               separators=(",", ":"))]
    if summary is not None:
        lines.append("# summary: " + json.dumps(summary, sort_keys=True,
                                                separators=(",", ":")))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt_value(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(columns, rows, config_dict: dict, summary: dict | None = None) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v
    doc = {
        "config": config_dict,
        "columns": list(columns),
        "rows": [[clean(v) for v in row] for row in rows],
    }
    if summary is not None:
        doc["summary"] = summary
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_output(text: str, out: str | None) -> None:
    if out is None:
        print(text, end="")
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
