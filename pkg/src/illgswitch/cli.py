"""Command-line driver.

Subcommands
-----------
plan       resolve a config, print the switching plan, optionally write a
           machine-readable plan file and the admissible resonance table
simulate   integrate the switching experiment, write a trajectory CSV
sweep      rerun the experiment over a t_star or field-amplitude grid
approx     evaluate the closed-form approximations only (no integration)
validate   run the bundled acceptance suite and report pass/fail

All runs start from the rest state m = e1, v = 0.  CSV output is
comma-separated with LF endings, a fixed header row, '#' provenance
comments echoing the fully resolved parameter set, and floats rendered
with 17 significant digits; identical configs produce byte-identical
files.

Exit codes: 0 success, 2 config error, 3 gate failure (validity
threshold or frame hypothesis), 4 infeasible plan, 5 integrator
failure, 6 validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .approx import ApproxSolution, angles_leq2, m_leq1, m_leq2, velocity_leq1
from .config import dump_config, load_config
from .errors import ConfigError, IllgswitchError, InfeasiblePlanError
from .integrator import integrate, sweep as run_sweep
from .model import FieldSchedule, SpinState
from .planner import PlanCase, admissible_b, compute_plan

__all__ = ["main"]

_F = "%.17g"


def _fmt(x):
    return _F % float(x)


def _rest_state():
    return SpinState(np.array([1.0, 0.0, 0.0]), np.zeros(3))


# -- provenance -------------------------------------------------------------

def _provenance(resolved):
    """'#' comment block echoing the config and every derived scale."""
    cfg = resolved.config
    sp = resolved.scaled
    plan = resolved.plan
    lines = ["# config:"]
    for raw in dump_config(cfg).rstrip("\n").split("\n"):
        lines.append(("#   " + raw) if raw else "#")
    ehd = np.diag(sp.E_hat)
    lines += [
        "# resolved: alpha=%s eta=%s epsilon=%s" % (
            _fmt(resolved.params.alpha), _fmt(resolved.params.eta),
            _fmt(sp.epsilon)),
        "# resolved: alpha_hat=%s eta_hat=%s mu=%s" % (
            _fmt(sp.alpha_hat), _fmt(sp.eta_hat), _fmt(sp.mu)),
        "# resolved: omega=%s omega_hat=%s" % (
            _fmt(sp.omega), _fmt(sp.omega_hat)),
        "# resolved: h_a=(%s, %s, %s)" % tuple(_fmt(h) for h in resolved.h_a),
        "# resolved: Ehat_diag=(%s, %s, %s)" % tuple(_fmt(e) for e in ehd),
        "# plan: case=%s n=%s T_sw=%s delta_sw=%s delta_sw_star=%s" % (
            plan.case.value, plan.n if plan.n is not None else "-",
            _fmt(plan.T_sw), _fmt(plan.delta_sw), _fmt(plan.delta_sw_star)),
        "# plan: Xi=%s K_f=%s mu0_tilde=%s" % (
            _fmt(plan.Xi), _fmt(plan.K_f), _fmt(plan.mu0_tilde)),
        "# schedule: t_star=%s t_end=%s" % (
            _fmt(resolved.schedule.t_star), _fmt(resolved.integrator.t_end)),
    ]
    return lines


def _write_lines(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _stride_indices(n, budget):
    """Indices of at most `budget` evenly spaced samples out of n,
    always including the first row (and the last when budget >= 2)."""
    if budget is None or budget >= n:
        return np.arange(n)
    if budget == 1:
        return np.array([0])
    idx = np.unique(np.round(np.linspace(0, n - 1, budget)).astype(int))
    return idx


# -- subcommands ------------------------------------------------------------

def _load(args):
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "t_star", None) is not None:
        overrides["t_star"] = (None if args.t_star == "auto"
                               else _parse_time(args.t_star, "--t-star"))
    if getattr(args, "stride", None) is not None:
        overrides["stride"] = args.stride
    if getattr(args, "with_approx", False):
        overrides["with_approx"] = True
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def _parse_time(raw, flag):
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"{flag} expects a number or 'auto', "
                          f"got {raw!r}") from None
    if val < 0.0:
        raise ConfigError(f"{flag} must be >= 0")
    return val


def cmd_plan(args):
    cfg = _load(args)
    resolved = cfg.resolve()
    sp = resolved.scaled
    plan = resolved.plan
    if plan.case is PlanCase.INFEASIBLE:
        kind = ("kinetic margin Xi = %s < 1 and omega_hat = %s is not "
                "within 1e-9 of a resonance 1/(2 mu n)"
                % (_fmt(plan.Xi), _fmt(sp.omega_hat)))
        raise InfeasiblePlanError(
            "no switching guarantee for this field: " + kind)
    print("case: %s%s" % (plan.case.value,
                          "" if plan.n is None else f" (resonant n = {plan.n})"))
    print("mu: %s  (threshold mu0_tilde = %s)" % (_fmt(sp.mu),
                                                  _fmt(plan.mu0_tilde)))
    print("omega_hat: %s" % _fmt(sp.omega_hat))
    print("T_sw: %s" % _fmt(plan.T_sw))
    print("delta_sw: %s" % _fmt(plan.delta_sw))
    print("delta_sw_star: %s" % _fmt(plan.delta_sw_star))
    print("window: [%s, %s]" % (_fmt(plan.window[0]), _fmt(plan.window[1])))
    print("Xi: %s" % _fmt(plan.Xi))
    print("K_f: %s" % _fmt(plan.K_f))
    print("tau_sw: %s" % _fmt(plan.tau_sw))
    if args.table is not None:
        n_max = args.table if args.table > 0 else 10 ** 6
        rows = admissible_b(sp.mu, sp.alpha_hat, sp.eta_hat,
                            np.array(cfg.D), n_max)
        print()
        print("admissible resonant amplitudes (Xi_n < 1):")
        print("  %4s  %22s  %22s" % ("n", "b_n", "Xi_n"))
        for n, b_n, xi_n in rows:
            print("  %4d  %22s  %22s" % (n, _fmt(b_n), _fmt(xi_n)))
    if args.out is not None:
        lines = _provenance(resolved)
        lines += [
            "[plan]",
            "case = %s" % plan.case.value,
            "n = %s" % (plan.n if plan.n is not None else "none"),
            "T_sw = %s" % _fmt(plan.T_sw),
            "delta_sw = %s" % _fmt(plan.delta_sw),
            "delta_sw_star = %s" % _fmt(plan.delta_sw_star),
            "Xi = %s" % _fmt(plan.Xi),
            "K_f = %s" % _fmt(plan.K_f),
            "mu0_tilde = %s" % _fmt(plan.mu0_tilde),
            "tau_sw = %s" % _fmt(plan.tau_sw),
            "window_lo = %s" % _fmt(plan.window[0]),
            "window_hi = %s" % _fmt(plan.window[1]),
        ]
        _write_lines(args.out, lines)
    return 0


_TRAJ_HEADER = ["t", "m1", "m2", "m3", "v1", "v2", "v3", "W", "field_on"]
_APPROX_COLS = ["m1_approx2", "m2_approx2", "m3_approx2",
                "m1_approx1", "m2_approx1", "m3_approx1",
                "v1_approx", "v2_approx", "v3_approx"]


def cmd_simulate(args):
    cfg = _load(args)
    resolved = cfg.resolve()
    traj = integrate(_rest_state(), resolved.schedule, resolved.params,
                     resolved.integrator)

    idx = _stride_indices(len(traj.t), cfg.stride)
    approx_block = None
    if cfg.with_approx:
        sol = ApproxSolution.from_scaled(resolved.scaled)
        tm = resolved.scaled.time_maps()
        t_sel = traj.t[idx]
        on = t_sel <= resolved.schedule.t_star
        tau = tm.tau_of_t(t_sel[on])
        m2 = m_leq2(tau, sol)
        m1 = m_leq1(tau, sol)
        vel = velocity_leq1(tau, sol) / tm.rate
        approx_block = np.full((len(t_sel), 9), math.nan)
        approx_block[on, 0:3] = m2.T
        approx_block[on, 3:6] = m1.T
        approx_block[on, 6:9] = vel.T

    lines = _provenance(resolved)
    schema = "trajectory+approx-v1" if cfg.with_approx else "trajectory-v1"
    lines.append("# schema: %s" % schema)
    header = _TRAJ_HEADER + (_APPROX_COLS if cfg.with_approx else [])
    lines.append(",".join(header))
    for row_i, k in enumerate(idx):
        cells = [_fmt(traj.t[k])]
        cells += [_fmt(x) for x in traj.y[k]]
        cells.append(_fmt(traj.W[k]))
        cells.append("1" if traj.field_on[k] else "0")
        if approx_block is not None:
            cells += [_fmt(x) for x in approx_block[row_i]]
        lines.append(",".join(cells))
    out = args.out if args.out is not None else cfg.out
    _write_lines(out, lines)

    summary = sys.stderr if out is None else sys.stdout
    print("outcome: %s" % traj.outcome.value, file=summary)
    print("final_t: %s" % _fmt(traj.t[-1]), file=summary)
    print("final_m: (%s, %s, %s)" % tuple(_fmt(x) for x in traj.m[-1]),
          file=summary)
    print("final_W: %s" % _fmt(traj.W[-1]), file=summary)
    print("norm_drift: %s" % _fmt(traj.norm_drift), file=summary)
    print("tangency_drift: %s" % _fmt(traj.mv_drift), file=summary)
    print("max_energy_increase_after_switch_off: %s"
          % _fmt(traj.max_energy_increase), file=summary)
    print("steps: %d accepted, %d rejected" % (traj.n_accepted,
                                               traj.n_rejected), file=summary)
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    if cfg.t_star_grid is None and cfg.b_grid is None:
        raise ConfigError("sweep needs a [sweep] section with t_star_grid "
                          "or b_grid")
    resolved = cfg.resolve()
    lines = _provenance(resolved)
    if cfg.t_star_grid is not None:
        points = run_sweep(_rest_state(), resolved.h_a, resolved.params,
                           resolved.integrator, cfg.t_star_grid)
        lines.append("# schema: sweep-t-star-v1")
        lines.append("t_star,outcome,final_W,m1,m2,m3,v1,v2,v3")
        for pt in points:
            cells = [_fmt(pt.t_star), pt.outcome.value, _fmt(pt.final_W)]
            cells += [_fmt(x) for x in pt.final_state]
            lines.append(",".join(cells))
    else:
        from dataclasses import replace
        lines.append("# schema: sweep-b-v1")
        lines.append("b,t_star,outcome,final_W,m1,m2,m3,v1,v2,v3")
        for b in cfg.b_grid:
            sub = replace(cfg, b=float(b), n=None, h_a=None,
                          b_grid=None, t_star_grid=None)
            sub_res = sub.resolve()
            traj = integrate(_rest_state(), sub_res.schedule, sub_res.params,
                             sub_res.integrator)
            cells = [_fmt(b), _fmt(sub_res.schedule.t_star),
                     traj.outcome.value, _fmt(traj.W[-1])]
            cells += [_fmt(x) for x in traj.y[-1]]
            lines.append(",".join(cells))
    _write_lines(args.out if args.out is not None else cfg.out, lines)
    return 0


def cmd_approx(args):
    cfg = _load(args)
    resolved = cfg.resolve()
    sp = resolved.scaled
    sol = ApproxSolution.from_scaled(sp)
    tm = sp.time_maps()
    n_samples = cfg.stride if cfg.stride is not None else 1001
    t = np.linspace(0.0, resolved.schedule.t_star, max(n_samples, 1))
    if n_samples == 1:
        t = np.array([0.0])
    tau = tm.tau_of_t(t)
    ang = angles_leq2(tau, sol)
    m2 = m_leq2(tau, sol)
    m1 = m_leq1(tau, sol)
    vel = velocity_leq1(tau, sol) / tm.rate
    lines = _provenance(resolved)
    lines.append("# schema: approx-v1")
    lines.append(",".join(["t", "tau", "theta", "phi"] + _APPROX_COLS))
    for k in range(len(t)):
        cells = [_fmt(t[k]), _fmt(tau[k]),
                 _fmt(ang.theta[k]), _fmt(ang.phi[k])]
        cells += [_fmt(x) for x in m2[:, k]]
        cells += [_fmt(x) for x in m1[:, k]]
        cells += [_fmt(x) for x in vel[:, k]]
        lines.append(",".join(cells))
    _write_lines(args.out if args.out is not None else cfg.out, lines)
    return 0


def cmd_validate(args):
    from .acceptance import run_all, format_report
    results = run_all()
    report = format_report(results)
    print(report)
    if args.out is not None:
        _write_lines(args.out, report.split("\n"))
    return 0 if all(r.passed for r in results) else 6


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="illgswitch",
        description="Plan, simulate, and validate inertial macrospin "
                    "switching experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", metavar="PATH",
                       required=config_required,
                       help="experiment config file (INI)")
        p.add_argument("--out", metavar="PATH",
                       help="output file (default: stdout)")

    p_plan = sub.add_parser("plan", help="compute the switching plan")
    add_common(p_plan)
    p_plan.add_argument("--table", metavar="N_MAX", nargs="?", type=int,
                        const=-1, default=None,
                        help="also print the admissible resonant-amplitude "
                             "table (optionally capped at N_MAX)")
    p_plan.set_defaults(func=cmd_plan)

    p_sim = sub.add_parser("simulate",
                           help="integrate the switching experiment")
    add_common(p_sim)
    p_sim.add_argument("--with-approx", action="store_true",
                       help="add closed-form approximation columns")
    p_sim.add_argument("--stride", metavar="K", type=int,
                       help="keep at most K evenly spaced samples")
    p_sim.add_argument("--t-star", metavar="V",
                       help="switch-off time, a number or 'auto'")
    p_sim.set_defaults(func=cmd_simulate)

    p_swp = sub.add_parser("sweep", help="sweep t_star or field amplitude")
    add_common(p_swp)
    p_swp.add_argument("--t-star", metavar="V",
                       help="switch-off time for b sweeps, number or 'auto'")
    p_swp.set_defaults(func=cmd_sweep)

    p_apx = sub.add_parser("approx",
                           help="evaluate closed-form approximations")
    add_common(p_apx)
    p_apx.add_argument("--stride", metavar="K", type=int,
                       help="number of samples over [0, t_star] "
                            "(default 1001)")
    p_apx.add_argument("--t-star", metavar="V",
                       help="window end, a number or 'auto'")
    p_apx.set_defaults(func=cmd_approx)

    p_val = sub.add_parser("validate", help="run the acceptance suite")
    p_val.add_argument("--out", metavar="PATH",
                       help="also write the report to a file")
    p_val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except IllgswitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
