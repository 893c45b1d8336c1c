"""Bundled acceptance suite.

Each criterion function returns a CriterionResult made of labelled
checks (measured value, target, pass flag).  The validate subcommand
prints the full report and exits nonzero when any check fails; the
test suite asserts each criterion separately.  All randomized checks
use fixed seeds, so the suite is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .approx import ApproxSolution, m_leq1, m_leq2
from .config import parse_config
from .errors import ThresholdError
from .frames import (build_C, build_E_explicit, gamma_matrix, lambda_matrix,
                     scaled_from_hats, unitary_diagonalization_report)
from .integrator import IntegratorConfig, integrate
from .model import FieldSchedule, MaterialParams, SpinState, SwitchOutcome
from .planner import admissible_b, basin_membership, BasinVerdict

__all__ = [
    "CheckLine", "CriterionResult", "run_all", "format_report",
    "criterion_1", "criterion_2", "criterion_3", "criterion_4",
    "criterion_5", "criterion_6", "criterion_7", "criterion_8",
    "criterion_9", "criterion_10",
]


@dataclass(frozen=True)
class CheckLine:
    label: str
    measured: str
    target: str
    ok: bool


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    checks: tuple

    @property
    def passed(self):
        return all(c.ok for c in self.checks)


def _bundled(name):
    return parse_config((files("illgswitch") / "data" / name).read_text(),
                        origin=name)


def _rel(label, measured, target, tol):
    ok = abs(measured - target) <= tol * abs(target)
    return CheckLine(label, "%.8g" % measured,
                     "%.6g +-%.2g%%" % (target, 100 * tol), ok)


def _abs(label, measured, bound):
    ok = measured < bound
    return CheckLine(label, "%.4g" % measured, "< %.2g" % bound, ok)


def _flag(label, ok, measured, target):
    return CheckLine(label, str(measured), str(target), bool(ok))


def _rest():
    return SpinState(np.array([1.0, 0.0, 0.0]), np.zeros(3))


# -- plan-level criteria -----------------------------------------------------

def criterion_1():
    """Reference material, resonant n = 6 pulse: planned quantities."""
    r = _bundled("case1.ini").resolve()
    sp, plan = r.scaled, r.plan
    b = sp.omega
    ehd = np.diag(sp.E_hat)
    checks = (
        _rel("T_sw", plan.T_sw, 0.0635, 0.005),
        _rel("delta_sw_star", plan.delta_sw_star, 1.367e-4, 0.005),
        _rel("omega_hat / b", sp.omega_hat / b, 2.7760, 0.001),
        _rel("Ehat_11", ehd[0], -0.1990, 0.001),
        _rel("Ehat_22", ehd[1], 1.8304, 0.001),
        _abs("|Ehat_33|", abs(ehd[2]), 1e-12),
    )
    return CriterionResult(1, "switching plan for the bundled reference "
                              "material (pulse A)", checks)


def criterion_2():
    """Physical parameters derived from both reduced parameter sets."""
    rA = _bundled("case1.ini").resolve()
    rB = _bundled("case1_muB.ini").resolve()
    checks = (
        _rel("A: alpha", rA.params.alpha, 9.20e-4, 0.005),
        _rel("A: eta", rA.params.eta, 1.68e-3, 0.005),
        _rel("A: omega", rA.scaled.omega, 0.9906, 0.005),
        _rel("A: h2", rA.h_a[1], 49.53, 0.005),
        _rel("B: alpha", rB.params.alpha, 3.59e-4, 0.005),
        _rel("B: eta", rB.params.eta, 6.58e-4, 0.005),
        _rel("B: omega", rB.scaled.omega, 0.9479, 0.005),
        _rel("B: h2", rB.h_a[1], 78.83, 0.005),
    )
    return CriterionResult(2, "derived physical parameters for pulses A "
                              "and B", checks)


def criterion_3():
    """Admissible resonance range for pulse A ends at n = 104."""
    r = _bundled("case1.ini").resolve()
    sp = r.scaled
    D = np.array(r.config.D)
    rows = admissible_b(sp.mu, sp.alpha_hat, sp.eta_hat, D, 10 ** 6)
    n_max = rows[-1][0] if rows else 0
    d21 = D[1] - D[0]

    def xi_n(n):
        return d21 * sp.eta_hat * (sp.mu * n) ** 2 / (2.0 * sp.alpha_hat)

    checks = (
        _flag("largest admissible n", n_max == 104, n_max, 104),
        _rel("Xi_104", xi_n(104), 0.9879, 0.005),
        _rel("Xi_105", xi_n(105), 1.0070, 0.005),
        _flag("n = 105 excluded", xi_n(105) >= 1.0,
              "Xi_105 = %.6g" % xi_n(105), "Xi_105 >= 1"),
    )
    return CriterionResult(3, "resonant amplitude admissibility boundary",
                           checks)


def criterion_4():
    """Second bundled experiment: plan at unit reduced frequency."""
    r = _bundled("case2.ini").resolve()
    checks = (
        _rel("T_sw", r.plan.T_sw, 0.6283, 0.005),
        _rel("mu", r.scaled.mu, 0.1, 1e-9),
        _rel("omega_hat", r.scaled.omega_hat, 1.0, 1e-9),
    )
    return CriterionResult(4, "switching plan for the second bundled "
                              "experiment", checks)


# -- integration criteria ----------------------------------------------------

def _switch_run(resolved, t_star=None, t_end=None, conv_tol=None,
                rel_tol=None, abs_tol=None):
    cfg = resolved.integrator
    kw = dict(t_end=cfg.t_end, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
              max_step=cfg.max_step, renormalize=cfg.renormalize,
              convergence_tol=cfg.convergence_tol,
              max_wall_steps=cfg.max_wall_steps)
    if t_end is not None:
        kw["t_end"] = t_end
    if conv_tol is not None:
        kw["convergence_tol"] = conv_tol
    if rel_tol is not None:
        kw["rel_tol"] = rel_tol
    if abs_tol is not None:
        kw["abs_tol"] = abs_tol
    sched = resolved.schedule if t_star is None else FieldSchedule(
        resolved.h_a, t_star)
    return integrate(_rest(), sched, resolved.params,
                     IntegratorConfig(**kw)), kw


def criterion_5():
    """Planned pulses reach the target well by t = 100 T_sw."""
    checks = []
    for name in ("case1.ini", "case2.ini"):
        r = _bundled(name).resolve()
        traj, kw = _switch_run(r)
        dist = float(np.linalg.norm(traj.m[-1] + np.array([1.0, 0.0, 0.0])))
        tag = name.removesuffix(".ini")
        checks.append(_flag(f"{tag}: outcome",
                            traj.outcome is SwitchOutcome.SWITCHED,
                            traj.outcome.value, "Switched"))
        checks.append(_abs(f"{tag}: |m(100 T_sw) + e1|", dist, 1e-4))
        checks.append(_abs(f"{tag}: max W increase after t_star",
                           traj.max_energy_increase, 10.0 * kw["abs_tol"]))
    return CriterionResult(5, "switching success at the planned instant "
                              "within 100 T_sw", tuple(checks))


def criterion_6():
    """Perturbing t_star to either edge of the guaranteed window still
    switches (run to convergence, tolerance 1e-4)."""
    r = _bundled("case1.ini").resolve()
    checks = []
    for sign, tag in ((-1.0, "T_sw - delta_sw_star"),
                      (+1.0, "T_sw + delta_sw_star")):
        t_star = r.plan.T_sw + sign * r.plan.delta_sw_star
        traj, _ = _switch_run(r, t_star=t_star, t_end=20000.0,
                              conv_tol=1e-4, rel_tol=1e-8, abs_tol=1e-10)
        checks.append(_flag(f"t* = {tag}: outcome",
                            traj.outcome is SwitchOutcome.SWITCHED,
                            traj.outcome.value, "Switched"))
    return CriterionResult(6, "switch-off window robustness", tuple(checks))


def criterion_7():
    """Driven-phase error of the second-order closed form scales at
    least quadratically between the two bundled pulse strengths."""

    def sup_error(resolved):
        plan = resolved.plan
        traj, _ = _switch_run(resolved, t_star=plan.T_sw, t_end=plan.T_sw)
        sol = ApproxSolution.from_scaled(resolved.scaled)
        tau = resolved.scaled.time_maps().tau_of_t(traj.t)
        diff = traj.m.T - m_leq2(tau, sol)
        return float(np.max(np.sqrt(np.sum(diff * diff, axis=0))))

    rA = _bundled("case1.ini").resolve()
    rB = _bundled("case1_muB.ini").resolve()
    eA = sup_error(rA)
    eB = sup_error(rB)
    bound = (rB.scaled.mu / rA.scaled.mu) ** 2 * 1.5
    ratio = eB / eA
    checks = (
        _flag("E(mu_B) / E(mu_A) <= 1.5 (mu_B/mu_A)^2", ratio <= bound,
              "%.6g (E_A = %.4g, E_B = %.4g)" % (ratio, eA, eB),
              "<= %.6g" % bound),
    )
    return CriterionResult(7, "second-order approximation error scaling",
                           tuple(checks))


def criterion_8():
    """Frame and diagonalization identities over random fields, and the
    exact resonant landing identity."""
    rng = np.random.default_rng(118)
    dev_orth = dev_det = dev_skew = dev_e = 0.0
    dev_unitary = dev_diag = dev_product = 0.0
    count = 0
    while count < 1000:
        h_hat = rng.uniform(-1.0, 1.0, size=3)
        sigma = math.hypot(h_hat[1], h_hat[2])
        omega = np.linalg.norm(h_hat)
        if sigma < 1e-2 or omega < 0.1:
            continue
        D = np.sort(rng.uniform(-1.0, 1.0, size=3))
        if D[1] - D[0] < 1e-2 or D[2] - D[1] < 1e-2:
            continue
        count += 1
        C = build_C(h_hat)
        G = gamma_matrix(h_hat)
        L = lambda_matrix(omega)
        dev_orth = max(dev_orth, float(np.max(np.abs(C.T @ C - np.eye(3)))))
        dev_det = max(dev_det, abs(float(np.linalg.det(C)) - 1.0))
        dev_skew = max(dev_skew, float(np.max(np.abs(C.T @ G @ C - L))))
        dev_e = max(dev_e, float(np.max(np.abs(
            build_E_explicit(h_hat, D) - C.T @ np.diag(D) @ C))))
        rep = unitary_diagonalization_report(h_hat)
        dev_unitary = max(dev_unitary, rep["unitary"])
        dev_diag = max(dev_diag, rep["diagonalization"])
        dev_product = max(dev_product, rep["product"])

    dev_landing = 0.0
    count = 0
    while count < 200:
        D = np.sort(rng.uniform(-1.0, 1.0, size=3))
        if D[1] - D[0] < 1e-2 or D[2] - D[1] < 1e-2:
            continue
        alpha_hat = rng.uniform(0.5, 3.0)
        eta_hat = rng.uniform(1.0, 4.0)
        b = rng.uniform(0.5, 2.0)
        n = int(rng.integers(20, 61))
        epsilon = 1.0 / (2.0 * n * eta_hat * b)
        sp = scaled_from_hats(D, alpha_hat, eta_hat,
                              np.array([0.0, b, 0.0]), epsilon)
        sol = ApproxSolution.from_scaled(sp)
        try:
            m_end = m_leq1(np.array([sol.tau_sw]), sol)[:, 0]
        except ThresholdError:
            continue
        count += 1
        dev_landing = max(dev_landing, float(np.max(np.abs(
            m_end - np.array([-1.0, 0.0, 0.0])))))

    checks = (
        _abs("max |C^T C - I| (1000 fields)", dev_orth, 1e-12),
        _abs("max |det C - 1|", dev_det, 1e-12),
        _abs("max |C^T Gamma C - Lambda|", dev_skew, 1e-12),
        _abs("max |E_explicit - C^T D C|", dev_e, 1e-12),
        _abs("max |M* M - I|", dev_unitary, 1e-12),
        _abs("max |M* Gamma M - diag|", dev_diag, 1e-12),
        _abs("max |M U - C|", dev_product, 1e-12),
        _abs("max |m_leq1(tau_sw) + e1| (200 resonant)", dev_landing, 1e-12),
    )
    return CriterionResult(8, "frame structure and exact landing "
                              "identities", checks)


def criterion_9():
    """Unit-norm and dissipation-law conservation on the second bundled
    experiment."""
    from .integrator import energy_audit

    r = _bundled("case2.ini").resolve()
    runs = {}
    for renorm in (False, True):
        cfg = IntegratorConfig(t_end=3.0, rel_tol=r.integrator.rel_tol,
                               abs_tol=r.integrator.abs_tol,
                               renormalize=renorm,
                               convergence_tol=r.integrator.convergence_tol)
        runs[renorm] = integrate(_rest(), r.schedule, r.params, cfg)
    audit = energy_audit(runs[True], r.params)
    checks = (
        _abs("norm drift, unprojected", runs[False].norm_drift, 1e-6),
        _abs("per-step norm drift, projected", runs[True].norm_drift, 1e-12),
        _abs("energy-law relative residual", audit.max_rel_residual, 1e-4),
        _flag("sampling dense enough for the audit", not audit.sparse,
              "sparse" if audit.sparse else "dense", "dense"),
    )
    return CriterionResult(9, "conservation and dissipation-law suite",
                           checks)


def criterion_10():
    """200 random low-energy states in the target well all relax to
    (-e1, 0) once the field is off."""
    r = _bundled("case2.ini").resolve()
    p = r.params
    d21 = p.D[1] - p.D[0]
    bound = d21 / 3.0
    rng = np.random.default_rng(61)

    def sample():
        while True:
            m = rng.normal(size=3)
            m /= np.linalg.norm(m)
            if m[0] >= -0.05:
                continue
            pot = 0.5 * float(p.D @ (m * m) - p.D[0])
            if pot >= bound:
                continue
            u = rng.normal(size=3)
            u -= (u @ m) * m
            nu = np.linalg.norm(u)
            if nu < 1e-12:
                continue
            vmax = math.sqrt(2.0 * (bound - pot) / p.eta)
            v = (u / nu) * (rng.uniform(0.0, 0.999) * vmax)
            return SpinState(m, v)

    states = [sample() for _ in range(200)]
    in_basin = sum(
        basin_membership(z, p) is BasinVerdict.IN_MINUS_BASIN
        for z in states)
    cfg = IntegratorConfig(t_end=6000.0, rel_tol=1e-8, abs_tol=1e-10,
                           convergence_tol=1e-4)
    sched = FieldSchedule(np.zeros(3), 0.0)
    n_switched = sum(
        integrate(z, sched, p, cfg).outcome is SwitchOutcome.SWITCHED
        for z in states)
    checks = (
        _flag("sampled states recognized in the -e1 basin",
              in_basin == 200, in_basin, 200),
        _flag("states relaxed to (-e1, 0)", n_switched == 200,
              n_switched, 200),
    )
    return CriterionResult(10, "energy sublevel basin property", checks)


_CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4,
             criterion_5, criterion_6, criterion_7, criterion_8,
             criterion_9, criterion_10)


def run_all():
    return [fn() for fn in _CRITERIA]


def format_report(results):
    lines = []
    for res in results:
        verdict = "PASS" if res.passed else "FAIL"
        lines.append(f"{verdict} criterion {res.cid}: {res.name}")
        for c in res.checks:
            mark = "ok" if c.ok else "FAIL"
            lines.append(f"  [{mark:4s}] {c.label}: measured {c.measured}, "
                         f"target {c.target}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
