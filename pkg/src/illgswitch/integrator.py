"""Reference numerical solution of the macrospin equations.

Wraps the compiled Dormand-Prince stepper with field scheduling,
outcome classification, energy/constraint monitoring, and a parallel
sweep driver.  A run is split into at most two constant-field segments
meeting exactly at t_star, so the field discontinuity never sits inside
a step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .errors import ConfigError, IntegrationError
from .model import FieldSchedule, SpinState, SwitchOutcome, UNIT_NORM_TOL

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "EnergyAudit",
    "SweepPoint",
    "integrate",
    "energy_audit",
    "sweep",
]

#: Accumulated | |m| - 1 | beyond which a run is aborted as unphysical.
#: Only armed with renormalization off; projection keeps the recorded
#: solution on the sphere, so there is nothing to breach.
NORM_BREACH_TOL = 100.0 * UNIT_NORM_TOL

_OUTCOME_FROM_CODE = {
    _kernel.OUTCOME_MINUS_E1: SwitchOutcome.SWITCHED,
    _kernel.OUTCOME_PLUS_E1: SwitchOutcome.NOT_SWITCHED,
    _kernel.OUTCOME_OTHER_EQ: SwitchOutcome.OTHER,
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control and run policy.

    t_end is the simulated horizon; convergence_tol is the radius (on
    both |m - equilibrium| and |v|) at which a free trajectory counts
    as converged; renormalize projects m back to the unit sphere after
    each accepted step and re-tangentializes v.
    """

    t_end: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    renormalize: bool = True
    convergence_tol: float = 1e-6
    max_wall_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ConfigError("tolerances must be positive")
        if not (self.convergence_tol > 0.0):
            raise ConfigError("convergence_tol must be positive")
        if not (self.t_end > 0.0):
            raise ConfigError(f"t_end must be > 0, got {self.t_end}")
        if not (self.max_step > 0.0):
            raise ConfigError("max_step must be positive")
        if self.max_wall_steps < 1:
            raise ConfigError("max_wall_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of one run.

    Arrays share the leading index: t (strictly increasing), y with
    rows (m1, m2, m3, v1, v2, v3), W (energy under the field active at
    that sample), field_on flags.  Diagnostics cover the whole run:
    worst unit-norm drift before projection, worst tangency defect
    |m.v|/(1+|v|), and the largest increase between consecutive W
    samples after switch-off (negative when W strictly decays).
    """

    t: np.ndarray
    y: np.ndarray
    W: np.ndarray
    field_on: np.ndarray
    outcome: SwitchOutcome
    norm_drift: float
    mv_drift: float
    max_energy_increase: float
    n_accepted: int
    n_rejected: int

    @property
    def m(self):
        return self.y[:, :3]

    @property
    def v(self):
        return self.y[:, 3:]

    def final_state(self):
        return SpinState.from_array(self.y[-1])


def _energy_column(y, field, p):
    m = y[:, :3]
    v = y[:, 3:]
    pot = 0.5 * ((m * m) @ p.D - p.D[0]) - m @ field
    return 0.5 * p.eta * np.sum(v * v, axis=1) + pot


def _is_converged(y, conv_tol):
    """Equilibrium code if (m, v) is within conv_tol of (+-e_j, 0)."""
    if np.linalg.norm(y[3:]) >= conv_tol:
        return _kernel.OUTCOME_NONE
    for ax in range(3):
        for sgn in (-1.0, 1.0):
            target = np.zeros(3)
            target[ax] = sgn
            if np.linalg.norm(y[:3] - target) < conv_tol:
                if ax == 0:
                    return (_kernel.OUTCOME_MINUS_E1 if sgn < 0.0
                            else _kernel.OUTCOME_PLUS_E1)
                return _kernel.OUTCOME_OTHER_EQ
    return _kernel.OUTCOME_NONE


def integrate(z0, schedule, p, cfg):
    """Integrate the 6-D system under a switch-off field schedule.

    Parameters
    ----------
    z0 : SpinState
    schedule : FieldSchedule
    p : MaterialParams
    cfg : IntegratorConfig

    Returns
    -------
    Trajectory
        outcome is SWITCHED / NOT_SWITCHED / OTHER when the free part
        of the run converges to an equilibrium within convergence_tol,
        UNDECIDED when the horizon or step budget runs out first.

    Raises
    ------
    IntegrationError
        On step-size underflow (stiffness failure) or a unit-norm
        breach; the exception carries the last good time and state.
    """
    if not isinstance(z0, SpinState):
        raise ConfigError("integrate expects a SpinState initial condition")
    if not isinstance(schedule, FieldSchedule):
        raise ConfigError("integrate expects a FieldSchedule")
    y0 = z0.as_array()
    t_end = float(cfg.t_end)
    t_star = float(schedule.t_star)

    # Split into (field on) + (field off) segments meeting at t_star.
    segments = []
    if t_star <= 0.0:
        segments.append((0.0, t_end, np.zeros(3), True))
    elif t_star >= t_end:
        segments.append((0.0, t_end, schedule.h_a, False))
    else:
        segments.append((0.0, t_star, schedule.h_a, False))
        segments.append((t_star, t_end, np.zeros(3), True))

    # A free start already at an equilibrium is classified immediately.
    if segments[0][3]:
        code = _is_converged(y0, cfg.convergence_tol)
        if code != _kernel.OUTCOME_NONE:
            field = np.zeros(3)
            one = y0[np.newaxis, :]
            return Trajectory(
                t=np.array([0.0]), y=one.copy(),
                W=_energy_column(one, field, p),
                field_on=np.array([False]),
                outcome=_OUTCOME_FROM_CODE[code],
                norm_drift=0.0, mv_drift=0.0,
                max_energy_increase=-math.inf,
                n_accepted=0, n_rejected=0,
            )

    ts_parts, ys_parts, flags_parts, w_parts = [], [], [], []
    norm_drift = 0.0
    mv_drift = 0.0
    n_acc_total = 0
    n_rej_total = 0
    outcome = SwitchOutcome.UNDECIDED
    y_run = y0
    steps_left = cfg.max_wall_steps

    for seg_idx, (t0, t1, field, free) in enumerate(segments):
        ts, ys, status, n_acc, n_rej, drift, mvd, code = _kernel.dp45_segment(
            y_run, t0, t1, np.asarray(field, dtype=float),
            np.asarray(p.D, dtype=float), p.alpha, p.eta,
            cfg.rel_tol, cfg.abs_tol, cfg.max_step,
            cfg.renormalize, free, cfg.convergence_tol,
            steps_left, NORM_BREACH_TOL,
        )
        steps_left -= n_acc + n_rej
        norm_drift = max(norm_drift, drift)
        mv_drift = max(mv_drift, mvd)
        n_acc_total += n_acc
        n_rej_total += n_rej
        # Drop the duplicated boundary sample of follow-on segments.
        lo = 1 if seg_idx > 0 else 0
        ts_parts.append(ts[lo:])
        ys_parts.append(ys[lo:])
        w_parts.append(_energy_column(ys[lo:], field, p))
        flags_parts.append(np.full(len(ts) - lo, not free))
        y_run = ys[-1].copy()

        if status == _kernel.STATUS_STEP_UNDERFLOW:
            raise IntegrationError(
                f"step size underflowed at t = {ts[-1]!r}; the problem "
                "is too stiff for the requested tolerances",
                last_t=float(ts[-1]), last_state=y_run,
            )
        if status == _kernel.STATUS_NORM_BREACH:
            raise IntegrationError(
                f"unit-norm drift exceeded {NORM_BREACH_TOL} at "
                f"t = {ts[-1]!r}; solution left the sphere",
                last_t=float(ts[-1]), last_state=y_run,
            )
        if status == _kernel.STATUS_CONVERGED:
            outcome = _OUTCOME_FROM_CODE[code]
            break
        if status == _kernel.STATUS_BUDGET_EXHAUSTED:
            break

    t = np.concatenate(ts_parts)
    y = np.concatenate(ys_parts)
    W = np.concatenate(w_parts)
    field_on = np.concatenate(flags_parts)

    free_mask = ~field_on
    if np.count_nonzero(free_mask) > 1:
        w_free = W[free_mask]
        max_inc = float(np.max(np.diff(w_free)))
    else:
        max_inc = -math.inf

    return Trajectory(
        t=t, y=y, W=W, field_on=field_on, outcome=outcome,
        norm_drift=float(norm_drift), mv_drift=float(mv_drift),
        max_energy_increase=max_inc,
        n_accepted=n_acc_total, n_rejected=n_rej_total,
    )


@dataclass(frozen=True)
class EnergyAudit:
    """Dissipation-law residual report.

    max_rel_residual bounds |dW/dt + alpha |v|^2| over all interior
    samples, relative to the largest dissipation rate in the run.
    sparse is set when the median step exceeds a tenth of the nutation
    period, in which case the finite difference is unreliable.
    """

    max_rel_residual: float
    max_abs_residual: float
    dissipation_scale: float
    sparse: bool
    n_points: int


def _nonuniform_d1(t, f):
    """Fourth-order first derivative of f(t) at interior nodes via a
    five-point non-uniform Lagrange stencil; returns df at t[2:-2]."""
    nodes = [t[k: len(t) - 4 + k] for k in range(5)]
    vals = [f[k: len(f) - 4 + k] for k in range(5)]
    tc = nodes[2]
    df = np.zeros(len(t) - 4)
    for i in range(5):
        if i == 2:
            w = np.zeros_like(tc)
            for k in range(5):
                if k != 2:
                    w += 1.0 / (tc - nodes[k])
        else:
            num = np.ones_like(tc)
            den = np.ones_like(tc)
            for k in range(5):
                if k != i and k != 2:
                    num *= tc - nodes[k]
                if k != i:
                    den *= nodes[i] - nodes[k]
            w = num / den
        df += w * vals[i]
    return df


def energy_audit(traj, p):
    """Check dW/dt = -alpha |v|^2 against the sampled trajectory.

    The derivative is taken with a five-point stencil inside each
    constant-field stretch (stencils never straddle the switch-off
    sample, where W jumps by the Zeeman term).
    """
    residuals = []
    diss_scale = 0.0
    n_pts = 0
    sparse = False
    nutation_dt = 2.0 * math.pi * p.eta / 10.0
    for on in (True, False):
        mask = traj.field_on == on
        if np.count_nonzero(mask) < 5:
            continue
        t = traj.t[mask]
        W = traj.W[mask]
        v = traj.v[mask]
        g = p.alpha * np.sum(v * v, axis=1)
        if np.median(np.diff(t)) > nutation_dt:
            sparse = True
        dW = _nonuniform_d1(t, W)
        residuals.append(np.abs(dW + g[2:-2]))
        diss_scale = max(diss_scale, float(np.max(g)))
        n_pts += len(t) - 4
    if not residuals:
        raise ConfigError(
            "trajectory too short for an energy audit (need at least "
            "5 samples in a constant-field stretch)"
        )
    max_abs = float(max(np.max(r) for r in residuals))
    rel = max_abs / diss_scale if diss_scale > 0.0 else math.inf
    return EnergyAudit(
        max_rel_residual=rel, max_abs_residual=max_abs,
        dissipation_scale=diss_scale, sparse=sparse, n_points=n_pts,
    )


@dataclass(frozen=True)
class SweepPoint:
    t_star: float
    outcome: SwitchOutcome
    final_W: float
    final_state: np.ndarray


def sweep(z0, h_a, p, cfg, t_star_grid, max_workers=None):
    """Run integrate once per switch-off instant in t_star_grid.

    Runs are independent and executed on a thread pool (the compiled
    stepper releases the GIL); results come back in grid order
    regardless of completion order.
    """
    grid = [float(v) for v in t_star_grid]

    def run_one(t_star):
        traj = integrate(z0, FieldSchedule(h_a, t_star), p, cfg)
        return SweepPoint(
            t_star=t_star, outcome=traj.outcome,
            final_W=float(traj.W[-1]), final_state=traj.y[-1].copy(),
        )

    if not grid:
        return []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_one, grid))
