"""Switching pulse design and basin-of-attraction tests.

A reversal pulse holds a transverse field on for a planned duration
T_sw (half a slow precession turn) and then shuts it off.  The planner
computes that duration, the tolerance window around it within which
switch-off still lands the state inside the target energy basin, and
the resonance condition that makes the window honest:

* case i:  Xi = D_{2,1} eta_hat / (8 alpha_hat omega_hat^2) >= 1; the
  kinetic energy left at switch-off is always below the basin margin
  and any t* within +-delta_sw works.
* case ii: omega_hat = 1/(2 mu n) for an integer n; the fast nutation
  completes whole cycles inside the pulse, the leading kinetic term
  vanishes exactly at T_sw, and the window shrinks to +-delta_sw_star.

The basin itself is certified by an energy argument: any free state
with W <= D_{2,1}/3 sits in one of two disjoint wells around +-e1,
decided by the sign of m1, and relaxes to that well's minimum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import approx
from .approx import ApproxSolution, thresholds
from .errors import (ConfigError, HypothesisError, InfeasiblePlanError,
                     ThresholdError)
from .frames import ScaledParams, build_scaled
from .model import MaterialParams, SpinState, anisotropy_energy, d_gap, energy_W

__all__ = [
    "PlanCase",
    "SwitchPlan",
    "BasinVerdict",
    "PlannedCheck",
    "CASE_II_REL_TOL",
    "compute_plan",
    "admissible_b",
    "nearest_resonant_b",
    "basin_membership",
    "planned_state_check",
    "build_approximation",
    "ApproximationBundle",
    "plan_switching",
]

#: Relative tolerance on 2 mu n omega_hat = 1 for resonance detection.
CASE_II_REL_TOL = 1e-9


class PlanCase(enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    INFEASIBLE = "Infeasible"


class BasinVerdict(enum.Enum):
    IN_MINUS_BASIN = "InMinusBasin"
    IN_PLUS_BASIN = "InPlusBasin"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class SwitchPlan:
    """Planned pulse: duration, safety windows, and the governing case.

    delta_sw_star and n are None unless case is CASE_II.  tau_sw is the
    pulse duration in slow time; T_sw = time map of tau_sw.
    """

    T_sw: float
    delta_sw: float
    delta_sw_star: float | None
    Xi: float
    K_f: float
    mu0_tilde: float
    case: PlanCase
    n: int | None
    tau_sw: float

    @property
    def window(self):
        """(lo, hi) interval of certified switch-off instants, or None
        when the plan is infeasible."""
        if self.case is PlanCase.CASE_I:
            half = self.delta_sw
        elif self.case is PlanCase.CASE_II:
            half = self.delta_sw_star
        else:
            return None
        return (self.T_sw - half, self.T_sw + half)


def compute_plan(sp, D):
    """Switching plan for a simple-frame field.

    Parameters
    ----------
    sp : ScaledParams
        Must have diagonal E_hat (transverse field along one axis).
    D : array_like, shape (3,)
        Anisotropy factors of the material.

    Returns
    -------
    SwitchPlan
        case is INFEASIBLE when Xi < 1 and omega_hat is not within
        CASE_II_REL_TOL of any 1/(2 mu n); the timing fields are still
        filled in for diagnostic use.

    Raises
    ------
    HypothesisError
        If E_hat is not diagonal.
    ThresholdError
        If mu exceeds mu0_tilde for this frame.
    """
    if not isinstance(sp, ScaledParams):
        raise ConfigError("compute_plan expects a ScaledParams bundle")
    sp.require_simple()
    D = np.asarray(D, dtype=float)
    d21 = d_gap(D, 2, 1)
    d31 = d_gap(D, 3, 1)
    mu, w = sp.mu, sp.omega_hat
    th = thresholds(0.5 * math.pi, w, sp.E_hat)
    if mu > th.mu0_tilde:
        raise ThresholdError(
            f"mu = {mu!r} exceeds mu0_tilde = {th.mu0_tilde!r}; the "
            "switching analysis is not certified at this size",
            mu=mu, threshold=th.mu0_tilde,
        )
    slow = mu * sp.eta_hat / (w * sp.alpha_hat)
    Xi = d21 * sp.eta_hat / (8.0 * sp.alpha_hat * w * w)
    K_f = d31 / (4.0 * d21)
    T_sw = slow * math.pi
    delta_sw = slow * math.asin(
        min(1.0, math.sqrt(mu * mu * w * w + K_f) - mu * w)
    )
    tau_sw = math.pi / (mu * w)

    if Xi >= 1.0:
        case, n, delta_star = PlanCase.CASE_I, None, None
    else:
        n_guess = round(1.0 / (2.0 * mu * w))
        if n_guess >= 1 and abs(2.0 * mu * n_guess * w - 1.0) <= CASE_II_REL_TOL:
            case = PlanCase.CASE_II
            n = n_guess
            delta_star = min(
                delta_sw,
                mu * mu * (sp.eta_hat / sp.alpha_hat) * math.acos(1.0 - Xi),
            )
        else:
            case, n, delta_star = PlanCase.INFEASIBLE, None, None

    return SwitchPlan(
        T_sw=T_sw, delta_sw=delta_sw, delta_sw_star=delta_star,
        Xi=Xi, K_f=K_f, mu0_tilde=th.mu0_tilde,
        case=case, n=n, tau_sw=tau_sw,
    )


def admissible_b(mu, alpha_hat, eta_hat, D, n_max):
    """Resonant field magnitudes b_n = sqrt(alpha_hat)/(2 mu eta_hat n)
    with their Xi_n, filtered to the admissible range Xi_n < 1.

    Returns a list of (n, b_n, Xi_n) for n = 1..n_max; larger n means a
    weaker field and a larger Xi_n, so the list ends where Xi_n reaches 1.
    """
    if n_max < 0 or n_max != int(n_max):
        raise ConfigError(f"n_max must be a non-negative integer, got {n_max}")
    d21 = d_gap(D, 2, 1)
    root_a = math.sqrt(alpha_hat)
    out = []
    for n in range(1, int(n_max) + 1):
        b_n = root_a / (2.0 * mu * eta_hat * n)
        # Xi at omega_hat = 1/(2 mu n)
        Xi_n = d21 * eta_hat * mu * mu * n * n / (2.0 * alpha_hat)
        if Xi_n < 1.0:
            out.append((n, b_n, Xi_n))
    return out


def nearest_resonant_b(b, mu, alpha_hat, eta_hat):
    """Snap a requested field magnitude to the closest resonant b_n.

    Returns (n, b_n).  Raises if b is not positive.
    """
    if not (b > 0.0):
        raise ConfigError(f"field magnitude must be > 0, got {b}")
    n_real = math.sqrt(alpha_hat) / (2.0 * mu * eta_hat * b)
    n = max(1, round(n_real))
    return n, math.sqrt(alpha_hat) / (2.0 * mu * eta_hat * n)


def basin_membership(z, p):
    """Energy-basin test for a free state (field off).

    InMinusBasin / InPlusBasin when W(z) <= D_{2,1}/3 with m1 of the
    matching sign; Outside otherwise.  m1 = 0 on the threshold energy
    is undecidable between the wells and reported Outside.
    """
    if not isinstance(z, SpinState):
        z = SpinState.from_array(np.asarray(z, dtype=float))
    W = energy_W(z, np.zeros(3), p)
    if W <= d_gap(p.D, 2, 1) / 3.0:
        if z.m[0] < 0.0:
            return BasinVerdict.IN_MINUS_BASIN
        if z.m[0] > 0.0:
            return BasinVerdict.IN_PLUS_BASIN
    return BasinVerdict.OUTSIDE


@dataclass(frozen=True)
class PlannedCheck:
    """Predicted post-pulse energy budget at a candidate switch-off.

    W_hat is the slow-time energy of the first-order approximate state
    at tau(t_star), bound is the required margin D_{2,1}/4, and
    in_window says whether t_star lies in the plan's certified
    interval (outside it the prediction is extrapolation and should be
    read as a warning, not a guarantee).
    """

    margin_met: bool
    in_window: bool
    W_hat: float
    bound: float
    tau_star: float


def planned_state_check(sp, D, t_star):
    """Evaluate the basin margin at switch-off using the closed forms.

    The kinetic term carries the 1/mu^2 factor from expressing the
    t-derivative in slow time; the potential term is the free
    anisotropy energy of the first-order magnetization.
    """
    plan = compute_plan(sp, D)
    a = ApproxSolution.from_scaled(sp)
    tau_star = sp.time_maps().tau_of_t(t_star)
    vel = approx.velocity_leq1(tau_star, a)
    m = approx.m_leq1(tau_star, a)
    kinetic = (sp.alpha_hat / (2.0 * sp.eta_hat)) * float(
        np.dot(vel, vel)) / sp.mu ** 2
    W_hat = kinetic + anisotropy_energy(m, np.zeros(3), D)
    bound = d_gap(D, 2, 1) / 4.0
    lo = plan.T_sw - plan.delta_sw
    hi = plan.T_sw + plan.delta_sw
    return PlannedCheck(
        margin_met=bool(W_hat <= bound),
        in_window=bool(lo <= t_star <= hi),
        W_hat=float(W_hat),
        bound=float(bound),
        tau_star=float(tau_star),
    )


@dataclass(frozen=True)
class ApproximationBundle:
    """Everything needed to evaluate closed-form trajectories in t."""

    scaled: ScaledParams
    approx: ApproxSolution
    thresholds: approx.ValidityThresholds


def build_approximation(p, h_a, epsilon, m0=None):
    """Gate-checked construction of the closed-form trajectory evaluators.

    Follows the approximation recipe end to end: build the scaled
    frame, locate the initial angles in it, compute the thresholds,
    and refuse when mu exceeds mu0 or the start sits on a chart pole.

    Returns
    -------
    ApproximationBundle
    """
    sp = build_scaled(p, h_a, epsilon)
    a = ApproxSolution.from_scaled(sp, m0=m0)
    th = a.thresholds()
    if sp.mu > th.mu0:
        raise ThresholdError(
            f"mu = {sp.mu!r} exceeds mu0 = {th.mu0!r}; approximation "
            "not certified for this start",
            mu=sp.mu, threshold=th.mu0,
        )
    return ApproximationBundle(scaled=sp, approx=a, thresholds=th)


def plan_switching(p, h_a, epsilon):
    """Gate-checked switching plan for the reversal start (e1, 0).

    Returns
    -------
    (SwitchPlan, float)
        The plan and the recommended switch-off instant t* = T_sw.

    Raises
    ------
    HypothesisError, ThresholdError
        Propagated from the frame and threshold gates.
    InfeasiblePlanError
        When neither guarantee case applies (Xi < 1 off resonance).
    """
    sp = build_scaled(p, h_a, epsilon)
    plan = compute_plan(sp, D=p.D)
    if plan.case is PlanCase.INFEASIBLE:
        raise InfeasiblePlanError(
            f"Xi = {plan.Xi!r} < 1 and omega_hat = {sp.omega_hat!r} is "
            f"not 1/(2 mu n) for any integer n (mu = {sp.mu!r}); no "
            "switching guarantee applies"
        )
    return plan, plan.T_sw
