"""Closed-form two-timescale approximations of the slow dynamics.

In the co-rotating spherical chart the slow-time evolution of
(theta, phi) admits an explicit second-order expansion in mu whose
coefficients involve only omega_hat and the entries of E_hat.  Under a
diagonal E_hat the same expansion folds back into cartesian closed
forms for the magnetization itself: m_leq2 (second order, exactly unit
norm) and its first-order Taylor truncation m_leq1 together with the
two-timescale velocity d m_leq1 / d tau.

The expansion is certified only below explicit thresholds: mu0 for the
spherical forms, mu0_tilde for the simplified cartesian ones.  The
evaluators enforce those gates.

A small variation-of-constants solver for the underlying 4-D linear
layer q' = A q + f(tau) is included as an independent test oracle; the
structural identity A^3 = -A gives the fundamental matrix in closed
form, exp(A tau) = I + sin(tau) A + (1 - cos(tau)) A^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PoleProximityError, ThresholdError
from .frames import ScaledParams, SphericalPoint, initial_orientation

__all__ = [
    "ApproxSolution",
    "ValidityThresholds",
    "thresholds",
    "angles_leq2",
    "m_leq2",
    "m_leq1",
    "velocity_leq1",
    "A4",
    "fundamental_matrix",
    "variation_of_constants",
]


@dataclass(frozen=True)
class ValidityThresholds:
    """Certified smallness thresholds for the expansions.

    mu0 applies to the spherical second-order forms for a general
    E_hat; mu0_tilde is the simplified-case threshold used by the
    switching analysis; d_tilde = min(theta0, pi - theta0) measures the
    initial distance to the poles.
    """

    mu0: float
    mu0_tilde: float
    d_tilde: float


def thresholds(theta0, omega_hat, E_hat):
    """Validity thresholds for initial colatitude theta0 and frame
    (omega_hat, E_hat).

    Raises
    ------
    PoleProximityError
        If theta0 is 0 or pi (the chart-distance d_tilde vanishes and
        no positive threshold exists).
    """
    E_hat = np.asarray(E_hat, dtype=float)
    d_tilde = min(theta0, math.pi - theta0)
    if d_tilde <= 0.0:
        raise PoleProximityError(
            f"theta0 = {theta0!r} starts on a pole; no expansion threshold"
        )
    e11, e22 = abs(E_hat[0, 0]), abs(E_hat[1, 1])
    e12, e13, e23 = abs(E_hat[0, 1]), abs(E_hat[0, 2]), abs(E_hat[1, 2])
    two_w = 2.0 * omega_hat
    mu0 = d_tilde / (
        two_w + e12 * (1.0 + 1.0 / two_w) + 2.0 * e13 + 3.0 * e23
        + (e11 + e22) / two_w
    )
    mu0_tilde = 2.0 * math.pi * omega_hat / (
        4.0 * omega_hat ** 2 + e11 + e22
    )
    return ValidityThresholds(mu0=mu0, mu0_tilde=mu0_tilde, d_tilde=d_tilde)


@dataclass(frozen=True)
class ApproxSolution:
    """Frozen coefficient set for the closed-form evaluators.

    Built from a ScaledParams bundle and an initial condition; carries
    exactly the scalars the formulas need.
    """

    mu: float
    omega_hat: float
    e11: float
    e12: float
    e13: float
    e22: float
    e23: float
    theta0: float
    phi0: float
    simple: bool

    @classmethod
    def from_scaled(cls, sp, m0=None):
        """Coefficients for the trajectory starting at m0 (default e1).

        The initial angles are read off in the rotated frame, so m0
        must stay clear of the frame poles.
        """
        if not isinstance(sp, ScaledParams):
            raise ConfigError("from_scaled expects a ScaledParams bundle")
        if m0 is None:
            m0 = np.array([1.0, 0.0, 0.0])
        start = initial_orientation(sp, m0)
        return cls(
            mu=sp.mu, omega_hat=sp.omega_hat,
            e11=sp.e_hat(1, 1), e12=sp.e_hat(1, 2), e13=sp.e_hat(1, 3),
            e22=sp.e_hat(2, 2), e23=sp.e_hat(2, 3),
            theta0=start.theta, phi0=start.phi,
            simple=sp.is_simple,
        )

    @property
    def tau_sw(self):
        """Half-turn time pi / (mu omega_hat) of the slow precession."""
        return math.pi / (self.mu * self.omega_hat)

    def thresholds(self):
        E = np.array([
            [self.e11, self.e12, self.e13],
            [self.e12, self.e22, self.e23],
            [self.e13, self.e23, 0.0],
        ])
        return thresholds(self.theta0, self.omega_hat, E)

    def _require_mu0(self):
        th = self.thresholds()
        if self.mu > th.mu0:
            raise ThresholdError(
                f"mu = {self.mu!r} exceeds the certified threshold "
                f"mu0 = {th.mu0!r}",
                mu=self.mu, threshold=th.mu0,
            )

    def _require_simple_mu0_tilde(self):
        if not self.simple:
            raise ConfigError(
                "cartesian closed forms need a diagonal E_hat frame; "
                "use the spherical forms for this field"
            )
        th = self.thresholds()
        if self.mu > th.mu0_tilde:
            raise ThresholdError(
                f"mu = {self.mu!r} exceeds the simplified threshold "
                f"mu0_tilde = {th.mu0_tilde!r}",
                mu=self.mu, threshold=th.mu0_tilde,
            )


def angles_leq2(tau, a):
    """Second-order angles (phi, theta) at slow time tau.

    Parameters
    ----------
    tau : float or array_like
    a : ApproxSolution

    Returns
    -------
    SphericalPoint
        phi is unwrapped; theta stays within d_tilde/2 of the initial
        hemisphere band for all tau once mu <= mu0.  Scalar tau gives
        scalar angles, array tau gives arrays.
    """
    a._require_mu0()
    mu, w = a.mu, a.omega_hat
    tau = np.asarray(tau, dtype=float)
    s = mu * w * tau
    sin_t, cos_t = np.sin(tau), np.cos(tau)
    phi = (
        a.phi0 + s
        + mu * ((a.e13 * np.sin(s) - a.e23 * np.cos(s) + a.e23) / w
                - w * sin_t)
        + mu * mu * (a.e12 * (1.0 - cos_t) - a.e13 * sin_t)
    )
    theta = (
        a.theta0
        + mu * (-w * (1.0 - cos_t)
                + ((a.e22 - a.e11) * np.sin(s) ** 2
                   - a.e12 * np.sin(2.0 * s)) / (2.0 * w))
        + mu * mu * ((a.e23 - a.e13) * (1.0 - cos_t) - a.e12 * sin_t
                     - a.e23 * np.sin(s) * cos_t)
    )
    if tau.ndim == 0:
        return SphericalPoint(theta=float(theta), phi=float(phi))
    return SphericalPoint(theta=theta, phi=phi)


def _ag(tau, a):
    """Shared angle pair: transverse tilt and in-plane phase."""
    mu, w = a.mu, a.omega_hat
    s = mu * w * np.asarray(tau, dtype=float)
    tilt = (mu * (a.e22 - a.e11) / (2.0 * w) * np.sin(s) ** 2
            - mu * w * (1.0 - np.cos(tau)))
    phase = mu * w * (np.sin(tau) - np.asarray(tau, dtype=float))
    return s, tilt, phase


def m_leq2(tau, a):
    """Second-order cartesian magnetization (diagonal E_hat only).

    Exactly unit norm by construction.  Accepts scalar or array tau;
    the component axis is the leading one for array input.
    """
    a._require_simple_mu0_tilde()
    _, tilt, phase = _ag(tau, a)
    m = np.array([
        np.cos(tilt) * np.cos(phase),
        -np.sin(tilt),
        np.cos(tilt) * np.sin(phase),
    ])
    return m


def m_leq1(tau, a):
    """First-order cartesian magnetization (diagonal E_hat only).

    This is the first-order truncation of m_leq2 in the two-timescale
    sense (the slow phase mu omega_hat tau is held intact), which is
    what makes velocity_leq1 its derivative to O(mu^2).  At tau =
    tau_sw with omega_hat = 1/(2 mu n) it lands on -e1 exactly, which
    is what makes the resonant pulse lengths special.
    """
    a._require_simple_mu0_tilde()
    mu, w = a.mu, a.omega_hat
    tau = np.asarray(tau, dtype=float)
    s = mu * w * tau
    sin_t = np.sin(tau)
    m = np.array([
        np.cos(s) + mu * w * np.sin(s) * sin_t,
        -mu * ((a.e22 - a.e11) / (2.0 * w) * np.sin(s) ** 2
               - w * (1.0 - np.cos(tau))),
        -np.sin(s) + mu * w * np.cos(s) * sin_t,
    ])
    return m


def velocity_leq1(tau, a):
    """Two-timescale derivative d m_leq1 / d tau.

    Built by differentiating in both time scales before truncating, so
    it stays accurate over tau ranges of order 1/mu; the naive
    derivative of m_leq1 would not.
    """
    a._require_simple_mu0_tilde()
    mu, w = a.mu, a.omega_hat
    tau = np.asarray(tau, dtype=float)
    s = mu * w * tau
    cos_t1 = np.cos(tau) - 1.0
    return mu * w * np.array([
        np.sin(s) * cos_t1,
        np.sin(tau),
        np.cos(s) * cos_t1,
    ])


#: Generator of the linear layer in q = (xi, xi', chi, chi') order.
A4 = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0, 0.0],
])


def fundamental_matrix(tau):
    """exp(A4 tau) from the identity A4^3 = -A4."""
    A2 = A4 @ A4
    return np.eye(4) + math.sin(tau) * A4 + (1.0 - math.cos(tau)) * A2


def variation_of_constants(f1, f2, q0, tau, max_panel=0.25 * math.pi,
                           nodes=20):
    """Solve q' = A4 q + (0, f1(s), 0, f2(s)) on [0, tau].

    Parameters
    ----------
    f1, f2 : callables of one float
    q0 : array_like, shape (4,)
    tau : float
    max_panel : float
        Upper bound on the Gauss-Legendre panel length.
    nodes : int
        Nodes per panel.

    Returns
    -------
    ndarray, shape (4,)

    Notes
    -----
    Test oracle, not a production integrator: the forcing is assumed
    smooth and the quadrature converges spectrally on each panel.
    """
    q0 = np.asarray(q0, dtype=float)
    if q0.shape != (4,):
        raise ConfigError(f"q0 must be a 4-vector, got shape {q0.shape}")
    out = fundamental_matrix(tau) @ q0
    if tau == 0.0:
        return out
    x, wts = np.polynomial.legendre.leggauss(nodes)
    n_panels = max(1, int(math.ceil(abs(tau) / max_panel)))
    edges = np.linspace(0.0, tau, n_panels + 1)
    acc = np.zeros(4)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for xi_node, wt in zip(x, wts):
            s = mid + half * xi_node
            f = np.array([0.0, f1(s), 0.0, f2(s)])
            acc += wt * half * (fundamental_matrix(tau - s) @ f)
    return out + acc
