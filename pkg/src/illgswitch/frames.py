"""Scaling frames and coordinate charts for the macrospin system.

The asymptotic analysis rests on a two-parameter rescaling: a gauge
parameter epsilon splits the physical constants into hatted O(1) pieces,

    h_hat = epsilon * h_a,   alpha = epsilon^2 * alpha_hat,
    eta = epsilon^2 * eta_hat,   mu = sqrt(alpha_hat) * epsilon,

and the slow time tau is defined by t = eta_hat * epsilon^2 * tau.
A rotation C built from the field direction takes the precession
generator Gamma = [h_hat x] to its normal form Lambda, and conjugates
the anisotropy tensor into E = C^T D C.  All closed-form approximations
are expressed through omega_hat = eta_hat * omega / sqrt(alpha_hat) and
the entries of E_hat = (eta_hat / alpha_hat) * E.

Everything in this module is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, HypothesisError, PoleProximityError
from .model import MaterialParams

__all__ = [
    "ScaledParams",
    "SphericalPoint",
    "POLE_MARGIN",
    "SIMPLE_FRAME_TOL",
    "build_scaled",
    "scaled_from_hats",
    "gamma_matrix",
    "lambda_matrix",
    "build_C",
    "build_E_explicit",
    "unitary_diagonalization_report",
    "to_spherical",
    "from_spherical",
    "initial_orientation",
    "angles_to_chi_xi",
    "chi_xi_to_angles",
    "TimeMaps",
]

#: Chart validity margin: to_spherical rejects |x3| >= 1 - POLE_MARGIN.
POLE_MARGIN = 1e-12

#: Off-diagonal magnitude below which E_hat counts as diagonal.
SIMPLE_FRAME_TOL = 1e-12


def _field_shape(h_hat):
    h = np.asarray(h_hat, dtype=float)
    if h.shape != (3,) or not np.all(np.isfinite(h)):
        raise ConfigError(f"field must be a finite 3-vector, got {h_hat!r}")
    sigma = math.hypot(h[1], h[2])
    omega = math.sqrt(h[0] * h[0] + sigma * sigma)
    if sigma == 0.0:
        raise HypothesisError(
            "applied field has no transverse component (h2 = h3 = 0); "
            "the rotation frame is undefined"
        )
    return h, sigma, omega


def gamma_matrix(h_hat):
    """Cross-product matrix Gamma = [h_hat x], i.e. Gamma x = h_hat x x."""
    h1, h2, h3 = np.asarray(h_hat, dtype=float)
    return np.array([
        [0.0, -h3, h2],
        [h3, 0.0, -h1],
        [-h2, h1, 0.0],
    ])


def lambda_matrix(omega):
    """Normal form of the precession generator: rotation rate omega in
    the 1-2 plane, zero along the field axis."""
    return np.array([
        [0.0, -omega, 0.0],
        [omega, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ])


def build_C(h_hat):
    """Rotation C in SO(3) with C^T Gamma C = Lambda.

    Columns are an orthonormal frame adapted to the field direction:
    the third column is h_hat / omega, and the first two span the
    plane in which the precession acts as a plain rotation.
    """
    h, sigma, omega = _field_shape(h_hat)
    h1, h2, h3 = h
    return np.array([
        [sigma, 0.0, h1],
        [-h1 * h2 / sigma, omega * h3 / sigma, h2],
        [-h1 * h3 / sigma, -omega * h2 / sigma, h3],
    ]) / omega


def build_E_explicit(h_hat, D):
    """Closed-form E = C^T D C without forming the product.

    Notes
    -----
    The (1,1) entry is D1 sigma^2/omega^2 + h1^2 (D2 h2^2 + D3 h3^2) /
    (sigma^2 omega^2); the h1 factor is squared, as the product form
    requires (each entry is homogeneous of degree zero in h_hat).
    """
    h, sigma, omega = _field_shape(h_hat)
    h1, h2, h3 = h
    D1, D2, D3 = np.asarray(D, dtype=float)
    s2, w2 = sigma * sigma, omega * omega
    e11 = D1 * s2 / w2 + h1 * h1 * (D2 * h2 * h2 + D3 * h3 * h3) / (s2 * w2)
    e12 = h1 * h2 * h3 * (D3 - D2) / (s2 * omega)
    e13 = h1 * (D1 * s2 - D2 * h2 * h2 - D3 * h3 * h3) / (sigma * w2)
    e22 = (D2 * h3 * h3 + D3 * h2 * h2) / s2
    e23 = -h2 * h3 * (D3 - D2) / (sigma * omega)
    e33 = (D1 * h1 * h1 + D2 * h2 * h2 + D3 * h3 * h3) / w2
    return np.array([
        [e11, e12, e13],
        [e12, e22, e23],
        [e13, e23, e33],
    ])


@dataclass(frozen=True)
class ScaledParams:
    """Hatted parameter bundle for one (material, field, epsilon) choice."""

    epsilon: float
    mu: float
    alpha_hat: float
    eta_hat: float
    h_hat: np.ndarray
    sigma: float
    omega: float
    omega_hat: float
    C: np.ndarray
    E: np.ndarray
    E_hat: np.ndarray

    def __post_init__(self):
        for arr_name in ("h_hat", "C", "E", "E_hat"):
            arr = np.asarray(getattr(self, arr_name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, arr_name, arr)

    def e_hat(self, i, j):
        """Entry e_hat_{i,j} of E_hat (1-based, symmetric)."""
        return float(self.E_hat[i - 1, j - 1])

    @property
    def is_simple(self):
        """True when E_hat is diagonal (off-diagonal entries vanish).

        This is the structural condition under which the cartesian
        closed forms and the switching theorem apply.  Fields of the
        form (0, b, 0) or (0, 0, c) satisfy it.
        """
        off = max(abs(self.E_hat[0, 1]), abs(self.E_hat[0, 2]),
                  abs(self.E_hat[1, 2]))
        scale = max(1.0, float(np.max(np.abs(self.E_hat))))
        return off <= SIMPLE_FRAME_TOL * scale

    def require_simple(self):
        if not self.is_simple:
            raise HypothesisError(
                "rotated anisotropy matrix E_hat is not diagonal; the "
                "simplified closed forms do not apply to this field "
                f"(off-diagonals {self.E_hat[0, 1]:.3e}, "
                f"{self.E_hat[0, 2]:.3e}, {self.E_hat[1, 2]:.3e})"
            )

    @property
    def physical_alpha(self):
        return self.epsilon ** 2 * self.alpha_hat

    @property
    def physical_eta(self):
        return self.epsilon ** 2 * self.eta_hat

    @property
    def physical_h_a(self):
        return self.h_hat / self.epsilon

    def material(self, D):
        """MaterialParams carrying the physical alpha, eta for this gauge."""
        return MaterialParams(np.asarray(D, dtype=float),
                              self.physical_alpha, self.physical_eta)

    def time_maps(self):
        return TimeMaps(self.epsilon, self.alpha_hat, self.eta_hat, self.mu)


def build_scaled(p, h_a, epsilon):
    """Split physical parameters into the hatted bundle for gauge epsilon.

    Parameters
    ----------
    p : MaterialParams
    h_a : array_like, shape (3,)
        Physical applied field.
    epsilon : float
        Gauge parameter > 0.  h_hat = epsilon * h_a must keep a
        transverse component.

    Returns
    -------
    ScaledParams
    """
    if not (epsilon > 0.0) or not math.isfinite(epsilon):
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    h_a = np.asarray(h_a, dtype=float)
    alpha_hat = p.alpha / epsilon ** 2
    eta_hat = p.eta / epsilon ** 2
    return scaled_from_hats(p.D, alpha_hat, eta_hat, epsilon * h_a, epsilon)


def scaled_from_hats(D, alpha_hat, eta_hat, h_hat, epsilon):
    """Build ScaledParams directly from hatted quantities."""
    if not (alpha_hat > 0.0 and eta_hat > 0.0):
        raise ConfigError(
            f"alpha_hat and eta_hat must be > 0, got {alpha_hat}, {eta_hat}"
        )
    if not (epsilon > 0.0) or not math.isfinite(epsilon):
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    h, sigma, omega = _field_shape(h_hat)
    mu = math.sqrt(alpha_hat) * epsilon
    omega_hat = eta_hat * omega / math.sqrt(alpha_hat)
    C = build_C(h)
    E = build_E_explicit(h, D)
    E_hat = (eta_hat / alpha_hat) * E
    return ScaledParams(
        epsilon=epsilon, mu=mu, alpha_hat=alpha_hat, eta_hat=eta_hat,
        h_hat=h, sigma=sigma, omega=omega, omega_hat=omega_hat,
        C=C, E=E, E_hat=E_hat,
    )


def unitary_diagonalization_report(h_hat):
    """Build the complex eigenframe of the precession generator and
    measure how well it satisfies its defining identities.

    The unitary M diagonalizes Gamma with eigenvalues (-i omega,
    +i omega, 0), and composing with the standard complex-to-real
    unitary U recovers the rotation C.  Returns the maximum absolute
    deviations as a dict with keys 'unitary', 'diagonalization',
    'product'.  Useful as a numerical cross-check of the frame
    construction on arbitrary admissible fields.
    """
    h, sigma, omega = _field_shape(h_hat)
    h1, h2, h3 = h
    iw = 1j * omega
    M = np.array([
        [sigma, sigma, math.sqrt(2) * h1],
        [(iw * h3 - h1 * h2) / sigma, -(iw * h3 + h1 * h2) / sigma,
         math.sqrt(2) * h2],
        [-(iw * h2 + h1 * h3) / sigma, (iw * h2 - h1 * h3) / sigma,
         math.sqrt(2) * h3],
    ], dtype=complex) / (math.sqrt(2) * omega)
    U = np.array([
        [1.0, -1j, 0.0],
        [1.0, 1j, 0.0],
        [0.0, 0.0, math.sqrt(2)],
    ], dtype=complex) / math.sqrt(2)
    gamma = gamma_matrix(h)
    dev_unitary = np.max(np.abs(M.conj().T @ M - np.eye(3)))
    dev_diag = np.max(np.abs(
        M.conj().T @ gamma @ M - np.diag([-iw, iw, 0.0])
    ))
    dev_product = np.max(np.abs(M @ U - build_C(h)))
    return {
        "unitary": float(dev_unitary),
        "diagonalization": float(dev_diag),
        "product": float(dev_product),
    }


@dataclass(frozen=True)
class SphericalPoint:
    """Point on the unit sphere: colatitude theta in (0, pi), unwrapped
    azimuth phi.  phi is cumulative (not reduced mod 2 pi) because the
    switching criterion tracks a total phase excursion of pi."""

    theta: float
    phi: float


def from_spherical(sp):
    """Unit vector (sin th cos ph, sin th sin ph, cos th)."""
    st = math.sin(sp.theta)
    return np.array([
        st * math.cos(sp.phi),
        st * math.sin(sp.phi),
        math.cos(sp.theta),
    ])


def to_spherical(x):
    """Invert the spherical chart for a unit vector away from the poles."""
    x = np.asarray(x, dtype=float)
    if abs(x[2]) >= 1.0 - POLE_MARGIN:
        raise PoleProximityError(
            f"|x3| = {abs(x[2])!r} is within {POLE_MARGIN} of a pole; "
            "the spherical chart is unusable there"
        )
    return SphericalPoint(theta=math.acos(x[2]),
                          phi=math.atan2(x[1], x[0]))


def initial_orientation(sp_params, m0):
    """Spherical coordinates of a state in the rotated frame: the chart
    point of C^T m0.  For m0 = e1 this gives phi(0) = 0 and theta(0) =
    acos(h1_hat / omega) = pi/2 - asin(h1_hat / omega), since the first
    row of C is (sigma, 0, h1_hat) / omega."""
    m0 = np.asarray(m0, dtype=float)
    x = sp_params.C.T @ m0
    return to_spherical(x)


def angles_to_chi_xi(sp, tau, mu, omega_hat):
    """Co-rotating deviation coordinates: phi = mu omega_hat tau + mu xi
    and theta = pi/2 + mu chi."""
    if not (mu > 0.0):
        raise ConfigError(f"mu must be > 0, got {mu}")
    chi = (sp.theta - 0.5 * math.pi) / mu
    xi = (sp.phi - mu * omega_hat * tau) / mu
    return chi, xi


def chi_xi_to_angles(chi, xi, tau, mu, omega_hat):
    """Inverse of angles_to_chi_xi."""
    if not (mu > 0.0):
        raise ConfigError(f"mu must be > 0, got {mu}")
    return SphericalPoint(theta=0.5 * math.pi + mu * chi,
                          phi=mu * omega_hat * tau + mu * xi)


@dataclass(frozen=True)
class TimeMaps:
    """Bidirectional converter between physical time t and slow time tau.

    The two equivalent expressions t = eta_hat eps^2 tau and
    t = mu^2 (eta_hat/alpha_hat) tau agree identically when mu =
    sqrt(alpha_hat) eps; the constructor checks that consistency.
    """

    epsilon: float
    alpha_hat: float
    eta_hat: float
    mu: float

    def __post_init__(self):
        if min(self.epsilon, self.alpha_hat, self.eta_hat, self.mu) <= 0.0:
            raise ConfigError("time scales require positive parameters")
        r1 = self.eta_hat * self.epsilon ** 2
        r2 = self.mu ** 2 * self.eta_hat / self.alpha_hat
        if not math.isclose(r1, r2, rel_tol=1e-12):
            raise ConfigError(
                f"inconsistent scaling: eta_hat*eps^2 = {r1!r} but "
                f"mu^2*eta_hat/alpha_hat = {r2!r}"
            )

    @property
    def rate(self):
        """dt/dtau."""
        return self.eta_hat * self.epsilon ** 2

    def t_of_tau(self, tau):
        return self.rate * tau

    def tau_of_t(self, t):
        return t / self.rate
