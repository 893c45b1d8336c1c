"""Physical model of an inertial macrospin.

A single-domain magnetic particle is described by the unit magnetization
m and its time derivative v = dm/dt.  The effective field combines an
applied field with a diagonal anisotropy/demagnetizing term, the energy
functional

    W(m, v) = (eta/2) |v|^2 + h(m),
    h(m)    = (1/2) [sum_j D_j m_j^2 - D_1] - h_a . m,

is dissipated at the rate dW/dt = -alpha |v|^2, and the second-order
(inertial) equation of motion is integrated in the first-order form

    dm/dt = v,
    dv/dt = -|v|^2 m - (1/eta) [ m x v + m x (m x h_eff) + alpha v ].

With D_1 < D_2 < D_3 the easy axis is e_1; the six states (+-e_j, 0) are
the equilibria of the free dynamics and (+-e_1, 0) are the only energy
minima.  Switching means steering the state from (e_1, 0) to (-e_1, 0)
by a transverse field pulse that is shut off at a planned instant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "MaterialParams",
    "SpinState",
    "FieldSchedule",
    "SwitchOutcome",
    "UNIT_NORM_TOL",
    "ORTHOGONALITY_TOL",
    "effective_field",
    "illg_rhs",
    "anisotropy_energy",
    "energy_W",
    "equilibria",
    "d_gap",
]

#: Tolerance on | |m| - 1 | for a state to count as a valid spin state.
UNIT_NORM_TOL = 1e-9

#: Tolerance on |m . v| for the tangency constraint m . dm/dt = 0.
ORTHOGONALITY_TOL = 1e-9


def _as_vec3(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class MaterialParams:
    """Material constants of the macrospin.

    Parameters
    ----------
    D : array_like, shape (3,)
        Diagonal demagnetizing/anisotropy factors, strictly increasing
        (D1 < D2 < D3) so that e1 is the easy axis.
    alpha : float
        Gilbert damping, > 0.
    eta : float
        Inertial (nutation) strength, > 0.
    """

    D: np.ndarray
    alpha: float
    eta: float

    def __post_init__(self):
        D = _as_vec3(self.D, "D")
        D.setflags(write=False)
        object.__setattr__(self, "D", D)
        if not (D[0] < D[1] < D[2]):
            raise ConfigError(
                f"anisotropy factors must satisfy D1 < D2 < D3, got {D}"
            )
        if not (self.alpha > 0.0) or not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not (self.eta > 0.0) or not math.isfinite(self.eta):
            raise ConfigError(f"eta must be > 0, got {self.eta}")


@dataclass(frozen=True)
class SpinState:
    """State z = (m, v) of the first-order system.

    m must be a unit vector and v tangent to the sphere at m, both
    within ``UNIT_NORM_TOL`` / ``ORTHOGONALITY_TOL``.
    """

    m: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        m = _as_vec3(self.m, "m")
        v = _as_vec3(self.v, "v")
        m.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)
        nm = np.linalg.norm(m)
        if abs(nm - 1.0) > UNIT_NORM_TOL:
            raise ConfigError(f"|m| = {nm!r} is not 1 within {UNIT_NORM_TOL}")
        mv = float(np.dot(m, v))
        # The tangency tolerance scales with |v|: a fast state carries
        # proportionally larger rounding in the dot product.
        if abs(mv) > ORTHOGONALITY_TOL * max(1.0, np.linalg.norm(v)):
            raise ConfigError(
                f"m . v = {mv!r} violates tangency within {ORTHOGONALITY_TOL}"
            )

    def as_array(self):
        """Pack into the flat 6-vector (m1, m2, m3, v1, v2, v3)."""
        return np.concatenate([self.m, self.v])

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(y[:3].copy(), y[3:].copy())


@dataclass(frozen=True)
class FieldSchedule:
    """Piecewise-constant applied field: h_a for t < t_star, 0 after.

    ``t_star = inf`` keeps the field on for the whole run; ``t_star = 0``
    means the field is never applied.
    """

    h_a: np.ndarray
    t_star: float = math.inf

    def __post_init__(self):
        h = _as_vec3(self.h_a, "h_a")
        h.setflags(write=False)
        object.__setattr__(self, "h_a", h)
        if not (self.t_star >= 0.0):
            raise ConfigError(f"t_star must be >= 0, got {self.t_star}")

    def field_at(self, t):
        """Active field value at time t (h_a strictly before t_star)."""
        if t < self.t_star:
            return self.h_a
        return np.zeros(3)


class SwitchOutcome(enum.Enum):
    """Terminal classification of a simulated trajectory."""

    SWITCHED = "Switched"          # converged to (-e1, 0)
    NOT_SWITCHED = "NotSwitched"   # converged to (+e1, 0)
    UNDECIDED = "Undecided"        # budget exhausted before convergence
    OTHER = "Other"                # converged to a different equilibrium


def effective_field(m, h_a, D):
    """Effective field h_eff = h_a - D m (componentwise D_j m_j)."""
    m = np.asarray(m, dtype=float)
    return np.asarray(h_a, dtype=float) - np.asarray(D, dtype=float) * m


def illg_rhs(z, h_a, p):
    """Right-hand side of the 6-D inertial equation of motion.

    Parameters
    ----------
    z : SpinState or array_like shape (6,)
        Current state (m, v).
    h_a : array_like, shape (3,)
        Applied field active at this instant.
    p : MaterialParams

    Returns
    -------
    (dm, dv) : pair of ndarray, shape (3,)
        dm = v and
        dv = -|v|^2 m - eta^-1 [ m x v + m x (m x h_eff) + alpha v ].

    Notes
    -----
    For |m| = 1 and m . v = 0 the output satisfies m . dv = -|v|^2
    exactly, which is the time derivative of the constraint m . v = 0;
    together with d|m|^2/dt = 2 m . v = 0 both constraints are conserved.
    """
    if isinstance(z, SpinState):
        m, v = z.m, z.v
    else:
        y = np.asarray(z, dtype=float)
        m, v = y[:3], y[3:]
    if p.eta == 0.0:
        raise ConfigError("eta = 0 is the non-inertial limit, not supported")
    h_eff = effective_field(m, h_a, p.D)
    mxv = np.cross(m, v)
    # m x (m x h) = (m . h) m - |m|^2 h, expanded to avoid a second cross
    mxmxh = np.dot(m, h_eff) * m - np.dot(m, m) * h_eff
    dv = -np.dot(v, v) * m - (mxv + mxmxh + p.alpha * v) / p.eta
    return v.copy(), dv


def anisotropy_energy(m, h_a, D):
    """Potential part h(m) = (1/2)[sum D_j m_j^2 - D_1] - h_a . m.

    m may be a single 3-vector or a (3, n) stack of them.
    """
    m = np.asarray(m, dtype=float)
    D = np.asarray(D, dtype=float)
    h_a = np.asarray(h_a, dtype=float)
    pot = 0.5 * (np.tensordot(D, m * m, axes=(0, 0)) - D[0])
    return pot - np.tensordot(h_a, m, axes=(0, 0))


def energy_W(z, h_a, p):
    """Total energy W = (eta/2)|v|^2 + h(m) for the active field h_a."""
    if isinstance(z, SpinState):
        m, v = z.m, z.v
    else:
        y = np.asarray(z, dtype=float)
        m, v = y[:3], y[3:]
    return 0.5 * p.eta * float(np.dot(v, v)) + anisotropy_energy(m, h_a, p.D)


def equilibria(p):
    """The six free equilibria (+-e_j, 0), j = 1, 2, 3.

    Only meaningful for h_a = 0; with a field on, the stationary points
    move off the axes.
    """
    out = []
    for j in range(3):
        for s in (+1.0, -1.0):
            m = np.zeros(3)
            m[j] = s
            out.append(SpinState(m, np.zeros(3)))
    return out


def d_gap(D, j, i):
    """Anisotropy gap D_{j,i} = D_j - D_i (1-based indices, j > i > 0)."""
    D = np.asarray(D, dtype=float)
    if not (1 <= i <= 3 and 1 <= j <= 3):
        raise ConfigError(f"d_gap indices must be in 1..3, got ({j}, {i})")
    return float(D[j - 1] - D[i - 1])
