"""Experiment configuration: a small INI dialect with lossless round-trip.

A config fixes the material, the applied field, the switch-off schedule,
integrator tolerances, and output policy.  The material accepts either
physical damping pairs (alpha, eta) or reduced ones
(alpha_hat, eta_hat, epsilon); the other triple is derived from
alpha = epsilon^2 alpha_hat, eta = epsilon^2 eta_hat.  In the physical
form the split is gauged by alpha_hat = 1, i.e. epsilon = sqrt(alpha);
every planned or simulated quantity is invariant under that choice.

Floats are rendered in shortest exact form, so parse -> dump -> parse is
the identity on values and dump(parse(dump(c))) == dump(c) on bytes.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .frames import ScaledParams, scaled_from_hats
from .integrator import IntegratorConfig
from .model import FieldSchedule, MaterialParams
from .planner import SwitchPlan, compute_plan

__all__ = [
    "ExperimentConfig",
    "ResolvedExperiment",
    "parse_config",
    "load_config",
    "dump_config",
]


_KNOWN_KEYS = {
    "material": {"d1", "d2", "d3", "alpha", "eta",
                 "alpha_hat", "eta_hat", "epsilon"},
    "field": {"h1", "h2", "h3", "b", "n"},
    "schedule": {"t_star", "t_end"},
    "integrator": {"rel_tol", "abs_tol", "max_step", "renormalize",
                   "convergence_tol", "max_wall_steps"},
    "output": {"out", "stride", "with_approx"},
    "sweep": {"t_star_grid", "b_grid"},
}


def _fmt(x):
    # repr of a float is the shortest string that parses back exactly.
    return repr(float(x))


def _get_float(sec, key, where):
    raw = sec[key]
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"[{where}] {key} = {raw!r} is not a number") from None


def _parse_grid(raw, where):
    """Grid syntax: 'start:stop:count' (inclusive, count >= 2) or a
    comma-separated list of values."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"[sweep] {where}: expected start:stop:count, got {raw!r}")
        try:
            lo, hi = float(parts[0]), float(parts[1])
            count = int(parts[2])
        except ValueError:
            raise ConfigError(
                f"[sweep] {where}: bad start:stop:count in {raw!r}") from None
        if count < 2:
            raise ConfigError(f"[sweep] {where}: count must be >= 2")
        return tuple(np.linspace(lo, hi, count).tolist())
    try:
        vals = tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"[sweep] {where}: bad value list {raw!r}") from None
    if not vals:
        raise ConfigError(f"[sweep] {where}: empty grid")
    return vals


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed, validated experiment description.

    Exactly one of (alpha, eta) / (alpha_hat, eta_hat, epsilon) is set;
    exactly one of h_a / b / n describes the field.  t_star and t_end
    are floats or None meaning "auto" (plan-derived T_sw and 100 T_sw).
    """

    D: tuple
    alpha: Optional[float] = None
    eta: Optional[float] = None
    alpha_hat: Optional[float] = None
    eta_hat: Optional[float] = None
    epsilon: Optional[float] = None
    h_a: Optional[tuple] = None
    b: Optional[float] = None
    n: Optional[int] = None
    t_star: Optional[float] = None
    t_end: Optional[float] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    renormalize: bool = True
    convergence_tol: float = 1e-6
    max_wall_steps: int = 50_000_000
    out: Optional[str] = None
    stride: Optional[int] = None
    with_approx: bool = False
    t_star_grid: Optional[tuple] = None
    b_grid: Optional[tuple] = None

    def __post_init__(self):
        D = tuple(float(d) for d in self.D)
        if len(D) != 3:
            raise ConfigError("material needs d1, d2, d3")
        object.__setattr__(self, "D", D)
        phys = (self.alpha is not None, self.eta is not None)
        hat = (self.alpha_hat is not None, self.eta_hat is not None,
               self.epsilon is not None)
        if any(phys) and not all(phys):
            raise ConfigError("material: alpha and eta must be given together")
        if any(hat) and not all(hat):
            raise ConfigError(
                "material: alpha_hat, eta_hat, epsilon must be given together")
        if all(phys) == all(hat):
            raise ConfigError(
                "material: give exactly one of (alpha, eta) or "
                "(alpha_hat, eta_hat, epsilon)")
        specs = [self.h_a is not None, self.b is not None, self.n is not None]
        if sum(specs) != 1:
            raise ConfigError(
                "field: give exactly one of (h1, h2, h3), b, or n")
        if self.h_a is not None:
            object.__setattr__(self, "h_a",
                               tuple(float(h) for h in self.h_a))
        if self.n is not None and self.n < 1:
            raise ConfigError(f"field: n must be >= 1, got {self.n}")
        if self.stride is not None and self.stride < 1:
            raise ConfigError(f"output: stride must be >= 1, got {self.stride}")
        for name in ("t_star", "t_end"):
            val = getattr(self, name)
            if val is not None and val < 0.0:
                raise ConfigError(f"schedule: {name} must be >= 0")

    # -- derived quantities ------------------------------------------------

    def material(self):
        if self.alpha is not None:
            return MaterialParams(np.array(self.D), self.alpha, self.eta)
        alpha = self.epsilon ** 2 * self.alpha_hat
        eta = self.epsilon ** 2 * self.eta_hat
        return MaterialParams(np.array(self.D), alpha, eta)

    def _gauge(self):
        """(alpha_hat, eta_hat, epsilon) with the sqrt(alpha) gauge
        applied when only physical damping was given."""
        if self.alpha_hat is not None:
            return self.alpha_hat, self.eta_hat, self.epsilon
        return 1.0, self.eta / self.alpha, math.sqrt(self.alpha)

    def field_vector(self):
        """Physical applied field h_a (before switch-off)."""
        if self.h_a is not None:
            return np.array(self.h_a, dtype=float)
        alpha_hat, eta_hat, epsilon = self._gauge()
        if self.b is not None:
            b = self.b
        else:
            mu = math.sqrt(alpha_hat) * epsilon
            b = math.sqrt(alpha_hat) / (2.0 * mu * eta_hat * self.n)
        return np.array([0.0, b / epsilon, 0.0])

    def scaled(self):
        alpha_hat, eta_hat, epsilon = self._gauge()
        h_hat = epsilon * self.field_vector()
        return scaled_from_hats(np.array(self.D), alpha_hat, eta_hat,
                                h_hat, epsilon)

    def resolve(self):
        """Fully resolved run: material, field, plan, schedule, stepper."""
        p = self.material()
        h_a = self.field_vector()
        sp = self.scaled()
        plan = compute_plan(sp, np.array(self.D))
        t_star = plan.T_sw if self.t_star is None else self.t_star
        t_end = 100.0 * plan.T_sw if self.t_end is None else self.t_end
        if t_end <= 0.0:
            raise ConfigError("resolved t_end must be positive")
        integ = IntegratorConfig(
            t_end=t_end, rel_tol=self.rel_tol, abs_tol=self.abs_tol,
            max_step=self.max_step, renormalize=self.renormalize,
            convergence_tol=self.convergence_tol,
            max_wall_steps=self.max_wall_steps,
        )
        return ResolvedExperiment(
            config=self, params=p, h_a=h_a, scaled=sp, plan=plan,
            schedule=FieldSchedule(h_a, t_star), integrator=integ,
        )


@dataclass(frozen=True)
class ResolvedExperiment:
    config: ExperimentConfig
    params: MaterialParams
    h_a: np.ndarray
    scaled: ScaledParams
    plan: SwitchPlan
    schedule: FieldSchedule
    integrator: IntegratorConfig


# -- parsing ----------------------------------------------------------------

def _read_parser(text, origin):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    return parser


def parse_config(text, origin="<string>"):
    parser = _read_parser(text, origin)
    if "material" not in parser:
        raise ConfigError("missing [material] section")
    if "field" not in parser:
        raise ConfigError("missing [field] section")
    mat = parser["material"]
    for key in ("d1", "d2", "d3"):
        if key not in mat:
            raise ConfigError(f"[material] missing {key}")
    kwargs = {
        "D": tuple(_get_float(mat, k, "material") for k in ("d1", "d2", "d3")),
    }
    for key in ("alpha", "eta", "alpha_hat", "eta_hat", "epsilon"):
        if key in mat:
            kwargs[key] = _get_float(mat, key, "material")

    fld = parser["field"]
    comp = [k for k in ("h1", "h2", "h3") if k in fld]
    if comp and len(comp) != 3:
        raise ConfigError("field: h1, h2, h3 must be given together")
    if comp:
        kwargs["h_a"] = tuple(_get_float(fld, k, "field")
                              for k in ("h1", "h2", "h3"))
    if "b" in fld:
        kwargs["b"] = _get_float(fld, "b", "field")
    if "n" in fld:
        try:
            kwargs["n"] = int(fld["n"])
        except ValueError:
            raise ConfigError(
                f"[field] n = {fld['n']!r} is not an integer") from None

    if "schedule" in parser:
        sch = parser["schedule"]
        for key in ("t_star", "t_end"):
            if key in sch and sch[key].strip().lower() != "auto":
                kwargs[key] = _get_float(sch, key, "schedule")

    if "integrator" in parser:
        itg = parser["integrator"]
        for key in ("rel_tol", "abs_tol", "max_step", "convergence_tol"):
            if key in itg:
                kwargs[key] = _get_float(itg, key, "integrator")
        if "renormalize" in itg:
            try:
                kwargs["renormalize"] = itg.getboolean("renormalize")
            except ValueError:
                raise ConfigError(
                    "[integrator] renormalize must be a boolean") from None
        if "max_wall_steps" in itg:
            try:
                kwargs["max_wall_steps"] = int(itg["max_wall_steps"])
            except ValueError:
                raise ConfigError(
                    "[integrator] max_wall_steps must be an integer") from None

    if "output" in parser:
        out = parser["output"]
        if "out" in out:
            kwargs["out"] = out["out"].strip()
        if "stride" in out and out["stride"].strip().lower() != "all":
            try:
                kwargs["stride"] = int(out["stride"])
            except ValueError:
                raise ConfigError(
                    "[output] stride must be an integer or 'all'") from None
        if "with_approx" in out:
            try:
                kwargs["with_approx"] = out.getboolean("with_approx")
            except ValueError:
                raise ConfigError(
                    "[output] with_approx must be a boolean") from None

    if "sweep" in parser:
        swp = parser["sweep"]
        if "t_star_grid" in swp:
            kwargs["t_star_grid"] = _parse_grid(swp["t_star_grid"],
                                                "t_star_grid")
        if "b_grid" in swp:
            kwargs["b_grid"] = _parse_grid(swp["b_grid"], "b_grid")
        if kwargs.get("t_star_grid") and kwargs.get("b_grid"):
            raise ConfigError("sweep: give t_star_grid or b_grid, not both")

    return ExperimentConfig(**kwargs)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text, origin=str(path))


# -- serialization -----------------------------------------------------------

def dump_config(cfg):
    """Render a config in canonical form (fixed key order, 17-digit
    floats).  parse_config(dump_config(c)) reproduces c exactly."""
    buf = io.StringIO()

    def line(s=""):
        buf.write(s + "\n")

    line("[material]")
    for key, val in zip(("d1", "d2", "d3"), cfg.D):
        line(f"{key} = {_fmt(val)}")
    if cfg.alpha is not None:
        line(f"alpha = {_fmt(cfg.alpha)}")
        line(f"eta = {_fmt(cfg.eta)}")
    else:
        line(f"alpha_hat = {_fmt(cfg.alpha_hat)}")
        line(f"eta_hat = {_fmt(cfg.eta_hat)}")
        line(f"epsilon = {_fmt(cfg.epsilon)}")
    line()
    line("[field]")
    if cfg.h_a is not None:
        for key, val in zip(("h1", "h2", "h3"), cfg.h_a):
            line(f"{key} = {_fmt(val)}")
    elif cfg.b is not None:
        line(f"b = {_fmt(cfg.b)}")
    else:
        line(f"n = {cfg.n}")
    line()
    line("[schedule]")
    line("t_star = auto" if cfg.t_star is None
         else f"t_star = {_fmt(cfg.t_star)}")
    line("t_end = auto" if cfg.t_end is None
         else f"t_end = {_fmt(cfg.t_end)}")
    line()
    line("[integrator]")
    line(f"rel_tol = {_fmt(cfg.rel_tol)}")
    line(f"abs_tol = {_fmt(cfg.abs_tol)}")
    if math.isfinite(cfg.max_step):
        line(f"max_step = {_fmt(cfg.max_step)}")
    line(f"renormalize = {'true' if cfg.renormalize else 'false'}")
    line(f"convergence_tol = {_fmt(cfg.convergence_tol)}")
    line(f"max_wall_steps = {cfg.max_wall_steps}")
    line()
    line("[output]")
    if cfg.out is not None:
        line(f"out = {cfg.out}")
    line("stride = all" if cfg.stride is None else f"stride = {cfg.stride}")
    line(f"with_approx = {'true' if cfg.with_approx else 'false'}")
    if cfg.t_star_grid is not None or cfg.b_grid is not None:
        line()
        line("[sweep]")
        if cfg.t_star_grid is not None:
            line("t_star_grid = " +
                 ", ".join(_fmt(v) for v in cfg.t_star_grid))
        if cfg.b_grid is not None:
            line("b_grid = " + ", ".join(_fmt(v) for v in cfg.b_grid))
    return buf.getvalue()
