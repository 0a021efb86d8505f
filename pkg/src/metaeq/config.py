"""Line-oriented ``key = value`` configuration files.

Keys are dotted (``e.params.value``); a ``[section]`` line prefixes the keys
that follow it. Values are parsed as JSON when possible (numbers, lists,
``true``/``false``) and kept as bare strings otherwise. ``#`` starts a comment.

Schema (``*`` marks required keys)::

    dimension*                       1, 2 or 3
    domain.kind*                     box | balls | torus
    domain.params.lo, .hi            box corners
    domain.params.centers, .radii    union of balls
    domain.params.side               torus side lengths
    {e,a,sigma}.kind*                constant | affine | bump | gaussians
    {e,a,sigma}.params.<name>        value, gradient, base, amplitude, width, center, centers, amplitudes, scales
    {e,a,sigma}.bounds               [lower, upper] declared range
    {e,a,sigma}.lipschitz            declared Lipschitz constant
    kernel.kind                      uniform | linear | quadratic (default uniform)
    kernel.params.height             constant kernel height (default 1)
    kernel.height.*                  position-dependent height, same keys as a field
    kernel.c_max                     declared kernel maximum
    r*                               dispersal radius
    L_rho                            declared Lipschitz constant of rho
    quadrature.nodes                 Gauss-Legendre nodes per polar axis (64)
    grid.step                        grid spacing for minima (r/8)
    f.kind, f.scale                  colonisation function (saturating, 1)
    n, n_sequence, replicates, seed  experiment size and seed
    solver.tol, solver.max_iter      fixed-point iteration
    bounds.center, bounds.t          Theta = B_x(t)
    bounds.alpha1, bounds.alpha2     alpha2 may be ``auto`` for 1 - eta_Theta
    bounds.beta, bounds.beta_prime, bounds.m, bounds.theta1, bounds.theta2
    schedule.gamma1, .gamma2, .c1, .c2, .phi, .r_scale, .r_exponent, .K2
    concentration.t_over_H, concentration.points
    stochastic.t_end, .burn_in, .checkpoints
"""
from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colonization import ColonizationFunction
from .errors import ConfigError, MetaEqError
from .fields import Kernel, make_field
from .geometry import BallUnion, Box, Torus
from .landscape import Landscape

FIELDS = ("e", "a", "sigma")
FIELD_PARAMS = ("value", "gradient", "base", "amplitude", "width", "center", "centers", "amplitudes", "scales")

_SCALARS = {
    "dimension", "domain.kind", "domain.params.lo", "domain.params.hi", "domain.params.centers",
    "domain.params.radii", "domain.params.side", "kernel.kind", "kernel.params.height", "kernel.c_max", "r",
    "L_rho", "quadrature.nodes", "grid.step", "f.kind", "f.scale", "n", "n_sequence", "replicates", "seed",
    "solver.tol", "solver.max_iter",
    "bounds.center", "bounds.t", "bounds.alpha1", "bounds.alpha2", "bounds.beta", "bounds.beta_prime",
    "bounds.m", "bounds.theta1", "bounds.theta2",
    "schedule.gamma1", "schedule.gamma2", "schedule.c1", "schedule.c2", "schedule.phi", "schedule.r_scale",
    "schedule.r_exponent", "schedule.K2",
    "concentration.t_over_H", "concentration.points",
    "stochastic.t_end", "stochastic.burn_in", "stochastic.checkpoints",
}


def _field_keys(prefix: str) -> set[str]:
    keys = {f"{prefix}.kind", f"{prefix}.bounds", f"{prefix}.lipschitz"}
    return keys | {f"{prefix}.params.{p}" for p in FIELD_PARAMS}


VALID_KEYS = frozenset(_SCALARS.union(*(_field_keys(p) for p in (*FIELDS, "kernel.height"))))


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _check_key(key: str, where: str = ""):
    if key not in VALID_KEYS:
        near = difflib.get_close_matches(key, sorted(VALID_KEYS), n=3)
        hint = f"; did you mean {', '.join(near)}?" if near else f"; valid keys: {', '.join(sorted(VALID_KEYS))}"
        raise ConfigError(f"unknown key {key!r}{where}{hint}")


def parse_text(text: str, source: str = "<config>") -> dict:
    values: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = f"{section}.{key}" if section else key
        _check_key(key, f" at {source}:{lineno}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = parse_value(val)
    return values


def apply_overrides(values: dict, overrides) -> dict:
    """New dict with ``key=value`` overrides applied; the input is left untouched."""
    out = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, val = (s.strip() for s in item.split("=", 1))
        _check_key(key, " in --override")
        out[key] = parse_value(val)
    return out


@dataclass(frozen=True)
class Config:
    """Parsed configuration with typed accessors."""

    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path, overrides=None) -> "Config":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls(apply_overrides(parse_text(text, str(p)), overrides))

    @classmethod
    def from_text(cls, text: str, overrides=None) -> "Config":
        return cls(apply_overrides(parse_text(text), overrides))

    def with_overrides(self, overrides) -> "Config":
        return Config(apply_overrides(self.values, overrides))

    def has(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default=None, kind=None, required: bool = False):
        if key not in self.values:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default
        v = self.values[key]
        if kind is None:
            return v
        try:
            if kind is int:
                if isinstance(v, bool) or float(v) != int(v):
                    raise ValueError
                return int(v)
            if kind is float:
                if isinstance(v, bool):
                    raise ValueError
                return float(v)
            if kind is list:
                if not isinstance(v, list):
                    raise ValueError
                return v
            if kind is str:
                return str(v)
        except (TypeError, ValueError):
            pass
        raise ConfigError(f"key {key!r} must be of type {kind.__name__}, got {v!r}")

    def as_text(self) -> str:
        return "".join(f"{k} = {json.dumps(v)}\n" for k, v in sorted(self.values.items()))


# ---------------------------------------------------------------- builders

def build_domain(cfg: Config):
    d = cfg.get("dimension", kind=int, required=True)
    if d not in (1, 2, 3):
        raise ConfigError(f"dimension must be 1, 2 or 3, got {d}")
    kind = cfg.get("domain.kind", kind=str, required=True)
    if kind == "box":
        dom = Box(np.asarray(cfg.get("domain.params.lo", kind=list, required=True), dtype=float),
                  np.asarray(cfg.get("domain.params.hi", kind=list, required=True), dtype=float))
    elif kind == "balls":
        dom = BallUnion(np.asarray(cfg.get("domain.params.centers", kind=list, required=True), dtype=float),
                        np.asarray(cfg.get("domain.params.radii", kind=list, required=True), dtype=float))
    elif kind == "torus":
        dom = Torus(np.asarray(cfg.get("domain.params.side", [1.0] * d, kind=list), dtype=float))
    else:
        raise ConfigError(f"domain.kind must be one of box, balls, torus, got {kind!r}")
    if dom.dim != d:
        raise ConfigError(f"domain has dimension {dom.dim} but dimension = {d}")
    return dom


def _build_field(cfg: Config, prefix: str, d: int, box, default=None):
    if not cfg.has(f"{prefix}.kind"):
        if default is None:
            raise ConfigError(f"missing required key {prefix + '.kind'!r}")
        return make_field("constant", {"value": default}, d, box, name=prefix)
    kind = cfg.get(f"{prefix}.kind", kind=str)
    params = {p: cfg.get(f"{prefix}.params.{p}") for p in FIELD_PARAMS if cfg.has(f"{prefix}.params.{p}")}
    bounds = cfg.get(f"{prefix}.bounds", kind=list)
    if bounds is not None and len(bounds) != 2:
        raise ConfigError(f"{prefix}.bounds must be [lower, upper]")
    lip = cfg.get(f"{prefix}.lipschitz", kind=float)
    return make_field(kind, params, d, box, bounds, lip, name=prefix)


def build_landscape(cfg: Config) -> Landscape:
    dom = build_domain(cfg)
    d = dom.dim
    box = dom.bounding_box
    fields = {name: _build_field(cfg, name, d, box) for name in FIELDS}
    if cfg.has("kernel.height.kind"):
        height = _build_field(cfg, "kernel.height", d, box)
    else:
        height = make_field("constant", {"value": cfg.get("kernel.params.height", 1.0, kind=float)}, d, box,
                            name="kernel.params.height")
    kernel = Kernel(cfg.get("kernel.kind", "uniform", kind=str), height, cfg.get("kernel.c_max", 0.0, kind=float))
    r = cfg.get("r", kind=float, required=True)
    return Landscape(dom, fields["e"], fields["a"], fields["sigma"], kernel, r,
                     cfg.get("L_rho", kind=float), cfg.get("quadrature.nodes", 64, kind=int), cfg.get("grid.step", kind=float))


def build_f(cfg: Config) -> ColonizationFunction:
    return ColonizationFunction(cfg.get("f.kind", "saturating", kind=str), cfg.get("f.scale", 1.0, kind=float))


def build_spec(cfg: Config, land: Landscape, f: ColonizationFunction):
    """``BoundSpec`` from the ``bounds.*`` keys, or None when they are absent.

    ``bounds.alpha2 = auto`` resolves to ``1 - eta_Theta``.
    """
    from .bounds import BoundSpec, eta_theta
    from .geometry import Ball

    if not cfg.has("bounds.t"):
        return None
    center = cfg.get("bounds.center", kind=list, required=True)
    if len(center) != land.dim:
        raise ConfigError(f"bounds.center must have length {land.dim}")
    t = cfg.get("bounds.t", kind=float)
    a2 = cfg.get("bounds.alpha2", required=True)
    if a2 == "auto":
        theta = Ball(np.asarray(center, dtype=float), t)
        if not land.domain.contains_ball(theta):
            raise ConfigError("bounds.center/bounds.t: Theta is not contained in the habitat")
        a2 = 1.0 - eta_theta(land, f, theta)
    else:
        a2 = cfg.get("bounds.alpha2", kind=float)
    spec = BoundSpec(tuple(center), t, cfg.get("bounds.alpha1", kind=float, required=True), a2,
                     cfg.get("bounds.beta", kind=float, required=True), cfg.get("bounds.beta_prime", kind=float, required=True),
                     cfg.get("bounds.m", kind=float), cfg.get("bounds.theta1", kind=float), cfg.get("bounds.theta2", kind=float))
    if not land.domain.contains_ball(spec.theta):
        raise ConfigError("bounds.center/bounds.t: Theta is not contained in the habitat")
    return spec


def validate(cfg: Config) -> dict:
    """Build every configured object; errors name the offending key."""
    try:
        land = build_landscape(cfg)
        f = build_f(cfg)
        spec = build_spec(cfg, land, f)
    except ConfigError:
        raise
    except MetaEqError as exc:
        raise ConfigError(str(exc)) from None
    n = cfg.get("n", kind=int)
    if n is not None and n < 2:
        raise ConfigError("n must be at least 2")
    seq = cfg.get("n_sequence", kind=list)
    if seq is not None and (len(seq) == 0 or any(int(k) < 2 for k in seq)):
        raise ConfigError("n_sequence must be a nonempty list of integers >= 2")
    reps = cfg.get("replicates", 1, kind=int)
    if reps < 1:
        raise ConfigError("replicates must be at least 1")
    seed = cfg.get("seed", 0, kind=int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must lie in [0, 2^64)")
    return {"landscape": land, "f": f, "spec": spec}
