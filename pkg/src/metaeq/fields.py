"""Spatially varying model functions (e, a, sigma) and colonisation kernels.

Each built-in family knows its analytic range and Lipschitz constant over a
bounding box. Declared values from a config override the analytic ones and
are checked by :func:`scan_field`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

FIELD_KINDS = ("constant", "affine", "bump", "gaussians")
PROFILE_KINDS = ("uniform", "linear", "quadratic")


def _vec(x, d, name):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != d:
        raise ConfigError(f"{name} must have length {d}")
    return v


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A positive function of position from one of the built-in families.

    Families and their ``params``:

    * ``constant``: ``value``
    * ``affine``: ``value + gradient . y`` with ``value``, ``gradient``
    * ``bump``: ``base + amplitude * (1 - |y-center|^2/width^2)_+^2``
    * ``gaussians``: ``base + sum_k amplitudes[k] exp(-|y-centers[k]|^2 / (2 scales[k]^2))``,
      clipped to ``bounds`` when they are declared
    """

    kind: str
    params: dict
    dim: int
    lower: float
    upper: float
    lipschitz: float
    lipschitz_declared: bool = False
    clip: tuple | None = None

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        p = self.params
        if self.kind == "constant":
            out = np.full(y.shape[:-1], float(p["value"]))
        elif self.kind == "affine":
            out = p["value"] + y @ p["gradient"]
        elif self.kind == "bump":
            s2 = np.sum((y - p["center"]) ** 2, axis=-1) / p["width"] ** 2
            out = p["base"] + p["amplitude"] * np.clip(1.0 - s2, 0.0, None) ** 2
        else:
            out = np.full(y.shape[:-1], float(p["base"]))
            for c, amp, sc in zip(p["centers"], p["amplitudes"], p["scales"]):
                out = out + amp * np.exp(-np.sum((y - c) ** 2, axis=-1) / (2 * sc * sc))
        if self.clip is not None:
            out = np.clip(out, *self.clip)
        return out

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"


def make_field(kind: str, params: dict, dim: int, box, bounds=None, lipschitz=None, name="field") -> ScalarField:
    """Build a field and derive its range and Lipschitz constant on ``box = (lo, hi)``."""
    if kind not in FIELD_KINDS:
        raise ConfigError(f"{name}.kind must be one of {FIELD_KINDS}, got {kind!r}")
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    p = dict(params)
    try:
        if kind == "constant":
            v = float(p["value"])
            lower = upper = v
            lip = 0.0
        elif kind == "affine":
            p["value"] = float(p["value"])
            p["gradient"] = _vec(p["gradient"], dim, f"{name}.params.gradient")
            corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(dim, -1).T
            vals = p["value"] + corners @ p["gradient"]
            lower, upper = float(vals.min()), float(vals.max())
            lip = float(np.linalg.norm(p["gradient"]))
        elif kind == "bump":
            p["base"] = float(p["base"])
            p["amplitude"] = float(p["amplitude"])
            p["width"] = float(p["width"])
            p["center"] = _vec(p["center"], dim, f"{name}.params.center")
            if p["width"] <= 0:
                raise ConfigError(f"{name}.params.width must be positive")
            lower = p["base"] + min(p["amplitude"], 0.0)
            upper = p["base"] + max(p["amplitude"], 0.0)
            # max of |d/ds amp (1 - s^2/w^2)^2| is at s = w / sqrt(3)
            lip = 8 * abs(p["amplitude"]) / (3 * math.sqrt(3) * p["width"])
        else:
            p["base"] = float(p["base"])
            p["centers"] = np.atleast_2d(np.asarray(p["centers"], dtype=float))
            p["amplitudes"] = np.atleast_1d(np.asarray(p["amplitudes"], dtype=float))
            p["scales"] = np.atleast_1d(np.asarray(p["scales"], dtype=float))
            k = p["amplitudes"].size
            if p["centers"].shape != (k, dim) or p["scales"].size != k:
                raise ConfigError(f"{name}.params: centers/amplitudes/scales lengths disagree")
            if np.any(p["scales"] <= 0):
                raise ConfigError(f"{name}.params.scales must be positive")
            lower = p["base"] + float(np.minimum(p["amplitudes"], 0).sum())
            upper = p["base"] + float(np.maximum(p["amplitudes"], 0).sum())
            lip = float(np.sum(np.abs(p["amplitudes"]) / (p["scales"] * math.sqrt(math.e))))
    except KeyError as exc:
        raise ConfigError(f"{name}.params.{exc.args[0]} is required for kind {kind!r}") from None
    clip = None
    if bounds is not None:
        b_lo, b_hi = (float(b) for b in bounds)
        if not b_lo <= b_hi:
            raise ConfigError(f"{name}.bounds must satisfy lower <= upper")
        if kind == "gaussians":
            clip = (b_lo, b_hi)
        lower, upper = b_lo, b_hi
    declared = lipschitz is not None
    if declared:
        lip = float(lipschitz)
    if lower <= 0:
        raise ConfigError(f"{name} must be bounded below by a positive constant (lower bound {lower})")
    return ScalarField(kind, p, dim, float(lower), float(upper), float(lip), declared, clip)


def constant_field(value: float, dim: int) -> ScalarField:
    return make_field("constant", {"value": value}, dim, (np.zeros(dim), np.ones(dim)))


@dataclass(frozen=True)
class FieldScan:
    """Result of checking declared bounds/Lipschitz constant on a grid."""

    observed_min: float
    observed_max: float
    observed_lipschitz: float
    bounds_ok: bool
    lipschitz_ok: bool
    step: float


def scan_field(fld: ScalarField, pts: np.ndarray, step: float, displacement=None, tol: float = 1e-9) -> FieldScan:
    """Grid check of ``lower <= fld <= upper`` and of the Lipschitz constant over neighbouring pairs."""
    vals = fld(pts)
    lip = 0.0
    if len(pts) > 1:
        from scipy.spatial import cKDTree

        tree = cKDTree(pts)
        pairs = tree.query_pairs(step * math.sqrt(pts.shape[1]) * 1.01, output_type="ndarray")
        if len(pairs):
            dv = pts[pairs[:, 1]] - pts[pairs[:, 0]] if displacement is None else displacement(pts[pairs[:, 0]], pts[pairs[:, 1]])
            dist = np.linalg.norm(dv, axis=-1)
            ok = dist > 0
            lip = float(np.max(np.abs(vals[pairs[ok, 1]] - vals[pairs[ok, 0]]) / dist[ok]))
    return FieldScan(
        float(vals.min()), float(vals.max()), lip,
        bool(vals.min() >= fld.lower - tol and vals.max() <= fld.upper + tol),
        bool(lip <= fld.lipschitz + tol),
        step,
    )


@dataclass(frozen=True, eq=False)
class Kernel:
    """Radial colonisation kernel ``c_z(u) = height(z) * profile(u)`` on ``[0, 1)``.

    Support is half-open: ``c_z(u) = 0`` for ``u >= 1``.
    """

    profile: str
    height: ScalarField
    c_max: float = field(default=0.0)

    def __post_init__(self):
        if self.profile not in PROFILE_KINDS:
            raise ConfigError(f"kernel.kind must be one of {PROFILE_KINDS}, got {self.profile!r}")
        if self.c_max == 0.0:
            object.__setattr__(self, "c_max", self.height.upper)
        elif self.c_max < self.height.upper:
            raise ConfigError("kernel.c_max is below the kernel's maximum height")

    def shape(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        inside = (u >= 0) & (u < 1)
        if self.profile == "uniform":
            s = np.ones_like(u)
        elif self.profile == "linear":
            s = 1.0 - u
        else:
            s = 1.0 - u * u
        return np.where(inside, s, 0.0)

    def __call__(self, z, u) -> np.ndarray:
        """``c_z(u)``; ``z`` broadcasts against ``u``'s leading shape."""
        return self.height(z) * self.shape(u)

    @property
    def position_independent(self) -> bool:
        return self.height.is_constant

    def moment(self, z, d: int, n: int = 64) -> np.ndarray:
        """``int_0^1 c_z(lam) lam^d dlam`` for each position in ``z``."""
        x, w = np.polynomial.legendre.leggauss(n)
        u = 0.5 * (x + 1.0)
        m = 0.5 * float(np.sum(w * self.shape(u) * u ** d))
        return self.height(z) * m
