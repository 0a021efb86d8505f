"""Habitat landscape and the landscape-level constants consumed by the bounds.

``rho`` integrates ``a(y) r^-d c_z(|z-y|/r) sigma(y)`` over the habitat with a
polar Gauss-Legendre rule on ``B_z(r)`` and an exact membership indicator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .colonization import ColonizationFunction
from .errors import ConfigError, DomainError, PreconditionError
from .fields import Kernel, ScalarField, scan_field
from .geometry import Ball, BallUnion, Box, Domain, Torus, _lattice, region_grid, unit_ball_volume
from .levins import q_alpha
from .quadrature import ball_rule

_CHUNK_NODES = 1 << 21


@dataclass(frozen=True, eq=False)
class Landscape:
    """Habitat geometry plus the fields ``e``, ``a``, ``sigma`` and the kernel.

    Attributes:
        domain: habitat geometry.
        e, a, sigma: extinction rate, emigration weight and patch density.
        kernel: colonisation kernel.
        r: dispersal radius.
        L_rho: declared Lipschitz constant of ``rho`` (``None`` to estimate).
        quad_n: Gauss-Legendre nodes per polar axis for ``rho``.
        grid_step: spacing for grid minima and scans (default ``r / 8``).
    """

    domain: Domain
    e: ScalarField
    a: ScalarField
    sigma: ScalarField
    kernel: Kernel
    r: float
    L_rho: float | None = None
    quad_n: int = 64
    grid_step: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigError("r must be positive")
        for name in ("e", "a", "sigma"):
            if getattr(self, name).dim != self.dim:
                raise ConfigError(f"{name} has dimension {getattr(self, name).dim}, expected {self.dim}")
        if self.domain.periodic:
            if not self.homogeneous:
                raise ConfigError("torus habitats support constant e, a, sigma and kernel height only")
            if self.r >= 0.5 * float(np.min(self.domain.side)):
                raise ConfigError("r must be below half the torus side")
        if self.grid_step is None:
            object.__setattr__(self, "grid_step", self.r / 8)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def homogeneous(self) -> bool:
        return all(fld.is_constant for fld in (self.e, self.a, self.sigma, self.kernel.height))

    @property
    def A(self) -> float:
        """Normalising mass ``int_Omega sigma``."""
        if "A" not in self._cache:
            self._cache["A"] = _integrate(self.domain, self.sigma)
        return self._cache["A"]

    @property
    def v_d(self) -> float:
        return unit_ball_volume(self.dim)

    @property
    def rho_max(self) -> float:
        return self.a.upper * self.kernel.c_max * self.sigma.upper * self.v_d

    def c(self, z, y) -> np.ndarray:
        """``c(z, y; r) = r^-d c_z(|z - y| / r)``."""
        u = self.domain.distance(z, y) / self.r
        return self.kernel(z, u) / self.r ** self.dim

    def rho(self, z) -> np.ndarray:
        """Local colonisation intensity at each position in ``z`` (shape ``(..., d)``)."""
        z = self.domain.check_point(z)
        shape = z.shape[:-1]
        zf = z.reshape(-1, self.dim)
        if self.domain.periodic:
            # constant fields on a torus: the ball never meets a boundary
            val = self._interior_rho(zf[:1])[0]
            return np.full(shape, val)
        offsets, weights = ball_rule(self.dim, self.quad_n)
        u = np.linalg.norm(offsets, axis=-1)
        prof = self.kernel.shape(u) * weights
        out = np.empty(len(zf))
        step = max(1, _CHUNK_NODES // len(offsets))
        for s in range(0, len(zf), step):
            zc = zf[s:s + step]
            y = zc[:, None, :] + self.r * offsets[None, :, :]
            g = self.a(y) * self.sigma(y) * self.domain.contains(y)
            out[s:s + step] = self.kernel.height(zc) * (g @ prof)
        return out.reshape(shape)

    def _interior_rho(self, zf):
        offsets, weights = ball_rule(self.dim, self.quad_n)
        prof = self.kernel.shape(np.linalg.norm(offsets, axis=-1)) * weights
        y = zf[:, None, :] + self.r * offsets[None, :, :]
        return self.kernel.height(zf) * ((self.a(y) * self.sigma(y)) @ prof)

    def grid(self, region: Ball | None = None, step: float | None = None) -> np.ndarray:
        return region_grid(self.domain, region, step or self.grid_step)

    def check_region(self, region: Ball | None):
        if region is not None and not self.domain.contains_ball(region):
            raise DomainError("region is not contained in the habitat")

    def scan_fields(self, step: float | None = None) -> dict:
        """Grid check of declared bounds and Lipschitz constants for e, a, sigma."""
        step = step or self.grid_step
        pts = self.domain.grid(step)
        return {name: scan_field(getattr(self, name), pts, step, self.domain.displacement) for name in ("e", "a", "sigma")}


def _integrate(domain: Domain, fld: ScalarField, n: int = 64) -> float:
    if fld.is_constant:
        return float(fld.params["value"]) * domain.volume
    if isinstance(domain, BallUnion):
        offsets, weights = ball_rule(domain.dim, n)
        total = 0.0
        for c, t in zip(domain.centers, domain.radii):
            y = c + t * offsets
            mult = np.sum(np.linalg.norm(y[:, None, :] - domain.centers, axis=-1) <= domain.radii, axis=-1)
            total += t ** domain.dim * float(np.sum(weights * fld(y) / np.maximum(mult, 1)))
        return total
    lo, hi = domain.bounding_box
    x, w = np.polynomial.legendre.leggauss(n)
    axes = [0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(lo, hi)]
    wts = [0.5 * (b - a) * w for a, b in zip(lo, hi)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    ww = np.prod(np.stack([m.ravel() for m in np.meshgrid(*wts, indexing="ij")], axis=-1), axis=-1)
    return float(np.sum(ww * fld(pts)))


def estimate_L_rho(land: Landscape, grid_step: float | None = None, region: Ball | None = None) -> float:
    """Largest difference quotient of ``rho`` over neighbouring grid pairs."""
    from scipy.spatial import cKDTree

    step = grid_step or land.r / 8
    if not 0 < step < land.r / 4:
        raise PreconditionError("grid_step must lie in (0, r/4)")
    if land.domain.volume <= 0:
        raise DomainError("degenerate habitat")
    if land.domain.periodic:
        return 0.0
    pts = region_grid(land.domain, region, step) if region is not None else land.domain.grid(step)
    vals = land.rho(pts)
    pairs = cKDTree(pts).query_pairs(step * math.sqrt(land.dim) * 1.01, output_type="ndarray")
    if len(pairs) == 0:
        return 0.0
    dist = land.domain.distance(pts[pairs[:, 0]], pts[pairs[:, 1]])
    keep = dist > 0
    if not keep.any():
        return 0.0
    diff = np.abs(vals[pairs[keep, 1]] - vals[pairs[keep, 0]])
    return float(np.max(diff / dist[keep]))


def L_rho(land: Landscape) -> tuple[float, bool]:
    """Declared ``L_rho`` if given, otherwise a grid estimate. Second value is True when estimated."""
    if land.L_rho is not None:
        return float(land.L_rho), False
    if "L_rho" not in land._cache:
        land._cache["L_rho"] = 0.0 if land.homogeneous and land.domain.periodic else estimate_L_rho(land, land.r / 8)
    return land._cache["L_rho"], True


def q_field(land: Landscape, f: ColonizationFunction, pts, alpha=1.0) -> np.ndarray:
    """``q_alpha`` evaluated at the positions ``pts``."""
    return q_alpha(f, land.rho(pts), land.e(pts), alpha)


def eta(land: Landscape, f: ColonizationFunction, region: Ball | None = None, step: float | None = None) -> float:
    """Grid minimum of ``q_1`` over ``region`` (the whole habitat for ``None``)."""
    land.check_region(region)
    if land.homogeneous and land.domain.periodic:
        pts = land.domain.canonical(region.center[None, :] if region is not None else np.zeros((1, land.dim)))
    else:
        pts = land.grid(region, step)
    if len(pts) == 0:
        raise DomainError("empty region")
    return float(np.min(q_field(land, f, pts)))


def c_bar(land: Landscape, region: Ball | None = None, step: float | None = None) -> float:
    """Grid minimum of ``int_0^1 c_z(u) u^d du`` over ``region``."""
    land.check_region(region)
    pts = land.grid(region, step)
    return float(np.min(land.kernel.moment(pts, land.dim)))


def covering_number(land: Landscape | Domain, radius: float) -> int:
    """Upper estimate of the number of ``radius``-balls needed to cover the habitat.

    Counts lattice cells of side ``2 radius / sqrt(d)`` that meet the habitat;
    each such cell sits inside the ball of ``radius`` about its centre.
    """
    dom = land.domain if isinstance(land, Landscape) else land
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    d = dom.dim
    lo, hi = dom.bounding_box
    if np.linalg.norm(hi - lo) / 2 <= radius and not dom.periodic:
        return 1
    pitch = 2 * radius / math.sqrt(d)
    counts = np.maximum(np.ceil((hi - lo) / pitch - 1e-12).astype(int), 1)
    if isinstance(dom, (Box, Torus)):
        return int(np.prod(counts))
    cell = (hi - lo) / counts
    corners = lo + _lattice(np.zeros(d), counts - 1, 1.0) * cell
    near = np.clip(dom.centers[None, :, :], corners[:, None, :], corners[:, None, :] + cell)
    hit = np.linalg.norm(near - dom.centers[None, :, :], axis=-1) <= dom.radii
    return int(np.sum(np.any(hit, axis=-1)))


def small_ball_min_mass(land: Landscape, radius: float, step: float | None = None) -> float:
    """Grid minimum over ``z`` of ``A^-1 int_Omega 1(|y - z| <= radius) sigma(y) dy``."""
    if land.domain.periodic:
        return float(land.sigma.upper * land.v_d * radius ** land.dim / land.A)
    offsets, weights = ball_rule(land.dim, land.quad_n)
    pts = land.grid(None, step)
    out = np.empty(len(pts))
    chunk = max(1, _CHUNK_NODES // len(offsets))
    for s in range(0, len(pts), chunk):
        y = pts[s:s + chunk, None, :] + radius * offsets[None, :, :]
        out[s:s + chunk] = (land.sigma(y) * land.domain.contains(y)) @ weights
    return float(np.min(out) * radius ** land.dim / land.A)


def lens_constant(d: int) -> float:
    """Volume of ``B_z(1/3) cap B_x(1)`` with ``|z - x| = 1``.

    This is the smallest mass a ball of radius ``r/3`` about a habitat point
    can see in a union of balls of radius at least ``r``, in units of ``r^d``.
    """
    rs, R, D = 1.0 / 3.0, 1.0, 1.0
    if d == 1:
        return rs
    if d == 2:
        a1 = rs * rs * math.acos((D * D + rs * rs - R * R) / (2 * D * rs))
        a2 = R * R * math.acos((D * D + R * R - rs * rs) / (2 * D * R))
        a3 = 0.5 * math.sqrt((-D + rs + R) * (D + rs - R) * (D - rs + R) * (D + rs + R))
        return a1 + a2 - a3
    if d == 3:
        return math.pi * (R + rs - D) ** 2 * (D * D + 2 * D * rs - 3 * rs * rs + 2 * D * R + 6 * rs * R - 3 * R * R) / (12 * D)
    raise ValueError(f"unsupported dimension {d}")


@dataclass(frozen=True)
class SmoothExponent:
    grid_value: float
    analytic_bound: float
    c_d: float
    step: float


def r_smooth_exponent(land: Landscape, n: int, r: float | None = None, A: float | None = None,
                      step: float | None = None) -> SmoothExponent:
    """``n min_z A^-1 int 1(|y-z| <= r/3) sigma`` on a grid, with its analytic lower bound."""
    r = land.r if r is None else r
    A = land.A if A is None else A
    dom = land.domain
    if isinstance(dom, Box):
        raise PreconditionError("r-smooth exponent needs a union-of-balls or periodic habitat")
    if isinstance(dom, BallUnion) and not dom.is_r_smooth(r):
        raise PreconditionError(f"habitat is not r-smooth: smallest ball radius {dom.radii.min()} < r = {r}")
    step = step or r / 8
    scale = land.A / A
    value = n * small_ball_min_mass(land, r / 3, step) * scale
    c_d = lens_constant(land.dim) if not dom.periodic else land.v_d / 3 ** land.dim
    return SmoothExponent(value, c_d * land.sigma.lower * n * r ** land.dim / A, c_d, step)


@dataclass(frozen=True)
class LandscapeConstants:
    rho_max: float
    L_rho: float
    L_rho_estimated: bool
    L_q: float
    C2: float
    C3: float
    v_d: float
    v_dminus1: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def landscape_constants(land: Landscape, f: ColonizationFunction) -> LandscapeConstants:
    d = land.dim
    v_d, v_dm1 = unit_ball_volume(d), unit_ball_volume(d - 1)
    c_max = land.kernel.c_max
    lr, est = L_rho(land)
    L_q = math.sqrt(d) / land.e.lower * (2 * f.L_f * lr + land.e.lipschitz)
    C2 = 1.0 / (3 * c_max ** 2 * land.sigma.upper * v_d)
    C3 = v_d * c_max * (land.a.upper * land.sigma.lipschitz + land.sigma.upper * land.a.lipschitz)
    return LandscapeConstants(land.rho_max, lr, est, L_q, C2, C3, v_d, v_dm1)
