"""Habitat geometry: axis-aligned boxes, unions of closed balls and periodic boxes.

All point arrays have shape ``(..., d)``. Membership tests are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``d`` dimensions (``d = 0`` gives 1)."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _lattice(lo, hi, step, include_end=True):
    axes = []
    for a, b in zip(lo, hi):
        k = max(int(math.ceil((b - a) / step - 1e-9)), 1)
        if include_end:
            axes.append(np.linspace(a, b, k + 1))
        else:
            axes.append(a + (b - a) * np.arange(k) / k)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def sphere_points(d: int, count: int) -> np.ndarray:
    """Roughly uniform deterministic points on the unit sphere in ``d`` dimensions."""
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        th = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    # Fibonacci lattice
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = np.pi * (1 + 5 ** 0.5) * k
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball ``B_x(t)``; used for the lower-bound region."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")


class Domain:
    """Common interface; subclasses implement exact membership and geometry."""

    kind = "abstract"
    periodic = False
    dim: int

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def displacement(self, z, y) -> np.ndarray:
        """Vector from ``z`` to ``y`` (minimum image on periodic domains)."""
        return np.asarray(y, dtype=float) - np.asarray(z, dtype=float)

    def distance(self, z, y) -> np.ndarray:
        return np.linalg.norm(self.displacement(z, y), axis=-1)

    def canonical(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float)

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def volume(self) -> float:
        raise NotImplementedError

    def contains_ball(self, ball: Ball) -> bool:
        raise NotImplementedError

    def grid(self, step: float) -> np.ndarray:
        """Lattice points of spacing ``step`` inside the domain, boundary included."""
        lo, hi = self.bounding_box
        pts = _lattice(lo, hi, step, include_end=not self.periodic)
        return pts[self.contains(pts)]

    def boundary_points(self, step: float) -> np.ndarray:
        return np.empty((0, self.dim))

    def check_point(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise DomainError(f"expected {self.dim}-dimensional positions, got shape {z.shape}")
        inside = self.contains(z)
        if not np.all(inside):
            bad = np.atleast_2d(z)[~np.atleast_1d(inside)][0]
            raise DomainError(f"position {bad.tolist()} lies outside the habitat")
        return self.canonical(z)


@dataclass(frozen=True, eq=False)
class Box(Domain):
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size not in (1, 2, 3):
            raise ConfigError("domain.lo and domain.hi must be vectors of equal length 1..3")
        if np.any(hi <= lo):
            raise DomainError("box has zero volume (need hi > lo in every coordinate)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    @property
    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains_ball(self, ball):
        return bool(np.all(ball.center - ball.radius >= self.lo) and np.all(ball.center + ball.radius <= self.hi))

    def boundary_points(self, step):
        pts = _lattice(self.lo, self.hi, step)
        on = np.any(np.isclose(pts, self.lo) | np.isclose(pts, self.hi), axis=-1)
        return pts[on]


@dataclass(frozen=True, eq=False)
class BallUnion(Domain):
    """Finite union of closed balls ``B_{x_i}(t_i)``."""

    centers: np.ndarray
    radii: np.ndarray
    kind: str = field(default="balls", init=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        t = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if c.shape[0] != t.size or c.shape[1] not in (1, 2, 3):
            raise ConfigError("domain.centers must list one d-vector per entry of domain.radii")
        if np.any(t <= 0):
            raise DomainError("ball radii must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", t)

    @property
    def dim(self):
        return self.centers.shape[1]

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        d = np.linalg.norm(pts[..., None, :] - self.centers, axis=-1)
        return np.any(d <= self.radii * (1 + 1e-12), axis=-1)

    @property
    def bounding_box(self):
        return (self.centers - self.radii[:, None]).min(0), (self.centers + self.radii[:, None]).max(0)

    @property
    def volume(self):
        if self.radii.size == 1:
            return unit_ball_volume(self.dim) * float(self.radii[0]) ** self.dim
        return _union_volume(self)

    def contains_ball(self, ball):
        gap = np.linalg.norm(self.centers - ball.center, axis=-1) + ball.radius
        if np.any(gap <= self.radii):
            return True
        # fall back to a dense check of the ball's boundary and interior
        step = ball.radius / 16
        probe = np.concatenate([
            ball.center + ball.radius * sphere_points(self.dim, 512),
            _lattice(ball.center - ball.radius, ball.center + ball.radius, step),
        ])
        probe = probe[np.linalg.norm(probe - ball.center, axis=-1) <= ball.radius]
        return bool(np.all(self.contains(probe)))

    def boundary_points(self, step):
        out = []
        for c, t in zip(self.centers, self.radii):
            count = max(int(2 * np.pi * t / step), 8) if self.dim == 2 else max(int(4 * np.pi * t * t / step ** 2), 32)
            pts = c + t * sphere_points(self.dim, count)
            # keep only points not strictly inside another ball
            d = np.linalg.norm(pts[:, None, :] - self.centers, axis=-1)
            interior = np.any(d < self.radii * (1 - 1e-9), axis=-1)
            out.append(pts[~interior])
        return np.concatenate(out) if out else np.empty((0, self.dim))

    def is_r_smooth(self, r: float) -> bool:
        return bool(np.all(self.radii >= r))


@dataclass(frozen=True, eq=False)
class Torus(Domain):
    """Periodic box ``[0, L_1) x ... x [0, L_d)`` with minimum-image distances."""

    side: np.ndarray
    kind: str = field(default="torus", init=False)
    periodic = True

    def __post_init__(self):
        s = np.asarray(self.side, dtype=float).reshape(-1)
        if s.size not in (1, 2, 3):
            raise ConfigError("domain.side must have length 1..3")
        if np.any(s <= 0):
            raise DomainError("torus has zero volume")
        object.__setattr__(self, "side", s)

    @property
    def dim(self):
        return self.side.size

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.all(np.isfinite(pts), axis=-1)

    def canonical(self, pts):
        return np.mod(np.asarray(pts, dtype=float), self.side)

    def displacement(self, z, y):
        dv = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return dv - self.side * np.round(dv / self.side)

    @property
    def bounding_box(self):
        return np.zeros(self.dim), self.side.copy()

    @property
    def volume(self):
        return float(np.prod(self.side))

    def contains_ball(self, ball):
        return bool(ball.radius < 0.5 * self.side.min())


def _union_volume(dom: BallUnion, nr: int = 200) -> float:
    # each ball integrated in polar form with weight 1/multiplicity
    from .quadrature import ball_rule

    offsets, weights = ball_rule(dom.dim, nr)
    total = 0.0
    for c, t in zip(dom.centers, dom.radii):
        y = c + t * offsets
        mult = np.sum(np.linalg.norm(y[:, None, :] - dom.centers, axis=-1) <= dom.radii, axis=-1)
        total += t ** dom.dim * float(np.sum(weights / np.maximum(mult, 1)))
    return total


def region_grid(domain: Domain, region: Ball | None, step: float) -> np.ndarray:
    """Grid points of a region (a ball or, for ``None``, the whole domain) plus its boundary."""
    if region is None:
        pts = np.concatenate([domain.grid(step), domain.boundary_points(step)])
        if pts.size == 0:
            raise DomainError("empty region")
        return pts
    c, t = region.center, region.radius
    if c.size != domain.dim:
        raise DomainError("region dimension does not match the habitat")
    lat = _lattice(c - t, c + t, step)
    lat = lat[np.linalg.norm(lat - c, axis=-1) <= t]
    count = 2 if domain.dim == 1 else max(int(2 * np.pi * t / step), 16) if domain.dim == 2 else max(int(4 * np.pi * (t / step) ** 2), 64)
    shell = c + t * sphere_points(domain.dim, count)
    pts = np.concatenate([c[None, :], lat, shell])
    if domain.periodic:
        return domain.canonical(pts)
    pts = pts[domain.contains(pts)]
    if pts.size == 0:
        raise DomainError("empty region")
    return pts
