"""Upper and lower approximations of the equilibrium built from the local Levins root q_alpha.

Provides the bracketing functions ``p_plus`` and ``p_minus``, the constants
they depend on, checklists for every hypothesis inequality (with margins),
parameter recipes, and the probability guarantees as explicit formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .colonization import ColonizationFunction
from .errors import ConfigError, DomainError, NotApplicable, PreconditionError
from .geometry import Ball
from .landscape import (Landscape, LandscapeConstants, c_bar, covering_number, eta, landscape_constants,
                        q_field, r_smooth_exponent, small_ball_min_mass)
from .levins import q_alpha


@dataclass(frozen=True)
class BoundSpec:
    """Region ``Theta = B_x(t)`` and the tuning parameters of the two bounds.

    ``m``, ``theta1`` and ``theta2`` are optional; when absent, ``m`` comes
    from the closed-form choice and the thetas from the proof recipes.
    """

    center: tuple
    t: float
    alpha1: float
    alpha2: float
    beta: float
    beta_prime: float
    m: float | None = None
    theta1: float | None = None
    theta2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.t > 0:
            raise ConfigError("bounds.t must be positive")
        if not 0.5 < self.alpha2 <= self.alpha1 < 1:
            raise ConfigError(f"need 1/2 < alpha2 <= alpha1 < 1, got alpha1 = {self.alpha1}, alpha2 = {self.alpha2}")
        if not 1 < self.beta < self.beta_prime:
            raise ConfigError(f"need 1 < beta < beta_prime, got beta = {self.beta}, beta_prime = {self.beta_prime}")
        if self.m is not None and not self.m > 0:
            raise ConfigError("bounds.m must be positive")
        if self.theta1 is not None and not self.theta1 > 1:
            raise ConfigError("bounds.theta1 must exceed 1")
        if self.theta2 is not None and not 0 < self.theta2 < 1:
            raise ConfigError("bounds.theta2 must lie in (0, 1)")

    @property
    def theta(self) -> Ball:
        return Ball(np.asarray(self.center), self.t)

    def replace(self, **kw) -> "BoundSpec":
        d = dict(self.__dict__)
        d.update(kw)
        return BoundSpec(**d)


def solve_q_alpha(land: Landscape, f: ColonizationFunction, z, alpha: float = 1.0):
    """Largest root of ``x = f(x rho(z)) / (alpha e(z) + f(x rho(z)))`` at each position."""
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    out = q_field(land, f, z, alpha)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class Derived:
    """Region-dependent constants for one landscape, ``f`` and spec."""

    const: LandscapeConstants
    eta_theta: float
    eta_omega: float
    c_bar: float
    C4: float
    m: float
    e_min: float
    e_max: float
    a_min: float
    a_max: float
    sigma_min: float
    sigma_max: float
    c_max: float
    L_f: float
    C1: float
    r: float
    d: int
    A: float


def _cached(land, key, fn):
    if key not in land._cache:
        land._cache[key] = fn()
    return land._cache[key]


def eta_theta(land: Landscape, f: ColonizationFunction, theta: Ball | None) -> float:
    key = ("eta", f, None if theta is None else (tuple(theta.center), theta.radius))
    return _cached(land, key, lambda: eta(land, f, theta))


def c_bar_theta(land: Landscape, theta: Ball | None) -> float:
    key = ("c_bar", None if theta is None else (tuple(theta.center), theta.radius))
    return _cached(land, key, lambda: c_bar(land, theta))


def constant_C4(land: Landscape, f: ColonizationFunction, region: Ball | None = None, cbar: float | None = None) -> float:
    """``(1 ^ f(a_min s_min) / (2^((d+1)/2) e_max)) (cbar/(4 c_max) ^ 1/sqrt2) e_min^2 / (32 L_f rho_max^2 (C1 rho_max + L_f))``."""
    if cbar is None:
        land.check_region(region)
        cbar = c_bar_theta(land, region)
    d = land.dim
    rho_max = land.rho_max
    first = min(1.0, float(f(land.a.lower * land.sigma.lower)) / (2 ** ((d + 1) / 2) * land.e.upper))
    second = min(cbar / (4 * land.kernel.c_max), 1 / math.sqrt(2))
    return first * second * land.e.lower ** 2 / (32 * f.L_f * rho_max ** 2 * (f.C1 * rho_max + f.L_f))


def theorem_m(e_min: float, eta_theta: float, beta_gap: float, r: float, rho_max: float, L_f: float, C1: float) -> float:
    """``m = e_min^2 eta (beta' - beta) / (4 r rho_max^2 L_f (C1 rho_max + L_f))``."""
    if not beta_gap > 0:
        raise PreconditionError("beta_prime must exceed beta")
    if not eta_theta > 0:
        raise PreconditionError("eta_Theta must be positive")
    return e_min ** 2 * eta_theta * beta_gap / (4 * r * rho_max ** 2 * L_f * (C1 * rho_max + L_f))


def derive(land: Landscape, f: ColonizationFunction, spec: BoundSpec) -> Derived:
    theta = spec.theta
    land.check_region(theta)
    const = landscape_constants(land, f)
    et = eta_theta(land, f, theta)
    eo = eta_theta(land, f, None)
    cb = c_bar_theta(land, theta)
    C4 = constant_C4(land, f, cbar=cb)
    if spec.m is not None:
        m = spec.m
    elif et > 0:
        m = theorem_m(land.e.lower, et, spec.beta_prime - spec.beta, land.r, land.rho_max, f.L_f, f.C1)
    else:
        m = float("nan")
    return Derived(const, et, eo, cb, C4, m, land.e.lower, land.e.upper, land.a.lower, land.a.upper,
                   land.sigma.lower, land.sigma.upper, land.kernel.c_max, f.L_f, f.C1, land.r, land.dim, land.A)


# ---------------------------------------------------------------- bracketing functions

class QGrid:
    """``q_alpha`` tabulated on a regular lattice over the habitat's bounding box with linear interpolation.

    ``error_budget = L_q * step`` is the interpolation tolerance implied by
    the Lipschitz constant of ``q``.
    """

    def __init__(self, land: Landscape, f: ColonizationFunction, alpha: float, step: float | None = None):
        self.land, self.f, self.alpha = land, f, alpha
        self.step = step or land.r / 8
        self.constant = land.homogeneous and land.domain.periodic
        if self.constant:
            self.value = float(q_field(land, f, np.zeros((1, land.dim)), alpha)[0])
            self.error_budget = 0.0
            return
        lo, hi = land.domain.bounding_box
        axes = [np.linspace(a, b, max(int(math.ceil((b - a) / self.step)), 1) + 1) for a, b in zip(lo, hi)]
        pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
        vals = _q_unchecked(land, f, pts, alpha).reshape([len(a) for a in axes])
        self.interp = RegularGridInterpolator(axes, vals, method="linear", bounds_error=False, fill_value=None)
        self.error_budget = landscape_constants(land, f).L_q * self.step

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.constant:
            return np.full(z.shape[:-1], self.value)
        return np.clip(self.interp(z.reshape(-1, self.land.dim)).reshape(z.shape[:-1]), 0.0, 1.0)


def _q_unchecked(land, f, pts, alpha):
    # rho from its integral formula at any point of the bounding box (no membership check)
    from .quadrature import ball_rule

    offsets, weights = ball_rule(land.dim, land.quad_n)
    prof = land.kernel.shape(np.linalg.norm(offsets, axis=-1)) * weights
    out = np.empty(len(pts))
    chunk = max(1, (1 << 21) // len(offsets))
    for s in range(0, len(pts), chunk):
        zc = pts[s:s + chunk]
        y = zc[:, None, :] + land.r * offsets[None, :, :]
        if land.domain.periodic:
            y = land.domain.canonical(y)
        g = land.a(y) * land.sigma(y) * land.domain.contains(y)
        out[s:s + chunk] = land.kernel.height(zc) * (g @ prof)
    return q_alpha(f, out, land.e(pts), alpha)


class UpperBound:
    """``p_plus(z) = q_alpha1(z) v (1 - alpha2)``."""

    def __init__(self, land, f, spec: BoundSpec, memoize: bool = True, step: float | None = None):
        self.land, self.f, self.spec = land, f, spec
        self.grid = QGrid(land, f, spec.alpha1, step) if memoize else None

    @property
    def error_budget(self) -> float:
        return 0.0 if self.grid is None else self.grid.error_budget

    def q(self, z) -> np.ndarray:
        if self.grid is not None:
            return self.grid(z)
        return q_field(self.land, self.f, z, self.spec.alpha1)

    def __call__(self, z) -> np.ndarray:
        return np.maximum(self.q(z), 1 - self.spec.alpha2)


def upper_bound_fn(land: Landscape, f: ColonizationFunction, spec: BoundSpec, memoize: bool = True,
                   step: float | None = None) -> UpperBound:
    return UpperBound(land, f, spec, memoize, step)


class LowerBound:
    """``p_minus(z) = min(m (t - |z - x|), q_beta'(z))`` on ``Theta = B_x(t)``."""

    def __init__(self, land, f, spec: BoundSpec, m: float):
        self.land, self.f, self.spec, self.m = land, f, spec, m

    def boundary_distance(self, z) -> np.ndarray:
        return self.spec.t - self.land.domain.distance(z, np.asarray(self.spec.center))

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        dist = self.boundary_distance(z)
        if np.any(dist < -1e-12):
            raise DomainError("lower bound is only defined on Theta")
        qb = q_field(self.land, self.f, z, self.spec.beta_prime)
        return np.minimum(self.m * np.clip(dist, 0.0, None), qb)


def lower_bound_fn(land: Landscape, f: ColonizationFunction, spec: BoundSpec) -> LowerBound:
    dv = derive(land, f, spec)
    if not dv.eta_theta > 0:
        raise PreconditionError("eta_Theta must be positive for the lower bound")
    return LowerBound(land, f, spec, dv.m)


# ---------------------------------------------------------------- checklists

@dataclass(frozen=True)
class CheckItem:
    """One inequality ``lhs <= rhs`` (or ``lhs > rhs`` when ``strict_greater``)."""

    name: str
    lhs: float
    rhs: float
    passed: bool
    margin: float
    info: bool = False


# relative slack so that inequalities holding with equality by construction are not lost to rounding
RTOL = 1e-9


def _le(name, lhs, rhs, info=False):
    lhs, rhs = float(lhs), float(rhs)
    return CheckItem(name, lhs, rhs, bool(lhs <= rhs + RTOL * max(abs(lhs), abs(rhs))), rhs - lhs, info)


def _lt(name, lhs, rhs, info=False):
    lhs, rhs = float(lhs), float(rhs)
    return CheckItem(name, lhs, rhs, bool(lhs < rhs), rhs - lhs, info)


@dataclass
class Checklist:
    items: list = field(default_factory=list)
    branch: str | None = None
    params: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(it.passed for it in self.items if not it.info)

    def failed(self) -> list[str]:
        return [it.name for it in self.items if not it.info and not it.passed]

    def __getitem__(self, name) -> CheckItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def names(self) -> list[str]:
        return [it.name for it in self.items]


def check_ub_hypotheses(land: Landscape, f: ColonizationFunction, spec: BoundSpec, n: int) -> Checklist:
    """``2 L_f L_q r rho_max <= e_min (1 - a1)(a1 eta_Omega v (1 - a2))``, ``n > 2 N(Omega, r/3)`` and the branch."""
    dv = derive(land, f, spec)
    c = dv.const
    a1, a2 = spec.alpha1, spec.alpha2
    items = [
        _le("UB:ineq1", 2 * f.L_f * c.L_q * land.r * c.rho_max, dv.e_min * (1 - a1) * max(a1 * dv.eta_omega, 1 - a2)),
        _lt("n>2N(Omega,r/3)", 2 * covering_number(land, land.r / 3), n),
    ]
    kappa = f.L_f * c.rho_max / dv.e_min
    branch = "viable" if kappa > 0.5 else "nowhere-viable"
    items.append(CheckItem("viability:L_f*rho_max/e_min>1/2", kappa, 0.5, kappa > 0.5, kappa - 0.5, info=True))
    return Checklist(items, branch, {"eta_Omega": dv.eta_omega, "L_q": c.L_q, "L_rho_estimated": c.L_rho_estimated})


def sufficient_lb_items(dv: Derived, beta: float, beta_prime: float, theta1: float, theta2: float, m: float,
                   t: float, suffix: str) -> list[CheckItem]:
    """The five sufficient inequalities for a lower bound with the given parameters."""
    c = dv.const
    r, et = dv.r, dv.eta_theta
    rho = c.rho_max
    mr = m * r
    s = f":{suffix}" if suffix else ""
    return [
        _le("L0" + s, (1 + theta1) * mr, beta_prime * et + 1 - beta_prime),
        _le("L1" + s, dv.L_f * rho * max(m, c.L_q) * r, (beta_prime - beta) * dv.e_min * theta1 * mr),
        _le("L2" + s, dv.L_f * (c.C3 + rho / t) * r / theta2 + rho * (dv.C1 * rho + dv.L_f) * theta1 * mr,
            dv.e_min * (beta * et + 1 - beta)),
        _le("theta2" + s, r / t, min(theta2, 1 / (2 * (2 + theta1)))),
        _le("theta2c" + s, (c.C3 + rho / t) * r,
            dv.a_min * c.v_dminus1 * dv.sigma_min * (dv.c_bar - 2 * dv.c_max * theta2) * (1 - theta2 ** 2) ** ((dv.d - 1) / 2)),
    ]


def recipes(dv: Derived, beta: float, beta_prime: float) -> dict:
    """Parameter choices of the uniform and local lower-bound arguments."""
    et, rho, e_min = dv.eta_theta, dv.const.rho_max, dv.e_min
    theta2 = min(dv.c_bar / (4 * dv.c_max), 1 / math.sqrt(2))
    denom = dv.L_f * rho ** 2 * (dv.C1 * rho + dv.L_f)
    uniform = {
        "beta_prime": 1 / (2 * (1 - et)) + beta / 2 if et < 1 else math.inf,
        "theta1": 4 * dv.L_f * rho / (et * e_min),
        "m": et ** 2 * e_min ** 2 / (32 * denom) / dv.r,
        "theta2": theta2,
    }
    local = {
        "beta_prime": beta_prime,
        "theta1": dv.L_f * rho / (e_min * (beta_prime - beta)),
        "m": e_min ** 2 * et * (beta_prime - beta) / (4 * denom) / dv.r,
        "theta2": theta2,
    }
    return {"uniform": uniform, "local": local}


def check_lb_hypotheses(land: Landscape, f: ColonizationFunction, spec: BoundSpec) -> Checklist:
    """Every lower-bound inequality with margins, plus the recipe parameters they imply.

    The top-level inequalities come first; the five sufficient
    inequalities are then evaluated under the uniform recipe, the local
    recipe and, when the spec supplies ``theta1``/``theta2``/``m``, the spec's own values.
    """
    dv = derive(land, f, spec)
    c = dv.const
    et, r, t = dv.eta_theta, land.r, spec.t
    beta, bp = spec.beta, spec.beta_prime
    rho, e_min, L_f, C1 = c.rho_max, dv.e_min, f.L_f, f.C1
    denom = L_f * rho ** 2 * (C1 * rho + L_f)
    theta2 = min(dv.c_bar / (4 * dv.c_max), 1 / math.sqrt(2))
    items = [
        _lt("eta_Theta>0", 0.0, et),
        _lt("beta_prime<1+eta_Theta/2", bp, 1 + et / 2),
        CheckItem("viability:L_f*rho_max/e_min>1/2", L_f * rho / e_min, 0.5, L_f * rho / e_min > 0.5,
                  L_f * rho / e_min - 0.5),
        _le("ULB:ineq1", c.L_q * r, et ** 2 * e_min ** 2 / (32 * denom)),
        _le("ULB:ineq2", r / t, min(theta2, et * e_min / (8 * L_f * rho + 4 * et * e_min))),
        _le("ULB:ineq3", (c.C3 + rho / t) * r,
            min(dv.a_min * dv.sigma_min * dv.c_bar * c.v_dminus1 * 2 ** (-(dv.d + 3) / 2),
                et * e_min / (4 * L_f) * theta2)),
        _le("localLB:ineq1", c.L_q * r, e_min ** 2 * et * (bp - beta) / (4 * denom)),
        _le("localLB:ineq2", r / t, e_min * (bp - beta) / (6 * L_f * rho)),
    ]
    params = {"eta_Theta": et, "c_bar": dv.c_bar, "C4": dv.C4, "m": dv.m}
    if et > 0:
        rec = recipes(dv, beta, bp)
        for name, p in rec.items():
            items += sufficient_lb_items(dv, beta, p["beta_prime"], p["theta1"], p["theta2"], p["m"], t, name)
            params.update({f"{name}.{k}": v for k, v in p.items()})
        if spec.theta1 is not None or spec.theta2 is not None or spec.m is not None:
            loc = rec["local"]
            items += sufficient_lb_items(dv, beta, bp, spec.theta1 or loc["theta1"], spec.theta2 or loc["theta2"],
                                    spec.m or loc["m"], t, "spec")
    return Checklist(items, None, params)


# ---------------------------------------------------------------- probability bounds

@dataclass(frozen=True)
class ProbabilityBound:
    """A probability guarantee, unclamped; ``vacuous`` when it is not positive."""

    value: float
    vacuous: bool
    terms: dict
    alt_value: float | None = None


def _second_term_exponent(land: Landscape, n: int) -> tuple[float, str]:
    # n min_z A^-1 int 1(|y-z| <= r/3) sigma on a grid; analytic bound when r-smooth
    try:
        se = r_smooth_exponent(land, n)
        return se.grid_value, "grid"
    except PreconditionError:
        return n * small_ball_min_mass(land, land.r / 3), "grid"


def ub_probability_bound(land: Landscape, f: ColonizationFunction, spec: BoundSpec, n: int) -> ProbabilityBound:
    """Upper-bound guarantee for the branch selected by ``L_f rho_max / e_min``.

    ``alt_value`` replaces the ``n/2`` prefactor of the covering term by ``N(Omega, r/3)``.
    """
    dv = derive(land, f, spec)
    c = dv.const
    M = (n - 1) * land.r ** land.dim / land.A
    kappa = f.L_f * c.rho_max / dv.e_min
    if kappa > 0.5:
        inner = dv.e_min ** 2 * (1 - spec.alpha1) ** 2 / (16 * dv.a_max ** 2 * f.L_f ** 2)
        branch = "viable"
    else:
        inner = (c.rho_max / (2 * dv.a_max)) ** 2
        branch = "nowhere-viable"
    first = 2 * n * math.exp(-c.C2 * M * inner)
    expo, _ = _second_term_exponent(land, n)
    second = n / 2 * math.exp(-expo)
    N = covering_number(land, land.r / 3)
    value = 1 - first - second
    alt = 1 - first - N * math.exp(-expo)
    return ProbabilityBound(value, value <= 0, {"branch": branch, "first": first, "second": second,
                                                 "exponent": expo, "covering": N}, alt)


def lb_probability_bound(land: Landscape, f: ColonizationFunction, spec: BoundSpec, n: int) -> ProbabilityBound:
    """``1 - 2n exp(-C2 ((n-1) r^d / A) C4^2 e_min^2 eta^4 (beta - 1)^2 / (a_max^2 L_f^2))``."""
    dv = derive(land, f, spec)
    if not dv.eta_theta > 0:
        raise NotApplicable("eta_Theta must be positive")
    M = (n - 1) * land.r ** land.dim / land.A
    expo = dv.const.C2 * M * dv.C4 ** 2 * dv.e_min ** 2 * dv.eta_theta ** 4 * (spec.beta - 1) ** 2 / (dv.a_max ** 2 * f.L_f ** 2)
    first = 2 * n * math.exp(-expo)
    value = 1 - first
    return ProbabilityBound(value, value <= 0, {"first": first, "exponent": expo})


def two_sided_accuracy(alpha1: float, beta_prime: float) -> float:
    """``(beta' - alpha1) / alpha1``."""
    return (beta_prime - alpha1) / alpha1


@dataclass(frozen=True)
class TwoSided:
    inner: Ball
    accuracy: float
    probability: ProbabilityBound
    m: float


def two_sided_bound(land: Landscape, f: ColonizationFunction, spec: BoundSpec, n: int,
                    alpha2_tol: float = 1e-9) -> TwoSided:
    """Inner region ``Theta_m``, the accuracy radius and the combined probability.

    Raises:
        NotApplicable: when ``t <= r + 1/m``.
        PreconditionError: when ``alpha2 != 1 - eta_Theta`` or ``alpha2 >= alpha1``.
    """
    dv = derive(land, f, spec)
    if abs(spec.alpha2 - (1 - dv.eta_theta)) > alpha2_tol:
        raise PreconditionError(f"two-sided bound needs alpha2 = 1 - eta_Theta = {1 - dv.eta_theta}")
    if not spec.alpha2 < spec.alpha1:
        raise PreconditionError("two-sided bound needs alpha2 < alpha1")
    m = dv.m
    if not spec.t > land.r + 1 / m:
        raise NotApplicable(f"needs t > r + 1/m = {land.r + 1 / m}")
    c = dv.const
    M = (n - 1) * land.r ** land.dim / land.A
    inner = min(dv.C4 ** 2 * dv.eta_theta ** 4 * (spec.beta - 1) ** 2, (1 - spec.alpha1) ** 2 / 16)
    first = 4 * n * math.exp(-c.C2 * M * dv.e_min ** 2 / (dv.a_max ** 2 * f.L_f ** 2) * inner)
    try:
        expo = r_smooth_exponent(land, n).analytic_bound
        src = "analytic"
    except PreconditionError:
        expo, src = _second_term_exponent(land, n)
    second = n / 2 * math.exp(-expo)
    value = 1 - first - second
    prob = ProbabilityBound(value, value <= 0, {"first": first, "second": second, "exponent": expo, "exponent_source": src})
    return TwoSided(Ball(np.asarray(spec.center), spec.t - 1 / m), two_sided_accuracy(spec.alpha1, spec.beta_prime), prob, m)


# ---------------------------------------------------------------- scaling schedule

@dataclass(frozen=True)
class ScheduleEntry:
    n: int
    r: float
    phi: float
    scale: float
    alpha1: float
    alpha2: float
    beta: float
    beta_prime: float
    m: float
    M: float
    eta: float
    excluded_width: float
    checks: dict


def phi_value(rule: str, n: int) -> float:
    """``log`` gives ``log n``; ``loglog`` gives ``log log n``; ``power:k`` gives ``n^k``; ``k*log`` scales ``log n``."""
    rule = rule.strip()
    if rule == "log":
        return math.log(n)
    if rule == "loglog":
        return math.log(math.log(n))
    if rule.startswith("power:"):
        return n ** float(rule.split(":", 1)[1])
    if rule.endswith("*log"):
        return float(rule[:-4]) * math.log(n)
    raise ConfigError(f"unknown phi rule {rule!r}; use log, loglog, power:k or c*log")


def corollary2_schedule(land: Landscape, f: ColonizationFunction, n_sequence, gamma1: float, gamma2: float,
                        c1: float, c2: float, phi_rule: str = "log", r_scale: float = 1.0,
                        r_exponent: float | None = None, K2: float = 1.0) -> list[ScheduleEntry]:
    """Per-``n`` parameters following the scaling argument.

    ``r_n = r_scale * n^(-r_exponent)`` (default exponent ``1/(2d)``),
    ``1 - alpha2 = eta``, ``1 - alpha1 = beta - 1 = beta' - beta = r_n^(1-gamma1) phi_n``.
    Every validity predicate is evaluated and reported per ``n`` rather than raised.
    """
    if not 0 <= gamma1 < 0.5:
        raise ConfigError("gamma1 must lie in [0, 1/2)")
    ns = [int(n) for n in n_sequence]
    if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("n_sequence must be strictly increasing")
    d = land.dim
    expo = 1 / (2 * d) if r_exponent is None else r_exponent
    out = []
    prev_decay = None
    for n in ns:
        r = r_scale * n ** (-expo)
        phi = phi_value(phi_rule, n)
        lan = land_with_r(land, r)
        et = eta_theta(lan, f, None)
        s = r ** (1 - gamma1) * phi
        a1, a2 = 1 - s, 1 - et
        beta, bp = 1 + s, 1 + 2 * s
        M = n * r ** d / lan.A
        try:
            m = theorem_m(lan.e.lower, et, bp - beta, r, lan.rho_max, f.L_f, f.C1)
        except PreconditionError:
            m = float("nan")
        decay = r ** (1 - 2 * gamma1) * phi
        checks = {
            "cor2-1": bool(r ** (2 * (1 + gamma1)) * phi ** 2 * M >= c2 * math.log(n) ** (1 + gamma2)),
            "eta>=c1*r^gamma1": bool(et >= c1 * r ** gamma1),
            "alpha1>=alpha2": bool(a1 >= a2),
            "alpha1>1/2": bool(a1 > 0.5),
            "beta_prime-1<=eta/2": bool(bp - 1 <= et / 2),
            "r^(1-2gamma1)*phi decreasing": bool(prev_decay is None or decay < prev_decay),
        }
        prev_decay = decay
        out.append(ScheduleEntry(n, r, phi, s, a1, a2, beta, bp, m, M, et, K2 / phi, checks))
    return out


def land_with_r(land: Landscape, r: float) -> Landscape:
    """Copy of ``land`` with a different dispersal radius (and default grid step)."""
    return Landscape(land.domain, land.e, land.a, land.sigma, land.kernel, r, land.L_rho, land.quad_n, None)
