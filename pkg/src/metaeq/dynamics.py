"""Deterministic dynamics: the equilibrium map, the discrete map, the ODE and its Jacobian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components

from .colonization import ColonizationFunction
from .errors import ConvergenceError, IntegrationError, NumericalError, PreconditionError
from .geometry import Ball
from .patches import PatchSet
from .perron import perron_eigenvalue

MONOTONE_SLACK = 1e-12


def _occupancy(ps: PatchSet, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (ps.n,):
        raise PreconditionError(f"occupancy must have shape ({ps.n},), got {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise PreconditionError("occupancy must lie in [0, 1]")
    return p


def En_apply(ps: PatchSet, f: ColonizationFunction, p) -> np.ndarray:
    """``E_n(p)_i = f(S_i(p)) / (e(z_i) + f(S_i(p)))``."""
    fs = f(ps.K @ _occupancy(ps, p))
    return fs / (ps.e + fs)


def theta_mask(ps: PatchSet, theta: Ball) -> np.ndarray:
    """Patches inside the closed ball ``theta``."""
    return ps.landscape.domain.distance(ps.locations, theta.center) <= theta.radius


def En_restricted_apply(ps: PatchSet, f: ColonizationFunction, p, theta: Ball | None, beta: float = 1.0) -> np.ndarray:
    """``E_{n,Theta,beta}``: pressure summed over sources in ``theta`` only, extinction scaled by ``beta``.

    ``theta = None`` means the whole habitat.
    """
    if beta < 1:
        raise PreconditionError("beta must be at least 1")
    p = _occupancy(ps, p)
    if theta is None:
        K = ps.K
    else:
        key = ("K_theta", tuple(theta.center), theta.radius)
        if key not in ps._cache:
            ps._cache[key] = ps.K_restricted(theta_mask(ps, theta))
        K = ps._cache[key]
    fs = f(K @ p)
    return fs / (beta * ps.e + fs)


@dataclass(frozen=True)
class FixedPoint:
    p: np.ndarray
    iterations: int
    last_step: float
    residual: float
    error_estimate: float


def largest_fixed_point(ps: PatchSet, f: ColonizationFunction, tol: float = 1e-10, max_iter: int = 1_000_000,
                        callback=None) -> FixedPoint:
    """Largest fixed point of ``E_n`` by iterating down from the all-ones vector.

    Iterates are checked to be componentwise nonincreasing (up to 1e-12).
    The loop stops once the sup-norm step is below ``tol`` and the geometric
    tail estimate ``step * rate / (1 - rate)`` is too, so the returned vector
    is within about ``tol`` of the limit and not only slowly moving.

    Args:
        callback: optional ``callback(k, p_prev, p_new)`` called every iteration.

    Raises:
        NumericalError: on a non-monotone step.
        ConvergenceError: when ``max_iter`` is exceeded.
    """
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    K = ps.K.toarray() if ps.n <= 256 else ps.K
    e = ps.e
    p = np.ones(ps.n)
    prev_step = np.inf
    for k in range(1, max_iter + 1):
        fs = f(K @ p)
        new = fs / (e + fs)
        diff = p - new
        if diff.min() < -MONOTONE_SLACK:
            i = int(np.argmin(diff))
            raise NumericalError("iterate increased", {"iteration": k, "patch": i, "increase": float(-diff[i])})
        new = np.minimum(new, p)
        if callback is not None:
            callback(k, p, new)
        step = float(diff.max())
        p = new
        rate = step / prev_step if prev_step > 0 else 0.0
        prev_step = step
        if step == 0.0:
            return FixedPoint(p, k, 0.0, 0.0, 0.0)
        if step < tol and rate < 1:
            est = step * rate / (1 - rate)
            if est < tol:
                return FixedPoint(p, k, step, _residual(ps, f, p), est)
    raise ConvergenceError("fixed-point iteration exceeded max_iter",
                           {"iterations": max_iter, "last_step": prev_step, "residual": _residual(ps, f, p)})


def _residual(ps, f, p):
    return float(np.max(np.abs(En_apply(ps, f, p) - p)))


@dataclass(frozen=True)
class StepResult:
    p: np.ndarray
    clamped: int


def discrete_step(ps: PatchSet, f: ColonizationFunction, p) -> StepResult:
    """``p' = p + f(S(p))(1 - p) - e p`` clamped to [0, 1]; ``clamped`` counts touched components.

    ``f(S_i) + e_i <= 1`` is not enforced.
    """
    p = _occupancy(ps, p)
    raw = p + f(ps.K @ p) * (1 - p) - ps.e * p
    out = np.clip(raw, 0.0, 1.0)
    return StepResult(out, int(np.count_nonzero(out != raw)))


def vector_field(ps: PatchSet, f: ColonizationFunction, p) -> np.ndarray:
    """Right-hand side ``f(S(p))(1 - p) - e p`` of the Levins ODE."""
    p = np.asarray(p, dtype=float)
    return f(ps.K @ p) * (1 - p) - ps.e * p


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    p: np.ndarray
    nfev: int
    max_excursion: float


def ode_integrate(ps: PatchSet, f: ColonizationFunction, p0, t_end: float, t_eval=None,
                  atol: float = 1e-9, rtol: float = 1e-9) -> Trajectory:
    """Integrate the Levins ODE with an adaptive explicit Runge-Kutta (Dormand-Prince 5(4)) scheme.

    ``max_excursion`` records how far the solution strays outside ``[0, 1]^n``.

    Raises:
        IntegrationError: when the step size underflows or the solver aborts.
    """
    p0 = _occupancy(ps, p0)
    if not t_end > 0:
        return Trajectory(np.zeros(1), p0[None, :].copy(), 0, 0.0)
    K, e = ps.K, ps.e

    def rhs(_, y):
        return f(K @ y) * (1 - y) - e * y

    sol = solve_ivp(rhs, (0.0, float(t_end)), p0, method="RK45", t_eval=t_eval, atol=atol, rtol=rtol)
    if sol.status != 0:
        raise IntegrationError(sol.message, {"t_reached": float(sol.t[-1]) if sol.t.size else 0.0})
    y = sol.y.T
    exc = float(max(0.0, -y.min(), y.max() - 1.0))
    return Trajectory(sol.t, y, int(sol.nfev), exc)


def jacobian(ps: PatchSet, f: ColonizationFunction, p, sparse: bool = False):
    """Jacobian of the Levins vector field.

    Diagonal ``-(f(S_i) + e_i)``, off-diagonal ``f'(S_i)(1 - p_i) K_ij``.
    """
    p = np.asarray(p, dtype=float)
    S = ps.K @ p
    J = sp.diags(f.derivative(S) * (1 - p)) @ ps.K - sp.diags(f(S) + ps.e)
    J = sp.csr_matrix(J)
    return J if sparse else J.toarray()


@dataclass(frozen=True)
class Sandwich:
    lam_lo: float
    lam_hi: float
    certified: bool
    shift: float


def leading_eigenvalue_metzler(J, shift: float, tol: float = 1e-10) -> tuple[float, bool]:
    """Leading eigenvalue of ``J`` via the Perron root of ``shift I + J``; flag is irreducibility."""
    M = sp.csr_matrix(J) + shift * sp.identity(J.shape[0], format="csr")
    if M.min() < 0:
        raise PreconditionError("shift too small: shifted matrix has negative entries")
    off = sp.csr_matrix(J) - sp.diags(sp.csr_matrix(J).diagonal())
    off.eliminate_zeros()
    ncomp, _ = connected_components(off, directed=True, connection="strong")
    res = perron_eigenvalue(M, tol=tol)
    return res.value - shift, ncomp == 1


def response_time_sandwich(ps: PatchSet, f: ColonizationFunction, p_lower, p_upper, tol: float = 1e-10) -> Sandwich:
    """``(lambda(J(p_upper)), lambda(J(p_lower)))`` which bracket ``lambda(J(p*))``.

    Uses a shift ``C5 > max_i f(S_i(p_upper)) + e_i`` so that ``C5 I + J`` is
    nonnegative for every ``p`` in the order interval. ``certified`` is False
    when either shifted matrix is not primitive.
    """
    lo, hi = np.asarray(p_lower, dtype=float), np.asarray(p_upper, dtype=float)
    if np.any(lo > hi):
        raise PreconditionError("p_lower must be componentwise <= p_upper")
    c5 = float(np.max(f(ps.K @ hi) + ps.e)) + 1.0
    lam_lo, ok_lo = leading_eigenvalue_metzler(jacobian(ps, f, hi, sparse=True), c5, tol)
    lam_hi, ok_hi = leading_eigenvalue_metzler(jacobian(ps, f, lo, sparse=True), c5, tol)
    return Sandwich(lam_lo, lam_hi, ok_lo and ok_hi, c5)
