"""Scalar local Levins equilibrium: the largest root of x = f(x rho) / (alpha e + f(x rho))."""
from __future__ import annotations

import numpy as np

from .colonization import ColonizationFunction

ROOT_TOL = 1e-12


def q_alpha(f: ColonizationFunction, rho, e, alpha=1.0, tol: float = ROOT_TOL) -> np.ndarray:
    """Vectorised largest root of ``x = f(x rho) / (alpha e + f(x rho))``.

    Works with the equivalent sign function ``h(x) = (1 - x) f(x rho) - alpha e x``,
    which is concave in ``x`` with ``h(0) = 0`` and ``h(1) < 0``. When
    ``f'(0) rho <= alpha e`` zero is the only root. Otherwise the positive
    root is bracketed from below by a point where ``h > 0`` and bisected to
    absolute width ``tol``.
    """
    rho, e, alpha = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, e, alpha)))
    shape = rho.shape
    rho, ae = rho.ravel(), (alpha * e).ravel()
    out = np.zeros(rho.shape)
    live = f.L_f * rho > ae
    if not np.any(live):
        return out.reshape(shape)
    rl, al = rho[live], ae[live]

    def h(x):
        return (1.0 - x) * f(x * rl) - al * x

    q_lin = 1.0 - al / (f.L_f * rl)
    lo = np.minimum(q_lin / 2, 1e-6)
    # walk down until h(lo) > 0; h'(0) > 0 guarantees this terminates
    for _ in range(1100):
        bad = h(lo) <= 0
        if not np.any(bad):
            break
        lo = np.where(bad, lo / 2, lo)
    hi = np.ones_like(lo)
    while True:
        if np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        pos = h(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    out[live] = 0.5 * (lo + hi)
    return out.reshape(shape)

