"""Leading eigenvalue of nonnegative matrices by power iteration.

Stopping uses the Collatz-Wielandt bracket
``min_i (Mx)_i / x_i <= lambda <= max_i (Mx)_i / x_i`` for positive ``x``, so a
converged value comes with a certificate rather than a step-size heuristic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError


@dataclass(frozen=True)
class PerronResult:
    value: float
    vector: np.ndarray
    lower: float
    upper: float
    iterations: int
    shift: float
    method: str


def _cw_bounds(M, x):
    if not np.all(x > 0):
        return -np.inf, np.inf
    ratio = (M @ x) / x
    return float(ratio.min()), float(ratio.max())


def _power(M, shift, tol, max_iter):
    n = M.shape[0]
    x = np.ones(n) / n
    lo, hi = -np.inf, np.inf
    for k in range(1, max_iter + 1):
        y = M @ x + shift * x
        s = y.sum()
        if s <= 0:
            return None, 0.0, 0.0, k
        x = y / s
        if k % 8 == 0 or k == max_iter:
            lo, hi = _cw_bounds(M, x)
            if hi - lo <= tol * max(abs(hi), 1.0):
                return x, lo, hi, k
    return None, lo, hi, max_iter


def perron_eigenvalue(M, tol: float = 1e-10, max_iter: int = 20000, restarts: int = 2,
                      sym_scale: np.ndarray | None = None) -> PerronResult:
    """Perron root of a nonnegative square matrix (dense or sparse).

    The matrix is split into strongly connected blocks and the largest block
    root is returned, so reducible inputs are handled. Within a block plain
    power iteration from the all-ones vector is tried first. Periodic blocks
    do not converge that way, so each restart adds a positive shift ``s I``.
    Large blocks with a tiny spectral gap fall back to an Arnoldi solve whose
    eigenvector is then certified with the same bracket.

    When ``sym_scale`` is given, ``diag(s) M diag(1/s)`` must be symmetric.
    Large blocks are then solved by Lanczos and certified by the residual
    norm, which stays reliable when the Perron vector is strongly localised.

    Raises:
        NumericalError: if some block produces no bracket narrower than ``tol``.
    """
    from scipy.sparse.csgraph import connected_components

    M = sp.csr_matrix(M, dtype=float) if not sp.issparse(M) else M.tocsr().astype(float)
    n = M.shape[0]
    if n == 0 or M.nnz == 0:
        return PerronResult(0.0, np.ones(n) / max(n, 1), 0.0, 0.0, 0, 0.0, "zero")
    ncomp, labels = connected_components(M, directed=True, connection="strong")
    diag = M.diagonal()
    best = None
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1:
            res = PerronResult(float(diag[idx[0]]), np.ones(1), float(diag[idx[0]]), float(diag[idx[0]]), 0, 0.0, "scalar")
        else:
            res = _block_root(M[idx][:, idx], tol, max_iter, restarts, None if sym_scale is None else sym_scale[idx])
        if best is None or res.value > best[0].value:
            best = (res, idx)
    res, idx = best
    x = np.zeros(n)
    x[idx] = res.vector
    return PerronResult(res.value, x, res.lower, res.upper, res.iterations, res.shift, res.method)


def _block_root(M, tol, max_iter, restarts, sym) -> PerronResult:
    n = M.shape[0]
    scale = float(abs(M).sum(axis=1).max())
    tried = []
    if n > 1000:
        # large geometric graphs have tiny spectral gaps; spend little before Krylov
        max_iter, restarts = min(max_iter, 1000), min(restarts, 1)
        if sym is not None:
            res = _lanczos(M, sym, tol, tried)
            if res is not None:
                return res
    for attempt in range(restarts + 1):
        shift = 0.0 if attempt == 0 else scale * attempt / 2
        x, lo, hi, k = _power(M, shift, tol, max_iter)
        tried.append({"shift": shift, "iterations": k, "bracket": (lo, hi)})
        if x is not None:
            return PerronResult(0.5 * (lo + hi), x, lo, hi, k, shift, "power")
    if sym is not None and n > 2:
        res = _lanczos(M, sym, tol, tried)
        if res is not None:
            return res
    if n > 2:
        from scipy.sparse.linalg import eigs

        try:
            _, vecs = eigs(M, k=1, which="LR", tol=tol * 1e-3, v0=np.ones(n))
            x = np.abs(vecs[:, 0].real)
            x /= x.sum()
            lo, hi = _cw_bounds(M, x)
            tried.append({"method": "arnoldi", "bracket": (lo, hi)})
            if hi - lo <= tol * max(abs(hi), 1.0):
                return PerronResult(0.5 * (lo + hi), x, lo, hi, 0, 0.0, "arnoldi")
        except Exception as exc:  # ARPACK failures are reported below
            tried.append({"method": "arnoldi", "error": str(exc)})
    raise NumericalError("power iteration did not converge", {"attempts": tried, "n": n})


def _lanczos(M, sym, tol, tried):
    from scipy.sparse.linalg import eigsh

    n = M.shape[0]
    S = sp.diags(sym) @ M @ sp.diags(1.0 / sym)
    S = 0.5 * (S + S.T)
    try:
        vals, vecs = eigsh(S, k=1, which="LA", tol=tol * 1e-3, v0=np.ones(n))
    except Exception as exc:
        tried.append({"method": "lanczos", "error": str(exc)})
        return None
    theta, v = float(vals[0]), vecs[:, 0]
    v = v / np.linalg.norm(v)
    resid = float(np.linalg.norm(S @ v - theta * v))
    tried.append({"method": "lanczos", "residual": resid})
    if resid > tol * max(abs(theta), 1.0):
        return None
    x = np.abs(v) / sym
    return PerronResult(theta, x / x.sum(), theta - resid, theta + resid, 0, 0.0, "lanczos")
