"""Gauss-Legendre rules on the unit ball in polar/spherical coordinates."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _ball_rule(d: int, n_radial: int, n_angular: int):
    s, ws = np.polynomial.legendre.leggauss(n_radial)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    if d == 1:
        offsets = np.concatenate([-s, s])[:, None]
        weights = np.concatenate([ws, ws])
    elif d == 2:
        # angular nodes offset by half a step; exact halving on axis-aligned edges when n_angular % 4 == 0
        th = 2 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        offsets = (s[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
        weights = np.outer(ws * s, np.full(n_angular, 2 * np.pi / n_angular)).ravel()
    elif d == 3:
        ct, wct = np.polynomial.legendre.leggauss(n_angular)
        ph = 2 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
        st = np.sqrt(1 - ct ** 2)
        dirs = np.stack([
            (st[:, None] * np.cos(ph)[None, :]).ravel(),
            (st[:, None] * np.sin(ph)[None, :]).ravel(),
            np.repeat(ct, n_angular),
        ], axis=-1)
        wdir = np.repeat(wct, n_angular) * (2 * np.pi / n_angular)
        offsets = (s[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        weights = np.outer(ws * s ** 2, wdir).ravel()
    else:
        raise ValueError(f"unsupported dimension {d}")
    offsets.setflags(write=False)
    weights.setflags(write=False)
    return offsets, weights


def ball_rule(d: int, n_radial: int = 64, n_angular: int | None = None):
    """Nodes and weights for integrating over the closed unit ball.

    Weights sum to the ball volume. With ``n_radial = n_angular = 64`` the
    rule has ``64**d`` nodes for ``d`` in {2, 3} and 128 in ``d = 1``.
    """
    return _ball_rule(d, n_radial, n_angular or n_radial)


def radial_moment(profile, d: int, n: int = 64) -> float:
    """``int_0^1 profile(u) u^d du`` by Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    return float(0.5 * np.sum(w * profile(u) * u ** d))
