"""Colonisation functions f with their slope at zero and curvature constant."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

COLONIZATION_KINDS = ("linear", "saturating", "exponential")


@dataclass(frozen=True)
class ColonizationFunction:
    """Increasing concave ``f`` with ``f(0) = 0``.

    ``L_f = f'(0)`` and ``C1`` satisfies ``f(x) >= L_f x - C1 x^2`` for ``x >= 0``.
    ``scale`` multiplies the argument, so ``f(x) = g(scale * x)``.

    * ``linear``: ``g(x) = x``, ``C1 = 0``
    * ``saturating``: ``g(x) = x / (1 + x)``, ``C1 = scale^2``
    * ``exponential``: ``g(x) = 1 - exp(-x)``, ``C1 = scale^2 / 2``
    """

    kind: str = "saturating"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in COLONIZATION_KINDS:
            raise ConfigError(f"f.kind must be one of {COLONIZATION_KINDS}, got {self.kind!r}")
        if not self.scale > 0:
            raise ConfigError("f.scale must be positive")

    def __call__(self, x):
        u = self.scale * np.asarray(x, dtype=float)
        if self.kind == "linear":
            return u
        if self.kind == "saturating":
            return u / (1.0 + u)
        return -np.expm1(-u)

    def derivative(self, x):
        u = self.scale * np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.full_like(u, self.scale)
        if self.kind == "saturating":
            return self.scale / (1.0 + u) ** 2
        return self.scale * np.exp(-u)

    @property
    def L_f(self) -> float:
        return float(self.scale)

    @property
    def C1(self) -> float:
        if self.kind == "linear":
            return 0.0
        if self.kind == "saturating":
            return float(self.scale ** 2)
        return float(self.scale ** 2 / 2)

    @property
    def concave(self) -> bool:
        return True

    @property
    def bounded_by_one(self) -> bool:
        return self.kind != "linear"

    def check(self, x_max: float = 10.0, count: int = 2001, tol: float = 1e-12) -> dict:
        """Grid checks of the defining properties; returns a dict of booleans."""
        x = np.linspace(0.0, x_max, count)
        fx = self(x)
        mid = self(0.5 * (x[:-1] + x[1:]))
        return {
            "zero_at_zero": bool(abs(float(self(0.0))) <= tol),
            "nondecreasing": bool(np.all(np.diff(fx) >= -tol)),
            "midpoint_concave": bool(np.all(mid >= 0.5 * (fx[:-1] + fx[1:]) - tol)),
            "curvature_bound": bool(np.all(fx >= self.L_f * x - self.C1 * x * x - tol)),
            "positive_slope_at_zero": bool(self.L_f > 0),
        }
