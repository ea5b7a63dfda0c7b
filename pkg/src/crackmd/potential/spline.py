"""Natural cubic splines on uniform grids starting at zero.

Coefficients come from :class:`scipy.interpolate.CubicSpline`; evaluation
is a small numba routine so the force kernels can inline it. Beyond the
last knot the spline continues linearly with its end slope, which keeps
value and derivative consistent.
"""

from __future__ import annotations

import numba as nb
import numpy as np
from scipy.interpolate import CubicSpline


def spline_coefficients(values: np.ndarray, spacing: float) -> np.ndarray:
    """Per-interval ``(c3, c2, c1, c0)`` in local offset ``t = x - x_k``.

    Returns an ``(n, 4)`` array; row ``n - 1`` holds the linear tail
    ``(0, 0, slope, y_last)``.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    x = np.arange(n) * spacing
    cs = CubicSpline(x, values, bc_type="natural")
    coef = np.zeros((n, 4))
    coef[: n - 1] = cs.c.T
    # exact knot values; CubicSpline already stores y_k but be explicit
    coef[: n - 1, 3] = values[:-1]
    coef[n - 1, 2] = cs(x[-1], 1)
    coef[n - 1, 3] = values[-1]
    return coef


@nb.njit(cache=True, inline="always")
def spline_eval(coef, x, inv_h, h):
    """Value and derivative at ``x >= 0``."""
    n = coef.shape[0]
    k = int(x * inv_h)
    if k >= n - 1:
        k = n - 1
    t = x - k * h
    c3 = coef[k, 0]
    c2 = coef[k, 1]
    c1 = coef[k, 2]
    c0 = coef[k, 3]
    val = ((c3 * t + c2) * t + c1) * t + c0
    der = (3.0 * c3 * t + 2.0 * c2) * t + c1
    return val, der


@nb.njit(cache=True)
def _eval_many(coef, xs, inv_h, h, out_v, out_d):
    for i in range(xs.shape[0]):
        v, d = spline_eval(coef, xs[i], inv_h, h)
        out_v[i] = v
        out_d[i] = d


class Spline1D:
    def __init__(self, values: np.ndarray, spacing: float):
        if not spacing > 0:
            raise ValueError("spacing must be positive")
        if len(values) < 2:
            raise ValueError("need at least two knots")
        self.spacing = float(spacing)
        self.values = np.asarray(values, dtype=float).copy()
        self.coef = spline_coefficients(self.values, self.spacing)

    @property
    def knots(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.spacing

    def __call__(self, x, nu: int = 0):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs < 0):
            raise ValueError("spline argument must be non-negative")
        v = np.empty_like(xs)
        d = np.empty_like(xs)
        _eval_many(self.coef, xs, 1.0 / self.spacing, self.spacing, v, d)
        out = v if nu == 0 else d
        if nu not in (0, 1):
            raise ValueError("only value (nu=0) and first derivative (nu=1) are supported")
        return out if np.ndim(x) else float(out[0])
