"""Uniform grids with power-law tail closures.

A :class:`GridFunction` couples samples on a uniform grid with a
:class:`TailModel` describing the function beyond the grid:

    phi(x) ~= right_limit - right_coeff / x**exponent        as x -> +inf
    phi(x) ~= left_limit  + left_coeff  / |x|**exponent      as x -> -inf

This closure is what makes the nonlocal operator computable on a finite
window: exterior values are generated from the tail model instead of being
truncated to a constant.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidData, InvalidParameter, ShapeMismatch


@dataclass(frozen=True)
class TailModel:
    """Power-law description of a function outside its sampled window."""

    left_limit: float
    right_limit: float
    exponent: float
    left_coeff: float = 0.0
    right_coeff: float = 0.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise InvalidParameter(f"tail exponent must be positive, got {self.exponent}")
        for name in ("left_limit", "right_limit", "left_coeff", "right_coeff"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameter(f"tail field {name} must be finite")

    def eval_right(self, x):
        """Tail value(s) for x on the right of the window (x > 0 required)."""
        return self.right_limit - self.right_coeff * np.asarray(x, dtype=float) ** (-self.exponent)

    def eval_left(self, x):
        """Tail value(s) for x on the left of the window (x < 0 required)."""
        return self.left_limit + self.left_coeff * np.abs(np.asarray(x, dtype=float)) ** (-self.exponent)


class GridFunction:
    """Samples of a function on a uniform grid plus its tail closure."""

    def __init__(self, x0, dx, samples, tail):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1:
            raise ShapeMismatch(f"samples must be one-dimensional, got shape {samples.shape}")
        if samples.size < 3:
            raise InvalidData("need at least 3 samples")
        if not np.all(np.isfinite(samples)):
            raise InvalidData("samples contain non-finite values")
        if not dx > 0:
            raise InvalidParameter(f"dx must be positive, got {dx}")
        self.x0 = float(x0)
        self.dx = float(dx)
        self.samples = samples
        self.tail = tail
        self._spline = None

    @property
    def n(self):
        return self.samples.size

    @property
    def x_end(self):
        return self.x0 + (self.n - 1) * self.dx

    def nodes(self):
        return self.x0 + self.dx * np.arange(self.n)

    def node_index(self, x, tol=1e-6):
        """Index of the grid node at x, or None if x is not grid-aligned."""
        r = (x - self.x0) / self.dx
        i = int(round(r))
        if abs(r - i) > tol or i < 0 or i >= self.n:
            return None
        return i

    def extended(self, pad):
        """Samples extended by ``pad`` tail-model values on each side."""
        out = np.empty(self.n + 2 * pad)
        out[pad : pad + self.n] = self.samples
        if pad > 0:
            xl = self.x0 - self.dx * np.arange(pad, 0, -1)
            xr = self.x_end + self.dx * np.arange(1, pad + 1)
            out[:pad] = self.tail.eval_left(xl)
            out[pad + self.n :] = self.tail.eval_right(xr)
        return out

    def __call__(self, x):
        """Evaluate at arbitrary points: cubic spline inside, tail outside."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        inside = (x >= self.x0) & (x <= self.x_end)
        left = x < self.x0
        right = x > self.x_end
        if inside.any():
            if self._spline is None:
                self._spline = CubicSpline(self.nodes(), self.samples)
            out[inside] = self._spline(x[inside])
        if left.any():
            out[left] = self.tail.eval_left(x[left])
        if right.any():
            out[right] = self.tail.eval_right(x[right])
        return float(out[0]) if scalar else out

    def with_samples(self, samples):
        """New GridFunction on the same grid and tail with fresh samples."""
        return GridFunction(self.x0, self.dx, samples, self.tail)


def fit_tail_coeffs(x0, dx, samples, tail, fraction=0.1):
    """Least-squares tail coefficients from the outermost samples.

    Limits and exponent are kept from ``tail``; only the two coefficients are
    refitted, each from the outermost ``fraction`` of nodes on its side.
    Returns a new TailModel.
    """
    n = samples.size
    k = max(3, int(round(fraction * n)))
    xs = x0 + dx * np.arange(n)
    xl, yl = xs[:k], samples[:k]
    xr, yr = xs[-k:], samples[-k:]
    p = tail.exponent
    # right: y = L+ - c+ x^-p  ->  c+ = sum((L+ - y) x^-p) / sum(x^-2p)
    if np.all(xr > 0):
        br = xr ** (-p)
        right_coeff = float(((tail.right_limit - yr) @ br) / (br @ br))
    else:
        right_coeff = tail.right_coeff
    if np.all(xl < 0):
        bl = np.abs(xl) ** (-p)
        left_coeff = float(((yl - tail.left_limit) @ bl) / (bl @ bl))
    else:
        left_coeff = tail.left_coeff
    return TailModel(tail.left_limit, tail.right_limit, p, left_coeff, right_coeff)
