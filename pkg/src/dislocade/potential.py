"""Periodic multi-well potentials driving the phase dynamics.

The admissible class consists of smooth 1-periodic potentials vanishing
exactly on the integers, positive elsewhere, with positive curvature at the
wells.  ``validate_potential`` checks these conditions numerically and
reports each one separately, so deliberately broken inputs can be inspected.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameter


@dataclass(frozen=True)
class PeriodicPotential:
    """A potential W with its first two derivatives.

    ``beta`` caches W''(0), the well curvature that sets the relaxation rate
    of the phase toward the nearest integer.
    """

    family: str
    w: Callable
    wprime: Callable
    wsecond: Callable
    amplitude: float | None = None
    beta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.wsecond(0.0)))

    def __call__(self, v):
        return self.w(v)


def make_cosine_potential(amplitude=1.0 / (4.0 * np.pi)):
    """W(v) = a (1 - cos 2 pi v).

    The default amplitude 1/(4 pi) is the one for which the half-order layer
    profile is exactly 1/2 + arctan(x)/pi; it gives W''(0) = pi.
    """
    if not amplitude > 0:
        raise InvalidParameter(f"amplitude must be positive, got {amplitude}")
    a = float(amplitude)
    two_pi = 2.0 * np.pi

    def w(v):
        return a * (1.0 - np.cos(two_pi * v))

    def wprime(v):
        return a * two_pi * np.sin(two_pi * v)

    def wsecond(v):
        return a * two_pi * two_pi * np.cos(two_pi * v)

    return PeriodicPotential("cosine", w, wprime, wsecond, amplitude=a)


def make_analytic_potential(w, wprime, wsecond, family="custom-analytic"):
    """Wrap user-supplied callables as a potential without validating them.

    Use :func:`validate_potential` to check the structural conditions; the
    constructor stays permissive so that broken candidates can be examined.
    """
    return PeriodicPotential(family, w, wprime, wsecond)


@dataclass(frozen=True)
class PotentialReport:
    """Outcome of validate_potential: per-condition verdicts and witnesses."""

    ok: bool
    checks: dict


def validate_potential(potential, n_samples=4096, tol=1e-9):
    """Check the structural conditions on a candidate potential.

    Conditions checked, each reported with its worst witness:

    1. periodicity: W(v + 1) = W(v)
    2. zeros on the integers: W(k) = 0
    3. positivity off the integers: W(v) > 0 away from Z
    4. well curvature: W''(0) > 0
    5. derivative consistency: wprime/wsecond match difference quotients of
       w/wprime (a smoothness proxy; the class is restricted to analytic
       families, so true regularity is guaranteed by construction)
    """
    v = np.linspace(-1.5, 1.5, n_samples)
    checks = {}

    per = np.max(np.abs(potential.w(v + 1.0) - potential.w(v)))
    checks["periodic"] = (per <= tol, float(per), "sup |W(v+1)-W(v)|")

    ks = np.arange(-2, 3, dtype=float)
    zer = np.max(np.abs(potential.w(ks)))
    checks["zero_on_integers"] = (zer <= tol, float(zer), "max |W(k)|, k in Z")

    frac = v - np.round(v)
    off = np.abs(frac) > 0.05
    wmin = np.min(potential.w(v[off]))
    checks["positive_off_integers"] = (wmin > 0, float(wmin), "min W off Z")

    beta = float(potential.wsecond(0.0))
    checks["well_curvature"] = (beta > 0, beta, "W''(0)")

    h = 1e-5
    d1 = (potential.w(v + h) - potential.w(v - h)) / (2 * h)
    d2 = (potential.wprime(v + h) - potential.wprime(v - h)) / (2 * h)
    err = max(
        np.max(np.abs(d1 - potential.wprime(v))),
        np.max(np.abs(d2 - potential.wsecond(v))),
    )
    checks["derivative_consistency"] = (err <= 1e-5, float(err), "sup FD mismatch")

    ok = all(c[0] for c in checks.values())
    return PotentialReport(ok, checks)
