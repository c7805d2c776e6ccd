"""Decay-law fits, track comparison, residual checks, equilibrium search.

Everything here consumes the outputs of the other modules and reduces them
to scalars with distributional claims attached: fitted decay rates and
exponents, sup deviations between PDE jump tracks and particle paths,
minimum supersolution residuals over a sampled space-time set, and the
multistart minimum of the squared particle velocity field (which never
reaches zero: the systems have no equilibria in any bounded gap box).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import (
    InsufficientData,
    InvalidData,
    InvalidParameter,
    OutOfDomain,
    PreconditionViolated,
    ShapeMismatch,
)
from .evolver import build_barrier
from .fracop import DEFAULT_CONFIG, get_operator
from .particles import ParticleSystem, ZERO_STRESS, ode_rhs

_FIT_KINDS = ("exponential", "power")
_MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay law: amplitude * e^{-rate t} or amplitude * (1+t)^{-rate}.

    rate is positive for decay in both conventions; r_squared is the
    coefficient of determination of the underlying log-linear regression.
    """

    kind: str
    rate: float
    amplitude: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        if self.kind not in _FIT_KINDS:
            raise InvalidParameter(f"kind must be one of {_FIT_KINDS}")


@dataclass(frozen=True)
class AsymptoticReport:
    """Terminal classification of one scenario run.

    l = 2K - N is the orientation surplus and m its half (l = 2m or
    2m + 1); relaxation_time is the total time spent in annihilation
    events, residual_amplitude the field deviation left at the horizon.
    drift_alpha and center_bracket are only populated for odd surplus,
    where a single crossing survives and drifts.
    """

    scenario: str
    l: int
    m: int
    relaxation_time: float
    residual_amplitude: float
    drift_alpha: float = None
    center_bracket: tuple = None

    def __post_init__(self):
        if self.relaxation_time <= 0.0:
            raise InvalidParameter("relaxation_time must be positive")
        if self.residual_amplitude < 0.0:
            raise InvalidParameter("residual_amplitude must be nonnegative")
        if self.center_bracket is not None:
            lo, hi = self.center_bracket
            if lo > hi:
                raise InvalidParameter("center bracket must be ordered")


def _prepare_fit_input(times, values):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ShapeMismatch("times and values must be equal-length 1-d arrays")
    if t.size < _MIN_FIT_SAMPLES:
        raise InsufficientData(f"need at least {_MIN_FIT_SAMPLES} samples")
    if not np.all(np.diff(t) > 0.0):
        raise InvalidData("times must be strictly increasing")
    if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
        raise InvalidData("values must be positive and finite")
    return t, v


def _log_linear(abscissa, log_values):
    A = np.column_stack([abscissa, np.ones_like(abscissa)])
    coef, *_ = np.linalg.lstsq(A, log_values, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((log_values - fitted) ** 2))
    ss_tot = float(np.sum((log_values - log_values.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def fit_exponential(times, values):
    """Least-squares fit of values ~ A e^{-rate t}; rate > 0 means decay."""
    t, v = _prepare_fit_input(times, values)
    slope, intercept, r2 = _log_linear(t, np.log(v))
    return DecayFit("exponential", -slope, float(np.exp(intercept)), r2,
                    (float(t[0]), float(t[-1])))


def fit_power(times, values):
    """Least-squares fit of values ~ A (1+t)^{-rate}; rate > 0 means decay."""
    t, v = _prepare_fit_input(times, values)
    if t[0] <= -1.0:
        raise InvalidData("power fit needs times > -1")
    slope, intercept, r2 = _log_linear(np.log1p(t), np.log(v))
    return DecayFit("power", -slope, float(np.exp(intercept)), r2,
                    (float(t[0]), float(t[-1])))


@dataclass(frozen=True)
class TrackComparison:
    """Per-particle sup deviation between jump tracks and particle paths."""

    times: np.ndarray
    per_particle: np.ndarray
    per_time: np.ndarray

    @property
    def max_deviation(self):
        return float(np.max(self.per_particle))


def compare_pde_ode(result, record):
    """Match sampled crossings against particle positions, index by index.

    Both inputs must be sampled on the same time grid and carry the same
    number of tracks at every sample (run the comparison on a window that
    ends before any annihilation).
    """
    tp = np.asarray(result.times, dtype=float)
    to = np.asarray(record.times, dtype=float)
    if tp.size != to.size or np.max(np.abs(tp - to)) > 1e-9 * max(1.0, float(np.max(np.abs(to)))):
        raise InvalidData("PDE and ODE histories are sampled at different times")
    n = record.positions.shape[1]
    dev = np.zeros((tp.size, n))
    for k, c in enumerate(result.crossings):
        if len(c) != n:
            raise ShapeMismatch(
                f"{len(c)} crossings vs {n} particles at t={tp[k]:g}; "
                "restrict the window to before the first annihilation"
            )
        dev[k] = np.abs(np.asarray(c) - record.positions[k])
    return TrackComparison(times=tp, per_particle=dev.max(axis=0),
                           per_time=dev.max(axis=1))


@dataclass(frozen=True)
class ResidualReport:
    """Minimum discrete supersolution residual over the sampled set."""

    times: np.ndarray
    min_per_time: np.ndarray
    min_residual: float
    argmin_t: float
    argmin_x: float


def supersolution_residual(spec, layer, corrector, P, stress=ZERO_STRESS,
                           times=None, grid=None, cfg=DEFAULT_CONFIG):
    """Minimum of eps d_t(barrier) - I_s(barrier) + W'(barrier)/eps^{2s} - sigma.

    The time derivative is a centered difference with dt = 1e-4 eps^{1+2s}
    (the barrier's fastest clock); the nonlocal term is evaluated with the
    barrier's own tail model.  Sampled times must keep every included-layer
    gap at or above theta_eps when the spec carries a schedule.
    """
    if times is None:
        raise InvalidParameter("times must be given")
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise InvalidData("times must be a nonempty 1-d sequence")
    eps = spec.epsilon
    s = spec.s
    e2s = eps ** (2.0 * s)
    dt = 1e-4 * eps ** (1.0 + 2.0 * s)
    a, b = spec.time_domain
    if ts[0] - dt < a or ts[-1] + dt > b:
        raise OutOfDomain("times (padded by the difference step) must lie in "
                          f"[{a:g}, {b:g}]")

    included = [i for i in range(len(spec.orientations)) if i not in spec.skip]
    if spec.schedule is not None and len(included) > 1:
        for t in ts:
            xi = np.sort(np.asarray(spec.positions(t), dtype=float)[included])
            if np.min(np.diff(xi)) < spec.schedule.theta_eps:
                raise PreconditionViolated(
                    f"gap floor theta_eps violated at t={t:g}")

    if grid is None:
        lo = min(float(np.min(np.asarray(spec.positions(t))[included])) for t in ts)
        hi = max(float(np.max(np.asarray(spec.positions(t))[included])) for t in ts)
        dx = eps / 10.0
        x0 = lo - 20.0
        n = int(round((hi + 20.0 - x0) / dx)) + 1
        grid = (x0, dx, n)
    x0, dx, n = float(grid[0]), float(grid[1]), int(grid[2])
    x = x0 + dx * np.arange(n)
    op = get_operator(x0, dx, n, s, cfg)

    mins = np.empty(ts.size)
    best = np.inf
    arg_t = arg_x = np.nan
    for k, t in enumerate(ts):
        vb = build_barrier(spec, layer, corrector, t, grid)
        vp = build_barrier(spec, layer, corrector, t + dt, grid)
        vm = build_barrier(spec, layer, corrector, t - dt, grid)
        vt = (vp.samples - vm.samples) / (2.0 * dt)
        nonlocal_term = op.apply_field(vb.samples, vb.tail)
        r = (eps * vt - nonlocal_term + P.wprime(vb.samples) / e2s
             - np.asarray(stress(t, x), dtype=float))
        j = int(np.argmin(r))
        mins[k] = r[j]
        if r[j] < best:
            best = float(r[j])
            arg_t = float(t)
            arg_x = float(x[j])
    return ResidualReport(times=ts, min_per_time=mins, min_residual=best,
                          argmin_t=arg_t, argmin_x=arg_x)


@dataclass(frozen=True)
class SearchReport:
    """Outcome of the multistart velocity-residual minimization."""

    best_value: float
    best_gaps: tuple
    n_starts: int
    threshold: float

    @property
    def found_equilibrium(self):
        return self.best_value < self.threshold


def stationary_search(orientations, s, gamma, n_starts=100,
                      gap_bounds=(0.1, 100.0), seed=0, threshold=1e-6):
    """Minimize the squared velocity field over gap space.

    Gap coordinates quotient out translation (the only flat direction at
    zero stress).  Starts are drawn log-uniformly in the gap box up front
    from one seeded generator, so the result does not depend on execution
    order.  The minimum never reaches zero: same-orientation forces only
    vanish as gaps escape to infinity, and the box is bounded.
    """
    z = tuple(int(v) for v in orientations)
    n = len(z)
    if n < 2:
        raise InvalidParameter("need at least two particles")
    g_min, g_max = float(gap_bounds[0]), float(gap_bounds[1])
    if not 0.0 < g_min < g_max:
        raise InvalidParameter("gap_bounds must satisfy 0 < g_min < g_max")
    system = ParticleSystem(tuple(float(i) for i in range(n)), z, s, gamma)

    def objective(g):
        x = np.concatenate(([0.0], np.cumsum(g)))
        v = ode_rhs(system, 0.0, x)
        return float(v @ v)

    rng = np.random.default_rng(seed)
    starts = np.exp(rng.uniform(np.log(g_min), np.log(g_max),
                                size=(n_starts, n - 1)))
    bounds = [(g_min, g_max)] * (n - 1)
    best = np.inf
    best_gaps = None
    for g0 in starts:
        res = minimize(objective, g0, method="L-BFGS-B", bounds=bounds)
        if res.fun < best:
            best = float(res.fun)
            best_gaps = tuple(float(v) for v in res.x)
    return SearchReport(best_value=best, best_gaps=best_gaps,
                        n_starts=int(n_starts), threshold=float(threshold))
