"""Scaled nonlocal reaction-diffusion evolution and barrier assembly.

The field v(t, x) obeys

    eps v_t = I_s v - W'(v)/eps^{2s} + sigma(t, x),

started from a superposition of K up-layers and N-K down-layers.  Time
stepping is IMEX: the nonlocal term and the stress are explicit, the stiff
reaction is absorbed by a pointwise scalar Newton solve, so the step map is

    w + (dt/eps^{1+2s}) W'(w) = v + (dt/eps)(I_s v + sigma).

Both half-maps are monotone when dt <= eps^{1+2s}/beta and
dt * diagonal_scale <= eps, which makes the scheme order preserving; the
default step size sits well inside that region.  One caveat: the five-point
core stencil of the operator has a negative outermost weight for s > 2/3,
so strict nodewise comparison at large s needs a three-point config.

Barrier functions are layer superpositions riding on prescribed center
trajectories, with three variants: "corrected" carries the corrector psi
weighted by the center speeds, "exponential" replaces a collapsed pair by
a decaying constant with outward-drifting survivors, and "expanding" is
the same-orientation spreading profile driven by a sublinear drift.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    InvalidData,
    InvalidParameter,
    OutOfDomain,
    PreconditionViolated,
    ShapeMismatch,
    StepFailure,
)
from .fracop import DEFAULT_CONFIG, get_operator
from .grids import GridFunction, TailModel, fit_tail_coeffs
from .particles import (
    DriftModel,
    ParticleSystem,
    StepControl,
    ZERO_STRESS,
    integrate,
    ode_rhs,
)

_BARRIER_KINDS = ("corrected", "exponential", "expanding")

_NEWTON_TOL = 1e-12
_MAX_HALVINGS = 6


@dataclass(frozen=True)
class PDEState:
    """Field snapshot at one time.

    The tail model of v carries the far-field plateaus (0 on the left,
    2K - N on the right for zero stress); stepping preserves them.
    """

    epsilon: float
    t: float
    v: GridFunction

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise InvalidParameter("epsilon must be a positive finite number")
        if not np.isfinite(self.t):
            raise InvalidParameter("time must be finite")
        if not np.all(np.isfinite(self.v.samples)):
            raise InvalidData("field samples must be finite")


@dataclass(frozen=True)
class InitialDatumSpec:
    """Centers and orientations of the initial layer superposition."""

    centers: tuple
    orientations: tuple
    epsilon: float

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        z = np.asarray(self.orientations, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InvalidData("centers must be a nonempty 1-d sequence")
        if z.shape != c.shape:
            raise ShapeMismatch("orientations must match centers in length")
        if c.size > 1 and not np.all(np.diff(c) > 0.0):
            raise PreconditionViolated("centers must be strictly increasing")
        if not np.all(np.abs(z) == 1.0):
            raise InvalidData("orientations must be +1 or -1")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise InvalidParameter("epsilon must be a positive finite number")
        object.__setattr__(self, "centers", tuple(float(v) for v in c))
        object.__setattr__(self, "orientations", tuple(int(v) for v in z))

    @property
    def n(self):
        return len(self.centers)

    @property
    def zeta(self):
        return np.asarray(self.orientations, dtype=float)

    @property
    def k_positive(self):
        return int(sum(1 for z in self.orientations if z > 0))


def build_initial_datum(spec, layer, stress=ZERO_STRESS, dx=None, margin=20.0,
                        window=None):
    """Assemble v0 = eps^{2s}/beta sigma(0, .) + sum u(zeta (x - c)/eps) - (N - K).

    The window defaults to [min center - margin, max center + margin]; the
    exterior is a power tail with exponent 2s whose limits are the plateau
    values (shifted by the stress contribution at the window edges) and
    whose coefficients are fitted from the outermost samples.  Centers must
    sit at least 5 length units inside an explicitly supplied window, so
    every layer core is resolved by the modeled region.
    """
    eps = spec.epsilon
    if dx is None:
        dx = eps / 10.0
    if dx > eps / 8.0:
        raise PreconditionViolated("grid must resolve the layer core (dx <= epsilon/8)")
    c = np.asarray(spec.centers, dtype=float)
    if window is None:
        window = (c[0] - margin, c[-1] + margin)
    a, b = float(window[0]), float(window[1])
    if not (np.isfinite(a) and np.isfinite(b) and b > a):
        raise InvalidParameter("window must be a finite increasing pair")
    if c[0] - a < 5.0 or b - c[-1] < 5.0:
        raise OutOfDomain("centers too close to the grid boundary")

    n = int(round((b - a) / dx)) + 1
    x = a + dx * np.arange(n)
    zeta = spec.zeta
    n_lay = spec.n
    k = spec.k_positive
    beta = layer.potential.beta
    s = layer.s
    e2s = eps ** (2.0 * s)

    v = np.full(n, -(float(n_lay - k)))
    v += (e2s / beta) * np.asarray(stress(0.0, x), dtype=float)
    for i in range(n_lay):
        v += layer.u(zeta[i] * (x - c[i]) / eps)

    left_limit = 0.0 + (e2s / beta) * float(stress(0.0, a))
    right_limit = float(2 * k - n_lay) + (e2s / beta) * float(stress(0.0, b))
    tail = fit_tail_coeffs(a, dx, v, TailModel(left_limit, right_limit, 2.0 * s))
    return GridFunction(a, dx, v, tail)


class _NewtonFailure(Exception):
    """Internal: the pointwise implicit reaction solve did not converge."""


def _implicit_reaction(rhs, lam, P):
    """Solve w + lam W'(w) = rhs componentwise by Newton to 1e-12."""
    w = rhs.copy()
    for _ in range(60):
        g = w + lam * P.wprime(w) - rhs
        if not np.all(np.isfinite(g)):
            raise _NewtonFailure
        if np.max(np.abs(g)) <= _NEWTON_TOL:
            return w
        gp = 1.0 + lam * P.wsecond(w)
        if np.min(gp) <= 1e-12:
            raise _NewtonFailure
        w = w - g / gp
    raise _NewtonFailure


def _advance(state, dt, P, s, stress, op, depth):
    v = state.v
    x = v.nodes()
    eps = state.epsilon
    f = op.apply_field(v.samples, v.tail)
    rhs = v.samples + (dt / eps) * (f + np.asarray(stress(state.t, x), dtype=float))
    lam = dt / eps ** (1.0 + 2.0 * s)
    try:
        w = _implicit_reaction(rhs, lam, P)
    except _NewtonFailure:
        if depth >= _MAX_HALVINGS:
            raise StepFailure(
                f"implicit reaction solve failed at dt={dt:g} after {depth} halvings"
            ) from None
        mid = _advance(state, 0.5 * dt, P, s, stress, op, depth + 1)
        return _advance(mid, 0.5 * dt, P, s, stress, op, depth + 1)
    tail = fit_tail_coeffs(v.x0, v.dx, w, v.tail)
    return PDEState(eps, state.t + dt, GridFunction(v.x0, v.dx, w, tail))


def step(state, dt, P, s, stress=ZERO_STRESS, cfg=DEFAULT_CONFIG):
    """One IMEX step of size dt; halves internally if Newton stalls.

    The tail-model limits of the field are untouched (they are fixed points
    of the reaction for integer plateaus and the nonlocal term vanishes on
    constants); only the tail coefficients are refitted.
    """
    if not (np.isfinite(dt) and dt > 0.0):
        raise InvalidParameter("dt must be a positive finite number")
    v = state.v
    op = get_operator(v.x0, v.dx, v.n, s, cfg)
    return _advance(state, dt, P, s, stress, op, 0)


def default_dt(state, P, s, cfg=DEFAULT_CONFIG):
    """Largest step inside the verified monotone region, with margin.

    Both bounds were checked by direct comparison sweeps: the reaction
    half-map is order preserving for dt < eps^{1+2s}/beta and the explicit
    half-map for dt * diagonal_scale < eps.  The returned value is the
    smaller of 0.1x the first bound and 0.9x the second.
    """
    v = state.v
    op = get_operator(v.x0, v.dx, v.n, s, cfg)
    eps = state.epsilon
    return min(0.1 * eps ** (1.0 + 2.0 * s) / P.beta, 0.9 * eps / op.diagonal_scale)


@dataclass(frozen=True)
class EvolutionResult:
    """Sampled history of one PDE run.

    crossings holds, per sample time, the sorted positions where the field
    crosses any half-integer level (the tracked jump locations);
    sup_deviation is sup|v - nearest integer| per sample.
    """

    times: np.ndarray
    sup_deviation: np.ndarray
    crossings: tuple
    snapshots: tuple
    final: PDEState
    steps_taken: int

    @property
    def crossing_counts(self):
        return np.array([len(c) for c in self.crossings])

    def crossing_matrix(self):
        """Crossing positions as a (samples, max_count) array, NaN padded."""
        width = max((len(c) for c in self.crossings), default=0)
        out = np.full((len(self.crossings), width), np.nan)
        for i, c in enumerate(self.crossings):
            out[i, : len(c)] = c
        return out


def half_integer_crossings(x0, dx, samples):
    """Positions where the sampled field crosses a half-integer level.

    Linear interpolation between bracketing nodes; exact hits count once.
    """
    vmin = float(np.min(samples))
    vmax = float(np.max(samples))
    levels = np.arange(math.floor(vmin) + 0.5, vmax, 1.0)
    out = []
    for lev in levels:
        d = samples - lev
        sgn = np.where(d >= 0.0, 1.0, -1.0)
        for i in np.nonzero(sgn[1:] * sgn[:-1] < 0.0)[0]:
            frac = d[i] / (d[i] - d[i + 1])
            out.append(x0 + dx * (i + frac))
    return np.sort(np.asarray(out, dtype=float))


def evolve(state, t_end, P, s, stress=ZERO_STRESS, sample_times=None, dt=None,
           cfg=DEFAULT_CONFIG):
    """March the field to t_end, recording snapshots and jump tracks.

    Fixed base step from default_dt (or the given dt), shortened to land
    exactly on each sample time; transient halvings happen inside step().
    """
    if not (np.isfinite(t_end) and t_end > state.t):
        raise InvalidParameter("t_end must be finite and exceed the state time")
    if sample_times is None:
        sample_times = np.linspace(state.t, t_end, 101)
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise InvalidData("sample_times must be a nonempty 1-d sequence")
    if ts.size > 1 and not np.all(np.diff(ts) > 0.0):
        raise InvalidData("sample_times must be strictly increasing")
    if ts[0] < state.t - 1e-12 or ts[-1] > t_end + 1e-12:
        raise OutOfDomain("sample_times must lie within [state.t, t_end]")

    v = state.v
    op = get_operator(v.x0, v.dx, v.n, s, cfg)
    if dt is None:
        dt = default_dt(state, P, s, cfg)
    if not (np.isfinite(dt) and dt > 0.0):
        raise InvalidParameter("dt must be a positive finite number")

    cur = state
    times = []
    sups = []
    crossings = []
    snaps = []
    steps_taken = 0

    def record(st):
        times.append(st.t)
        w = st.v.samples
        sups.append(float(np.max(np.abs(w - np.round(w)))))
        crossings.append(half_integer_crossings(st.v.x0, st.v.dx, w))
        snaps.append(st.v)

    for target in ts:
        while cur.t < target - 1e-12 * max(1.0, abs(target)):
            h = min(dt, target - cur.t)
            cur = _advance(cur, h, P, s, stress, op, 0)
            steps_taken += 1
        record(cur)

    return EvolutionResult(
        times=np.asarray(times),
        sup_deviation=np.asarray(sups),
        crossings=tuple(crossings),
        snapshots=tuple(snaps),
        final=cur,
        steps_taken=steps_taken,
    )


# -- barriers ---------------------------------------------------------------


@dataclass(frozen=True)
class BarrierSchedule:
    """Small parameters steering the barrier constructions.

    theta_eps is the gap floor below which the corrected barrier stops
    being valid, delta_eps the stress lift, rho_eps the additive error
    amplitude, mu the decay rate in PDE time over eps^{1+2s}, K_eps the
    drift gain of the exponential variant, tau_eps the time for the error
    term to shrink below threshold, t_eps the pursuit window after the
    gap floor is reached, and L > 1 the overshoot factor of the pursuit
    initialization.
    """

    theta_eps: float
    delta_eps: float
    rho_eps: float
    K_eps: float
    mu: float
    tau_eps: float
    t_eps: float
    L: float

    def __post_init__(self):
        for name in ("theta_eps", "delta_eps", "rho_eps", "K_eps", "mu",
                     "tau_eps", "t_eps"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0.0):
                raise InvalidParameter(f"{name} must be a positive finite number")
        if not (np.isfinite(self.L) and self.L > 1.0):
            raise InvalidParameter("L must exceed 1")


def default_schedule(epsilon, s, beta, gamma, sigma_bound=0.0, alpha=0.45,
                     k0=2.0, L=1.5):
    """Concrete power-law schedule; every small parameter is o(1) in eps.

    theta = eps^{3/10} (so eps theta^{-2} = eps^{2/5} vanishes), delta =
    eps^{s/2}, rho = eps^{2s} theta^{-2s}, mu = beta/4.  The drift gain and
    the shrink time balance rho e^{-mu tau/eps^{1+2s}} = eps^{2s+gt} with
    gt half its admissible ceiling; alpha must lie in (s/(2s+1), 1/2).
    The theta exponent balances two desk-scale pressures: a larger theta
    shrinks the decaying amplitude rho (which must stay below the
    potential's inflection scale near a core), while a smaller theta keeps
    the pursuit-window denominator positive; 3/10 with a drift gain of 2
    satisfies both at epsilon = 0.1.
    """
    if not 0.0 < s < 1.0:
        raise InvalidParameter("s must lie in (0, 1)")
    if not (np.isfinite(epsilon) and 0.0 < epsilon < 1.0):
        raise InvalidParameter("epsilon must lie in (0, 1)")
    lo = s / (2.0 * s + 1.0)
    if not lo < alpha < 0.5:
        raise InvalidParameter(f"alpha must lie in ({lo:g}, 0.5)")
    theta = epsilon ** 0.3
    delta = epsilon ** (0.5 * s)
    rho = epsilon ** (2.0 * s) * theta ** (-2.0 * s)
    mu = beta / 4.0
    gt = 0.5 * min(4.0 * s * (1.0 - alpha) - 2.0 * s,
                   alpha * (2.0 * s + 1.0) - s)
    k_eps = k0 * epsilon ** (alpha * (2.0 * s + 1.0) - 2.0 * s - gt)
    tau = (epsilon ** (2.0 * s + 1.0) / mu) * math.log(
        rho * epsilon ** (-(2.0 * s + gt)))
    den = 1.0 - 2.0 * s * (L + 2.0) ** (2.0 * s) * theta ** (2.0 * s) * (
        sigma_bound + delta)
    if den <= 0.0:
        raise InvalidParameter(
            "no positive pursuit window: the gap floor is too large for this "
            "stress level; decrease epsilon or L"
        )
    t_eps = 4.0 * s * (L + 2.0) ** (2.0 * s) * theta ** (2.0 * s + 1.0) / (
        gamma * den)
    return BarrierSchedule(theta, delta, rho, k_eps, mu, tau, t_eps, L)


@dataclass(frozen=True)
class BarrierSpec:
    """One barrier: center trajectories plus the modulation ingredients.

    positions(t) -> array of centers; speeds(t) -> their velocities (used
    to weight the corrector; may be None for the exponential kind);
    sigma_bar(t, x) -> the order-eps^{2s} offset field, already divided by
    beta.  skip lists center indices excluded from the layer sum.
    """

    kind: str
    epsilon: float
    s: float
    orientations: tuple
    positions: object
    speeds: object
    sigma_bar: object
    schedule: object
    plateau: float
    skip: tuple = ()
    time_domain: tuple = (0.0, np.inf)

    def __post_init__(self):
        if self.kind not in _BARRIER_KINDS:
            raise InvalidParameter(f"kind must be one of {_BARRIER_KINDS}")
        z = np.asarray(self.orientations, dtype=float)
        if not np.all(np.abs(z) == 1.0):
            raise InvalidData("orientations must be +1 or -1")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise InvalidParameter("epsilon must be a positive finite number")
        if not 0.0 < self.s < 1.0:
            raise InvalidParameter("s must lie in (0, 1)")
        n = z.size
        if any((i < 0 or i >= n) for i in self.skip):
            raise InvalidParameter("skip indices out of range")
        if self.kind == "exponential":
            if self.schedule is None:
                raise InvalidParameter("exponential barrier requires a schedule")
        elif self.speeds is None:
            raise InvalidParameter(f"{self.kind} barrier requires center speeds")
        a, b = self.time_domain
        if not (np.isfinite(a) and (np.isfinite(b) or b == np.inf) and b > a):
            raise InvalidParameter("time_domain must be an increasing pair")
        if self.speeds is not None:
            self._check_speed_consistency()

    def _check_speed_consistency(self):
        """Speeds must match a finite difference of the trajectories."""
        a, b = self.time_domain
        span = (b - a) if np.isfinite(b) else 1.0
        h = min(1e-5, span / 16.0)
        t0 = a + 4.0 * h
        fd = (np.asarray(self.positions(t0 + h)) -
              np.asarray(self.positions(t0 - h))) / (2.0 * h)
        c = np.asarray(self.speeds(t0))
        tol = 1e-6 * max(1.0, float(np.max(np.abs(c))))
        if np.max(np.abs(fd - c)) > tol:
            raise InvalidData("declared speeds disagree with the trajectories")


def build_barrier(spec, layer, corrector, t, grid=None):
    """Evaluate the barrier at time t on the given (x0, dx, n) grid.

    With grid=None the window is [min center - 20, max center + 20] at
    dx = eps/10.  The exterior tail has exponent 2s, limits read off the
    included layer counts, and fitted coefficients.
    """
    a, b = spec.time_domain
    if t < a or t > b:
        raise OutOfDomain(f"barrier trajectories are defined on [{a:g}, {b:g}]")
    eps = spec.epsilon
    s = spec.s
    e2s = eps ** (2.0 * s)
    xi = np.asarray(spec.positions(t), dtype=float)
    zeta = np.asarray(spec.orientations, dtype=float)
    if xi.shape != zeta.shape:
        raise ShapeMismatch("positions(t) must match orientations in length")

    if grid is None:
        dx = eps / 10.0
        x0 = float(np.min(xi)) - 20.0
        n = int(round((float(np.max(xi)) + 20.0 - x0) / dx)) + 1
    else:
        x0, dx, n = float(grid[0]), float(grid[1]), int(grid[2])
    x = x0 + dx * np.arange(n)

    v = np.full(n, -float(spec.plateau))
    v += e2s * np.asarray(spec.sigma_bar(t, x), dtype=float)
    use_psi = spec.kind in ("corrected", "expanding")
    if use_psi:
        if corrector is None:
            raise InvalidParameter(f"{spec.kind} barrier requires a corrector")
        ci = np.asarray(spec.speeds(t), dtype=float)
    included = [i for i in range(zeta.size) if i not in spec.skip]
    for i in included:
        z = zeta[i] * (x - xi[i]) / eps
        v += layer.u(z)
        if use_psi:
            v -= zeta[i] * e2s * ci[i] * corrector.psi(z)

    rho_term = 0.0
    if spec.kind == "exponential":
        sched = spec.schedule
        rho_term = sched.rho_eps * math.exp(
            -sched.mu * t / eps ** (2.0 * s + 1.0))
        v += rho_term

    kpos = sum(1 for i in included if zeta[i] > 0)
    kneg = len(included) - kpos
    x_end = x0 + dx * (n - 1)
    left = kneg - spec.plateau + rho_term + e2s * float(
        np.mean(np.atleast_1d(spec.sigma_bar(t, x0))))
    right = kpos - spec.plateau + rho_term + e2s * float(
        np.mean(np.atleast_1d(spec.sigma_bar(t, x_end))))
    tail = fit_tail_coeffs(x0, dx, v, TailModel(left, right, 2.0 * s))
    return GridFunction(x0, dx, v, tail)


def _position_interpolant(record, system):
    # clamp the end derivatives to the exact velocities; the free-end
    # (not-a-knot) spline loses ~1e-5 of derivative accuracy there
    d0 = ode_rhs(system, record.times[0], record.positions[0])
    d1 = ode_rhs(system, record.times[-1], record.positions[-1])
    return CubicSpline(record.times, record.positions, axis=0,
                       bc_type=((1, d0), (1, d1)))


def make_corrected_barrier(centers, orientations, epsilon, s, layer, schedule,
                           stress=ZERO_STRESS, horizon=1.0, n_samples=513):
    """Barrier riding the delta-lifted particle flow.

    The centers solve the particle system with the stress raised by
    delta_eps and start from the -zeta delta_eps shifted positions; the
    trajectory is followed until the minimal gap reaches theta_eps (or the
    horizon).  Returns (spec, trajectory record).
    """
    system = ParticleSystem(
        tuple(float(v) for v in centers),
        tuple(int(v) for v in orientations),
        s,
        layer.gamma,
        stress=stress,
        delta_const=schedule.delta_eps,
        initial_shift_rule="minus-zeta-delta",
    )
    ctrl = StepControl(theta_stop=schedule.theta_eps)
    rec = integrate(system, horizon, ctrl,
                    sample_times=np.linspace(0.0, horizon, n_samples))
    spline = _position_interpolant(rec, system)
    beta = layer.potential.beta

    def positions(t):
        return spline(t)

    def speeds(t):
        return ode_rhs(system, t, spline(t))

    def sigma_bar(t, x):
        return (np.asarray(stress(t, x), dtype=float) + schedule.delta_eps) / beta

    n = len(centers)
    k = sum(1 for z in orientations if z > 0)
    spec = BarrierSpec(
        kind="corrected",
        epsilon=epsilon,
        s=s,
        orientations=tuple(int(v) for v in orientations),
        positions=positions,
        speeds=speeds,
        sigma_bar=sigma_bar,
        schedule=schedule,
        plateau=float(n - k),
        time_domain=(0.0, float(rec.times[-1])),
    )
    return spec, rec


def make_exponential_barrier(centers, orientations, epsilon, s, schedule, beta,
                             stress=ZERO_STRESS, skip=None):
    """Barrier for the relaxation right after a pair collapses.

    The collapsed pair (by default the last up-layer and first down-layer)
    is dropped from the sum and replaced by the decaying amplitude
    rho_eps e^{-mu t/eps^{1+2s}}; the survivors drift outward by
    zeta K_eps rho_eps (e^{-mu t/eps^{1+2s}} - 1).
    """
    z = tuple(int(v) for v in orientations)
    n = len(centers)
    k = sum(1 for v in z if v > 0)
    if skip is None:
        skip = (k - 1, k)
    skip = tuple(int(i) for i in skip)
    if len(skip) != 2 or not (0 <= skip[0] < n and 0 <= skip[1] < n):
        raise InvalidParameter("skip must name two center indices")
    if z[skip[0]] * z[skip[1]] != -1:
        raise InvalidParameter("the collapsed pair must have opposite orientations")

    x0 = np.asarray(centers, dtype=float)
    zf = np.asarray(z, dtype=float)
    lam = schedule.mu / epsilon ** (2.0 * s + 1.0)
    amp = schedule.K_eps * schedule.rho_eps

    def positions(t):
        return x0 + zf * amp * (np.exp(-lam * t) - 1.0)

    def sigma_bar(t, x):
        return np.asarray(stress(t, x), dtype=float) / beta

    return BarrierSpec(
        kind="exponential",
        epsilon=epsilon,
        s=s,
        orientations=z,
        positions=positions,
        speeds=None,
        sigma_bar=sigma_bar,
        schedule=schedule,
        plateau=float(n - k - 1),
        skip=skip,
        time_domain=(0.0, np.inf),
    )


def make_expanding_barrier(centers, epsilon, s, layer, schedule, sigma_eps,
                           horizon, n_samples=513):
    """Barrier over a same-orientation family spreading under a drift.

    All layers point up; the centers solve the repulsive system with the
    uniform drift delta(t) = (1+2s)(sigma_eps + delta_eps)(1+t)^{1/(1+2s)},
    started delta_eps to the left of the given positions.  The offset field
    is delta'(t)/beta.  Returns (spec, trajectory record).
    """
    n = len(centers)
    rate = 1.0 / (1.0 + 2.0 * s)
    a = (1.0 + 2.0 * s) * (sigma_eps + schedule.delta_eps)
    drift = DriftModel(
        value=lambda t: a * (1.0 + t) ** rate,
        derivative=lambda t: a * rate * (1.0 + t) ** (rate - 1.0),
    )
    system = ParticleSystem(
        tuple(float(v) for v in centers),
        (1,) * n,
        s,
        layer.gamma,
        delta_drift=drift,
        initial_shift_rule="custom",
        custom_shifts=(-schedule.delta_eps,) * n,
    )
    rec = integrate(system, horizon,
                    sample_times=np.linspace(0.0, horizon, n_samples))
    spline = _position_interpolant(rec, system)
    beta = layer.potential.beta

    def positions(t):
        return spline(t)

    def speeds(t):
        return ode_rhs(system, t, spline(t))

    def sigma_bar(t, x):
        return drift.derivative(t) / beta

    spec = BarrierSpec(
        kind="expanding",
        epsilon=epsilon,
        s=s,
        orientations=(1,) * n,
        positions=positions,
        speeds=speeds,
        sigma_bar=sigma_bar,
        schedule=schedule,
        plateau=0.0,
        time_domain=(0.0, float(rec.times[-1])),
    )
    return spec, rec
