"""Signed particle systems for the sharp-interface dislocation dynamics.

Particles are the jump points of a quantized phase field: each carries an
orientation in {-1, +1}, same-orientation pairs repel, opposite pairs
attract through the same power-law kernel, and an external stress advects
each particle against its orientation.  Attracting pairs reach a finite
collision time; repelling families spread like (1 + t)^{1/(1+2s)}.

The integrator is a Dormand-Prince 5(4) pair with a PI controller plus one
extra rule: the step never exceeds a fixed fraction of the time scale
(min gap)^{1+2s} s / gamma on which the closest pair evolves, so the
approach to collision stays resolved however stiff it gets.  A run halts
once a gap reaches ``theta_stop`` and reports a collision time
extrapolated from the last accepted steps through the separable gap law.
"""

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InsufficientData,
    InvalidData,
    InvalidParameter,
    NoConvergence,
    OutOfDomain,
    PreconditionViolated,
    ShapeMismatch,
    SingularConfiguration,
    StiffnessFailure,
)

_STRESS_KINDS = ("zero", "constant", "analytic")
_SHIFT_RULES = ("none", "minus-zeta-delta", "custom")


@dataclass(frozen=True)
class StressModel:
    """External stress sigma(t, x) with a declared sup-norm bound.

    Kinds: ``zero``; ``constant`` (uses ``value``); ``analytic`` (uses
    ``func``, a callable of (t, x), with declared ``bound`` on |sigma| and
    a spatial Holder exponent ``holder``; the sharp-interface limit needs
    holder > s, which is checked where s is known).
    """

    kind: str = "zero"
    value: float = 0.0
    func: Callable | None = None
    bound: float = 0.0
    holder: float | None = None

    def __post_init__(self):
        if self.kind not in _STRESS_KINDS:
            raise InvalidParameter(f"stress kind must be one of {_STRESS_KINDS}, got {self.kind!r}")
        if self.kind == "zero":
            object.__setattr__(self, "value", 0.0)
            object.__setattr__(self, "bound", 0.0)
        elif self.kind == "constant":
            if not np.isfinite(self.value):
                raise InvalidParameter("constant stress value must be finite")
            object.__setattr__(self, "bound", abs(float(self.value)))
        else:
            if self.func is None:
                raise InvalidParameter("analytic stress requires a callable func(t, x)")
            if not (np.isfinite(self.bound) and self.bound >= 0):
                raise InvalidParameter("analytic stress requires a finite declared bound")
            if self.holder is None or not 0.0 < self.holder < 1.0:
                raise InvalidParameter("analytic stress requires a Holder exponent in (0, 1)")

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        return np.asarray(self.func(t, x), dtype=float)


ZERO_STRESS = StressModel()


def constant_stress(value):
    return StressModel(kind="constant", value=float(value))


def analytic_stress(func, bound, holder):
    return StressModel(kind="analytic", func=func, bound=float(bound), holder=float(holder))


@dataclass(frozen=True)
class DriftModel:
    """A differentiable time drift delta(t), supplied with its derivative.

    ``value`` and ``derivative`` are callables of a scalar time; the
    consistency between them is the caller's responsibility.
    """

    value: Callable
    derivative: Callable

    def __post_init__(self):
        if not callable(self.value) or not callable(self.derivative):
            raise InvalidParameter("drift value and derivative must both be callable")


@dataclass(frozen=True)
class ParticleSystem:
    """An ordered family of signed particles and its driving terms.

    ``positions`` are the unshifted reference positions; ``delta_const``
    is the small constant perturbation that enters the velocity as
    -zeta_i delta inside the gamma factor, ``delta_drift`` the uniform
    time drift entering as -delta'(t) outside it.  The shift rule decides
    where integration actually starts (see :meth:`initial_positions`).
    """

    positions: tuple
    orientations: tuple
    s: float
    gamma: float
    stress: StressModel = ZERO_STRESS
    delta_const: float = 0.0
    delta_drift: DriftModel | None = None
    initial_shift_rule: str = "none"
    custom_shifts: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        z = np.asarray(self.orientations, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise ShapeMismatch("positions must be a nonempty 1-d sequence")
        if z.shape != x.shape:
            raise ShapeMismatch(f"orientations shape {z.shape} does not match positions {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidData("positions must be finite")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise PreconditionViolated("positions must be strictly increasing")
        if not np.all(np.abs(z) == 1.0):
            raise InvalidParameter("orientations must be +1 or -1")
        if not 0.0 < self.s < 1.0:
            raise InvalidParameter("s must lie in (0, 1)")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParameter(f"gamma must be positive, got {self.gamma}")
        if not (np.isfinite(self.delta_const) and self.delta_const >= 0):
            raise InvalidParameter(f"delta_const must be nonnegative, got {self.delta_const}")
        if self.initial_shift_rule not in _SHIFT_RULES:
            raise InvalidParameter(f"initial_shift_rule must be one of {_SHIFT_RULES}")
        if self.initial_shift_rule == "custom":
            if self.custom_shifts is None:
                raise InvalidParameter("custom shift rule requires custom_shifts")
            c = np.asarray(self.custom_shifts, dtype=float)
            if c.shape != x.shape:
                raise ShapeMismatch("custom_shifts must match positions in length")
            object.__setattr__(self, "custom_shifts", tuple(float(v) for v in c))
        elif self.custom_shifts is not None:
            raise InvalidParameter("custom_shifts given but initial_shift_rule is not 'custom'")
        if self.stress.kind == "analytic" and self.stress.holder <= self.s:
            raise InvalidParameter(
                f"analytic stress needs Holder exponent > s; got {self.stress.holder} <= {self.s}"
            )
        object.__setattr__(self, "positions", tuple(float(v) for v in x))
        object.__setattr__(self, "orientations", tuple(int(v) for v in z))

    @property
    def n(self):
        return len(self.positions)

    @property
    def zeta(self):
        return np.asarray(self.orientations, dtype=float)

    def initial_positions(self):
        """Starting positions after applying the shift rule."""
        x = np.asarray(self.positions, dtype=float)
        if self.initial_shift_rule == "minus-zeta-delta":
            x = x - self.zeta * self.delta_const
        elif self.initial_shift_rule == "custom":
            x = x + np.asarray(self.custom_shifts, dtype=float)
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise PreconditionViolated("initial shift destroyed the position ordering")
        return x


def ode_rhs(system, t, x):
    """Particle velocities at time t and positions x.

    v_i = gamma (sum_{j != i} zeta_i zeta_j (x_i - x_j) / (2s |x_i - x_j|^{1+2s})
                 - zeta_i sigma(t, x_i) - zeta_i delta_const) - delta'(t).

    The uniform drift sits outside the gamma factor: it is the velocity the
    whole configuration inherits from a slowly translating far field, not a
    force on individual particles.
    """
    x = np.asarray(x, dtype=float)
    n = system.n
    if x.shape != (n,):
        raise ShapeMismatch(f"expected {n} positions, got shape {x.shape}")
    z = system.zeta
    s = system.s
    if n > 1:
        diff = x[:, None] - x[None, :]
        off = ~np.eye(n, dtype=bool)
        if np.any(diff[off] == 0.0):
            raise SingularConfiguration("coincident particle positions")
        np.fill_diagonal(diff, 1.0)
        kernel = diff / (2.0 * s * np.abs(diff) ** (1.0 + 2.0 * s))
        np.fill_diagonal(kernel, 0.0)
        interaction = kernel @ z
    else:
        interaction = np.zeros(1)
    v = system.gamma * (z * interaction - z * system.stress(t, x) - z * system.delta_const)
    if system.delta_drift is not None:
        v = v - system.delta_drift.derivative(t)
    return v


@dataclass(frozen=True)
class StepControl:
    """Adaptive step policy: embedded-pair error control plus a gap cap.

    ``gap_cap`` bounds dt by gap_cap (min gap)^{1+2s} s / gamma, the
    fraction of the closest pair's own time scale a single step may cover.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    gap_cap: float = 0.05
    theta_stop: float = 1e-6
    dt_init: float | None = None
    dt_min: float = 1e-14
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rtol", "atol", "gap_cap", "theta_stop", "dt_min"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if self.dt_init is not None and not self.dt_init > 0:
            raise InvalidParameter("dt_init must be positive when given")
        if self.max_steps < 1:
            raise InvalidParameter("max_steps must be at least 1")


DEFAULT_CONTROL = StepControl()


@dataclass(frozen=True)
class CollisionEvent:
    """A gap reaching the numerical collision threshold.

    ``time`` is the extrapolated collision time; ``stop_time`` the time of
    the accepted step that triggered the halt; ``pair`` the zero-based
    indices (i, i+1) of the closing gap (smallest index on ties);
    ``positions`` the terminal configuration.
    """

    time: float
    stop_time: float
    pair: tuple
    positions: np.ndarray
    gap: float

    def __post_init__(self):
        i, j = self.pair
        if j != i + 1:
            raise InvalidData(f"collision pair must be adjacent, got {self.pair}")
        if not (np.isfinite(self.gap) and self.gap >= 0):
            raise InvalidData(f"collision gap must be finite and nonnegative, got {self.gap}")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled positions of one integration run.

    ``positions`` has one row per entry of ``times``.  When the run ends in
    a collision the terminal state is appended as the final row, so gap
    series end at the stop threshold.
    """

    system: ParticleSystem
    times: np.ndarray
    positions: np.ndarray
    collision: CollisionEvent | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise InvalidData("times must be a nonempty 1-d array")
        if x.shape != (t.size, self.system.n):
            raise ShapeMismatch(f"positions shape {x.shape} does not match times/particles")
        if t.size > 1:
            dt = np.diff(t)
            if not (np.all(dt > 0) or np.all(dt < 0)):
                raise InvalidData("times must be strictly monotone")
        if self.system.n > 1 and not np.all(np.diff(x, axis=1) > 0):
            raise InvalidData("stored positions must stay strictly ordered")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    @property
    def gaps(self):
        """Adjacent gaps theta_i(t) = x_{i+1}(t) - x_i(t), one column per pair."""
        return np.diff(self.positions, axis=1)

    @property
    def min_gap_series(self):
        if self.system.n < 2:
            return np.full(self.times.size, np.inf)
        return np.min(self.gaps, axis=1)


# Dormand-Prince 5(4) tableau; the last stage row equals the fifth-order
# weights, so k7 = f(t+dt, y_new) is reused as k1 of the next step.
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_E = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)


def _rk_step(system, t, y, hs, k1):
    """One Dormand-Prince attempt with signed step hs; returns (y_new, k7, err).

    Overflow in a trial stage (a near-coincident trial state) is left to
    produce non-finite values; the caller treats those as a rejection.
    """
    k = [k1]
    y_stage = y
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(1, 7):
            acc = _DP_A[i][0] * k[0]
            for a, kj in zip(_DP_A[i][1:], k[1:]):
                if a != 0.0:
                    acc = acc + a * kj
            y_stage = y + hs * acc
            k.append(ode_rhs(system, t + _DP_C[i] * hs, y_stage))
        err = hs * sum(e * kj for e, kj in zip(_DP_E, k) if e != 0.0)
    return y_stage, k[6], err


def _quad_root(a, b, c):
    """Smallest nonnegative root of a x^2 + b x + c, or None."""
    roots = []
    if a == 0.0:
        if b != 0.0:
            roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            q = -0.5 * (b + np.copysign(np.sqrt(disc), b if b != 0.0 else 1.0))
            roots.append(q / a)
            if q != 0.0:
                roots.append(c / q)
    pos = [r for r in roots if np.isfinite(r) and r >= 0.0]
    return min(pos) if pos else None


def _extrapolate_collision_time(history, idx, s):
    """Root of theta^{1+2s} along the closing pair, from the last samples.

    The gap law makes theta^{1+2s} locally linear in t near collision;
    a quadratic through the last three accepted samples captures the
    many-body correction.  Falls back to the secant root, then to the
    stop time itself.
    """
    pts = [(t, g[idx]) for t, g in history]
    t_last = pts[-1][0]
    zs = [g ** (1.0 + 2.0 * s) for _, g in pts]
    taus = [t - t_last for t, _ in pts]
    root = None
    if len(pts) >= 3:
        (t0, z0), (t1, z1), (t2, z2) = zip(taus[-3:], zs[-3:])
        if t1 != t0 and t2 != t1 and t2 != t0:
            d01 = (z1 - z0) / (t1 - t0)
            d12 = (z2 - z1) / (t2 - t1)
            a = (d12 - d01) / (t2 - t0)
            root = _quad_root(a, d12 - a * t1, z2)
    if root is None and len(pts) >= 2:
        d = (zs[-1] - zs[-2]) / (taus[-1] - taus[-2])
        if d < 0.0:
            root = -zs[-1] / d
    return t_last + root if root is not None else t_last


def integrate(system, t_end, ctrl=None, sample_times=None):
    """Integrate the particle system on [0, t_end] and sample the trajectory.

    Steps are clipped to land exactly on each requested sample time, so
    samples are integrator states rather than interpolants.  Negative
    t_end integrates the same right-hand side backward.  The run halts
    with a CollisionEvent once the smallest gap reaches ctrl.theta_stop.
    """
    if ctrl is None:
        ctrl = DEFAULT_CONTROL
    if not np.isfinite(t_end) or t_end == 0.0:
        raise InvalidParameter(f"t_end must be finite and nonzero, got {t_end}")
    dirn = 1.0 if t_end > 0 else -1.0
    if sample_times is None:
        samples = np.linspace(0.0, t_end, 201)
    else:
        samples = np.asarray(sample_times, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidData("sample_times must be a nonempty 1-d array")
        if samples.size > 1 and not np.all(dirn * np.diff(samples) > 0):
            raise InvalidData("sample_times must be strictly monotone toward t_end")
        if np.any(dirn * samples < 0) or np.any(dirn * samples > abs(t_end)):
            raise OutOfDomain("sample_times must lie between 0 and t_end")

    n = system.n
    s, gam = system.s, system.gamma
    y = system.initial_positions()
    t = 0.0
    rec_t, rec_x = [], []
    si = 0
    if samples[0] == 0.0:
        rec_t.append(0.0)
        rec_x.append(y.copy())
        si = 1

    history = deque(maxlen=3)
    gaps = np.diff(y)
    history.append((0.0, gaps.copy()))
    collision = None
    if n > 1 and gaps.min() <= ctrl.theta_stop:
        idx = int(np.nonzero(gaps <= ctrl.theta_stop)[0][0])
        collision = CollisionEvent(0.0, 0.0, (idx, idx + 1), y.copy(), float(gaps[idx]))

    def gap_cap():
        if n < 2:
            return np.inf
        return ctrl.gap_cap * history[-1][1].min() ** (1.0 + 2.0 * s) * s / gam

    f1 = ode_rhs(system, 0.0, y)
    h = ctrl.dt_init if ctrl.dt_init is not None else 1e-3 * min(abs(t_end), gap_cap())
    err_prev = 1e-4
    steps = 0
    t_tol = 1e-15 * max(1.0, abs(t_end))

    while collision is None and dirn * t < abs(t_end) - t_tol:
        if steps >= ctrl.max_steps:
            raise NoConvergence(f"step budget {ctrl.max_steps} exhausted at t = {t}")
        steps += 1
        target = samples[si] if si < samples.size else t_end
        dist = dirn * (target - t)
        h_try = min(h, gap_cap())
        landed = h_try >= dist * (1.0 - 1e-12)
        if landed:
            h_try = dist
        try:
            y_new, k_new, err = _rk_step(system, t, y, dirn * h_try, f1)
            with np.errstate(invalid="ignore", over="ignore"):
                scale = ctrl.atol + ctrl.rtol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.sqrt(np.mean((err / scale) ** 2)))
        except SingularConfiguration:
            en = np.inf
            y_new = None
        ordered = y_new is not None and (n < 2 or np.all(np.diff(y_new) > 0))
        if not np.isfinite(en):
            h = 0.1 * h_try
        elif en > 1.0:
            h = max(0.1, 0.9 * en**-0.2) * h_try
        elif not ordered:
            h = 0.5 * h_try
        else:
            t = target if landed else t + dirn * h_try
            gaps = np.diff(y_new)
            history.append((t, gaps.copy()))
            y, f1 = y_new, k_new
            if n > 1 and gaps.min() <= ctrl.theta_stop:
                idx = int(np.nonzero(gaps <= ctrl.theta_stop)[0][0])
                tc = _extrapolate_collision_time(history, idx, s) if dirn > 0 else t
                collision = CollisionEvent(tc, t, (idx, idx + 1), y.copy(), float(gaps[idx]))
                break
            if landed and si < samples.size:
                rec_t.append(target)
                rec_x.append(y.copy())
                si += 1
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en**-0.14 * err_prev**0.08))
            err_prev = max(en, 1e-10)
            h = max(h, h_try * fac) if landed else h_try * fac
            continue
        if h < ctrl.dt_min * max(1.0, abs(t)):
            raise StiffnessFailure(f"step size underflowed at t = {t} with min gap above theta_stop")

    if collision is not None and (not rec_t or rec_t[-1] != t):
        rec_t.append(t)
        rec_x.append(y.copy())
    return TrajectoryRecord(system, np.asarray(rec_t), np.asarray(rec_x), collision)


def collision_time_bound(theta0, s, gamma, sup_sigma=0.0):
    """Upper bound on the collision time of a gap of size theta0.

    Returns s theta0^{1+2s} / ((2s+1) gamma (1 - 2s theta0^{2s} sup_sigma)),
    or None when 1 - 2s theta0^{2s} sup_sigma <= 0 and the bound says
    nothing.  Equality holds for an isolated opposite pair at sigma = 0.
    """
    if not theta0 > 0:
        raise InvalidParameter(f"theta0 must be positive, got {theta0}")
    if not 0.0 < s < 1.0:
        raise InvalidParameter("s must lie in (0, 1)")
    if not gamma > 0:
        raise InvalidParameter(f"gamma must be positive, got {gamma}")
    if sup_sigma < 0:
        raise InvalidParameter(f"sup_sigma must be nonnegative, got {sup_sigma}")
    den = 1.0 - 2.0 * s * theta0 ** (2.0 * s) * sup_sigma
    if den <= 0.0:
        return None
    return s * theta0 ** (1.0 + 2.0 * s) / ((2.0 * s + 1.0) * gamma * den)


@dataclass(frozen=True)
class ExpansionFit:
    """Power-law fit min_gap ~ constant (1 + t)^exponent."""

    exponent: float
    constant: float
    r_squared: float


def expansion_fit(record, window):
    """Fit the spreading law of a repelling family on a time window.

    Log-log least squares of the minimum gap against (1 + t) over
    window = (t_lo, t_hi); the window should exclude the initial
    transient where the gap still remembers theta(0).
    """
    z = record.system.zeta
    if not np.all(z == z[0]):
        raise PreconditionViolated("expansion law applies to same-orientation systems")
    if record.collision is not None:
        raise PreconditionViolated("expansion law needs a collision-free run")
    t_lo, t_hi = window
    t = record.times
    g = record.min_gap_series
    mask = (t >= t_lo) & (t <= t_hi)
    if np.count_nonzero(mask) < 10:
        raise InsufficientData(f"need at least 10 samples in window, got {np.count_nonzero(mask)}")
    xs = np.log1p(t[mask])
    ys = np.log(g[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    total = ys - ys.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total) if total.any() else 1.0
    return ExpansionFit(float(slope), float(np.exp(intercept)), r2)


@dataclass(frozen=True)
class MidpointDriftReport:
    """Observed vs predicted midpoint motion of a symmetric repelling family."""

    times: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray
    max_deviation: float


def midpoint_drift_check(record, delta_drift=None):
    """Check the exact midpoint law of symmetric same-orientation runs.

    For N = 2m the sum x_{m+1}(t) + x_m(t) moves by 2 delta(0) - 2 delta(t)
    from its initial value; for N = 2m+1 the middle particle itself moves by
    delta(0) - delta(t).  Requires the record to start at t = 0 with
    initial positions symmetric about their center.
    """
    sys = record.system
    z = sys.zeta
    if not np.all(z == z[0]):
        raise PreconditionViolated("midpoint law applies to same-orientation systems")
    if record.times[0] != 0.0:
        raise PreconditionViolated("record must start at t = 0")
    x0 = record.positions[0]
    center = 0.5 * (x0[0] + x0[-1])
    if np.max(np.abs(x0 + x0[::-1] - 2.0 * center)) > 1e-9:
        raise PreconditionViolated("initial positions must be symmetric about their center")
    if delta_drift is None:
        delta_drift = sys.delta_drift
    times = record.times
    if delta_drift is None:
        dvals = np.zeros(times.size)
        d0 = 0.0
    else:
        dvals = np.asarray([delta_drift.value(float(t)) for t in times], dtype=float)
        d0 = float(delta_drift.value(0.0))
    m = sys.n // 2
    if sys.n % 2 == 0:
        observed = record.positions[:, m - 1] + record.positions[:, m]
        predicted = x0[m - 1] + x0[m] + 2.0 * d0 - 2.0 * dvals
    else:
        observed = record.positions[:, m]
        predicted = x0[m] + d0 - dvals
    dev = float(np.max(np.abs(observed - predicted)))
    return MidpointDriftReport(times, observed, predicted, dev)
