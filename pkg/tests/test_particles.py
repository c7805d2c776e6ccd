import numpy as np
import pytest

from dislocade import (
    InsufficientData,
    InvalidData,
    InvalidParameter,
    OutOfDomain,
    PreconditionViolated,
    SingularConfiguration,
)
from dislocade.particles import (
    DriftModel,
    ParticleSystem,
    StepControl,
    StressModel,
    analytic_stress,
    collision_time_bound,
    constant_stress,
    expansion_fit,
    integrate,
    midpoint_drift_check,
    ode_rhs,
)

GAMMA = 2.0 * np.pi
T_C = 1.0 / (8.0 * np.pi)


def opposite_pair(**kw):
    return ParticleSystem((0.0, 1.0), (1, -1), 0.5, GAMMA, **kw)


def same_pair(s=0.5):
    return ParticleSystem((0.0, 1.0), (1, 1), s, GAMMA)


def test_velocities_opposite_pair():
    v = ode_rhs(opposite_pair(), 0.0, np.array([0.0, 1.0]))
    assert v == pytest.approx([GAMMA, -GAMMA], abs=1e-12)


def test_velocities_same_pair():
    v = ode_rhs(same_pair(), 0.0, np.array([0.0, 1.0]))
    assert v == pytest.approx([-GAMMA, GAMMA], abs=1e-12)


def test_velocity_single_particle_under_stress():
    sys1 = ParticleSystem((0.0,), (1,), 0.5, GAMMA, stress=constant_stress(0.1))
    v = ode_rhs(sys1, 0.0, np.array([0.0]))
    assert v == pytest.approx([-0.2 * np.pi], abs=1e-12)


def test_coincident_positions_rejected():
    with pytest.raises(SingularConfiguration):
        ode_rhs(opposite_pair(), 0.0, np.array([0.5, 0.5]))


def test_collision_time_canonical():
    rec = integrate(opposite_pair(), 0.1)
    assert rec.collision is not None
    assert rec.collision.pair == (0, 1)
    assert rec.collision.gap <= 1e-6
    assert rec.collision.time == pytest.approx(T_C, rel=1e-6)


def test_same_orientation_gap_law():
    rec = integrate(same_pair(), 1.0)
    assert rec.collision is None
    theta1 = rec.positions[-1, 1] - rec.positions[-1, 0]
    assert theta1 == pytest.approx(np.sqrt(1.0 + 8.0 * np.pi), abs=1e-8)


def test_center_of_mass_conserved():
    sys4 = ParticleSystem((-1.5, -0.5, 0.5, 1.5), (1, 1, 1, 1), 0.5, GAMMA)
    rec = integrate(sys4, 5.0)
    sums = rec.positions.sum(axis=1)
    assert np.max(np.abs(sums - sums[0])) <= 1e-8


def test_collision_bound_closed_forms():
    assert collision_time_bound(1.0, 0.5, GAMMA) == pytest.approx(T_C, rel=1e-12)
    assert collision_time_bound(2.0, 0.5, GAMMA) == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-12)
    assert collision_time_bound(1.0, 0.5, GAMMA, sup_sigma=1.2) is None
    with pytest.raises(InvalidParameter):
        collision_time_bound(0.0, 0.5, GAMMA)


def test_bound_is_attained_by_isolated_pair():
    rec = integrate(opposite_pair(), 0.1)
    bound = collision_time_bound(1.0, 0.5, GAMMA)
    assert rec.collision.time <= bound * (1.0 + 1e-9)
    assert rec.collision.time == pytest.approx(bound, rel=1e-6)


@pytest.mark.parametrize("s, expo", [(0.25, 2.0 / 3.0), (0.5, 0.5)])
def test_expansion_exponent_two_body(s, expo):
    rec = integrate(same_pair(s), 300.0, sample_times=np.linspace(0.0, 300.0, 400))
    fit = expansion_fit(rec, (20.0, 300.0))
    assert fit.exponent == pytest.approx(expo, abs=0.02)
    assert fit.r_squared > 0.999


def test_expansion_exponent_four_body():
    sys4 = ParticleSystem((-1.5, -0.5, 0.5, 1.5), (1, 1, 1, 1), 0.5, GAMMA)
    rec = integrate(sys4, 300.0, sample_times=np.linspace(0.0, 300.0, 400))
    fit = expansion_fit(rec, (20.0, 300.0))
    assert fit.exponent == pytest.approx(0.5, abs=0.05)


def test_expansion_fit_preconditions():
    rec = integrate(same_pair(), 1.0)
    with pytest.raises(InsufficientData):
        expansion_fit(rec, (0.99, 1.0))
    mixed = integrate(opposite_pair(), 0.5 * T_C, sample_times=np.linspace(0.0, 0.5 * T_C, 50))
    with pytest.raises(PreconditionViolated):
        expansion_fit(mixed, (0.0, 0.5 * T_C))


def test_perturbed_trajectories_converge_as_delta_vanishes():
    ts = np.linspace(0.0, 0.9 * T_C, 81)
    base = integrate(opposite_pair(), 0.9 * T_C, sample_times=ts)
    sups = []
    for d in (1e-2, 1e-3, 1e-4):
        pert = opposite_pair(delta_const=d, initial_shift_rule="minus-zeta-delta")
        rec = integrate(pert, 0.9 * T_C, sample_times=ts)
        sups.append(np.max(np.abs(rec.positions - base.positions)))
    assert sups[0] > sups[1] > sups[2]


def test_translation_invariance():
    a = 3.5
    r0 = integrate(ParticleSystem((0.0, 1.0, 2.5), (1, -1, 1), 0.5, GAMMA), 0.01)
    r1 = integrate(ParticleSystem((a, 1.0 + a, 2.5 + a), (1, -1, 1), 0.5, GAMMA), 0.01)
    assert np.max(np.abs(r1.positions - r0.positions - a)) <= 1e-10


def test_time_reversal_recovers_initial_positions():
    fwd = integrate(same_pair(), 1.0)
    back = integrate(ParticleSystem(tuple(fwd.positions[-1]), (1, 1), 0.5, GAMMA), -1.0)
    assert np.max(np.abs(back.positions[-1] - np.array([0.0, 1.0]))) <= 1e-6


def test_midpoint_even_no_drift():
    rec = integrate(ParticleSystem((-0.5, 0.5), (1, 1), 0.5, GAMMA), 1.0)
    report = midpoint_drift_check(rec)
    assert report.max_deviation <= 1e-8


def test_midpoint_odd_with_drift():
    drift = DriftModel(
        lambda t: 0.1 * (1.0 + t) ** (2.0 / 3.0),
        lambda t: 0.1 * (2.0 / 3.0) * (1.0 + t) ** (-1.0 / 3.0),
    )
    sys3 = ParticleSystem((-1.0, 0.0, 1.0), (1, 1, 1), 0.25, GAMMA, delta_drift=drift)
    rec = integrate(sys3, 2.0)
    report = midpoint_drift_check(rec)
    assert report.max_deviation <= 1e-6
    explicit = -0.1 * ((1.0 + rec.times) ** (2.0 / 3.0) - 1.0)
    assert np.max(np.abs(rec.positions[:, 1] - explicit)) <= 1e-6


def test_midpoint_constant_drift_cancels():
    drift = DriftModel(lambda t: 0.3, lambda t: 0.0)
    sys4 = ParticleSystem((-1.5, -0.5, 0.5, 1.5), (1, 1, 1, 1), 0.5, GAMMA, delta_drift=drift)
    report = midpoint_drift_check(integrate(sys4, 1.0))
    assert report.max_deviation <= 1e-8


def test_midpoint_check_preconditions():
    mixed = integrate(opposite_pair(), 0.5 * T_C, sample_times=np.linspace(0.0, 0.5 * T_C, 20))
    with pytest.raises(PreconditionViolated):
        midpoint_drift_check(mixed)
    lopsided = integrate(ParticleSystem((0.0, 1.0, 5.0), (1, 1, 1), 0.5, GAMMA), 0.1)
    with pytest.raises(PreconditionViolated):
        midpoint_drift_check(lopsided)


def test_order_preserved_at_all_samples():
    sys4 = ParticleSystem((-2.0, -1.0, 1.0, 2.0), (1, 1, -1, -1), 0.5, GAMMA)
    rec = integrate(sys4, 0.02)
    assert np.all(rec.gaps > 0)


def test_two_body_gap_strictly_decreasing():
    ts = np.linspace(0.0, 0.9 * T_C, 81)
    rec = integrate(opposite_pair(), 0.9 * T_C, sample_times=ts)
    assert np.all(np.diff(rec.min_gap_series) < 0)


def test_collision_tie_resolved_by_smallest_index():
    # alternating orientations close the two outer gaps simultaneously
    sysb = ParticleSystem((0.0, 1.0, 2.0, 3.0), (1, -1, 1, -1), 0.5, GAMMA)
    rec = integrate(sysb, 1.0)
    assert rec.collision is not None
    assert rec.collision.pair == (0, 1)


def test_initial_shift_rules():
    pert = opposite_pair(delta_const=0.01, initial_shift_rule="minus-zeta-delta")
    assert pert.initial_positions() == pytest.approx([-0.01, 1.01])
    cust = ParticleSystem(
        (0.0, 1.0), (1, -1), 0.5, GAMMA, initial_shift_rule="custom", custom_shifts=(0.1, -0.1)
    )
    assert cust.initial_positions() == pytest.approx([0.1, 0.9])
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, -1), 0.5, GAMMA, initial_shift_rule="custom")
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, -1), 0.5, GAMMA, custom_shifts=(0.1, -0.1))
    with pytest.raises(PreconditionViolated):
        ParticleSystem(
            (0.0, 0.1), (-1, 1), 0.5, GAMMA, delta_const=0.2, initial_shift_rule="minus-zeta-delta"
        ).initial_positions()


def test_system_validation():
    with pytest.raises(PreconditionViolated):
        ParticleSystem((1.0, 0.0), (1, -1), 0.5, GAMMA)
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, 2), 0.5, GAMMA)
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, -1), 1.5, GAMMA)
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, -1), 0.5, -1.0)


def test_stress_model_validation():
    with pytest.raises(InvalidParameter):
        StressModel(kind="ramp")
    with pytest.raises(InvalidParameter):
        StressModel(kind="analytic", bound=1.0, holder=0.9)  # missing func
    with pytest.raises(InvalidParameter):
        analytic_stress(lambda t, x: 0 * x, bound=1.0, holder=1.5)
    # declared Holder exponent must exceed s
    sm = analytic_stress(lambda t, x: 0 * x, bound=1.0, holder=0.6)
    with pytest.raises(InvalidParameter):
        ParticleSystem((0.0, 1.0), (1, -1), 0.75, GAMMA, stress=sm)


def test_sample_times_validation():
    with pytest.raises(InvalidData):
        integrate(same_pair(), 1.0, sample_times=np.array([0.0, 0.5, 0.3]))
    with pytest.raises(OutOfDomain):
        integrate(same_pair(), 1.0, sample_times=np.array([0.0, 2.0]))
    with pytest.raises(InvalidParameter):
        integrate(same_pair(), 0.0)


def test_step_control_validation():
    with pytest.raises(InvalidParameter):
        StepControl(rtol=0.0)
    with pytest.raises(InvalidParameter):
        StepControl(max_steps=0)


def test_record_properties():
    rec = integrate(same_pair(), 1.0)
    assert rec.gaps.shape == (rec.times.size, 1)
    single = integrate(ParticleSystem((0.0,), (1,), 0.5, GAMMA), 1.0)
    assert np.all(np.isinf(single.min_gap_series))


def test_collision_run_ends_at_terminal_state():
    rec = integrate(opposite_pair(), 0.1)
    assert rec.times[-1] == rec.collision.stop_time
    assert np.all(rec.positions[-1] == rec.collision.positions)
    assert rec.min_gap_series[-1] <= 1e-6
