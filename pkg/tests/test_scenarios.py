"""Scenario orchestration, event bookkeeping, and verdict plumbing tests."""

import math
import types

import numpy as np
import pytest

from dislocade import (
    CollisionRecord,
    GridFunction,
    InvalidData,
    InvalidParameter,
    PreconditionViolated,
    Scenario,
    ScenarioAnomaly,
    ScenarioResult,
    ShapeMismatch,
    TailModel,
    Verdict,
    VerificationReport,
    canonical_dumps,
    integrate,
    make_cosine_potential,
    reference_layer,
    run_criterion,
    run_scenario,
    standard_scenario,
    verify_suite,
)
from dislocade.particles import ParticleSystem
from dislocade.scenarios import (
    _T_TWO_BODY,
    _clocked_power_fit,
    _plateau_deviation,
    _tail_band,
)

T_TWO_BODY = _T_TWO_BODY


# -- shared runs (module scope: each takes seconds, many tests read them) -----


@pytest.fixture(scope="module")
def balanced_run():
    sc = standard_scenario("balanced", 2, epsilon=0.05, s=0.5, horizon=0.06,
                           n_samples=241, margin=12.0)
    return run_scenario(sc)


@pytest.fixture(scope="module")
def even_pair_run():
    sc = standard_scenario("unbalanced", 2, 2, epsilon=0.1, s=0.5, horizon=0.5,
                           n_samples=81, margin=12.0)
    return run_scenario(sc)


@pytest.fixture(scope="module")
def single_layer_run():
    calls = []

    def hook(t, snap):
        calls.append((t, snap.samples.size))

    sc = standard_scenario("unbalanced", 1, 1, epsilon=0.1, s=0.5, horizon=0.3,
                           n_samples=61, margin=10.0, hooks=(hook,))
    return run_scenario(sc), calls


@pytest.fixture(scope="module")
def segregate_run():
    sc = standard_scenario("segregate", 4, 2, epsilon=0.1, s=0.5, horizon=0.06,
                           n_samples=121, margin=12.0)
    return run_scenario(sc)


# -- scenario construction and validation --------------------------------------


def test_scenario_normalizes_fields():
    sc = Scenario("custom", [1, -1.0], [-1, 1.0], 0.1, 0.5, 1.0, hooks=[abs])
    assert sc.orientations == (1, -1)
    assert sc.centers == (-1.0, 1.0)
    assert sc.hooks == (abs,)
    assert sc.n == 2 and sc.k_positive == 1 and sc.surplus == 0


def test_scenario_rejects_bad_fields():
    ok = dict(kind="custom", orientations=(1, -1), centers=(-1.0, 1.0),
              epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "kind": "cascade"})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "orientations": (1, 0)})
    with pytest.raises(InvalidData):
        Scenario(**{**ok, "orientations": (1,)})
    with pytest.raises(InvalidData):
        Scenario(**{**ok, "centers": (1.0, -1.0)})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "s": 1.0})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "epsilon": 0.0})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "horizon": -1.0})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "n_samples": 1})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "dx": 0.0})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "margin": 0.0})
    with pytest.raises(InvalidParameter):
        Scenario(**{**ok, "hooks": (1,)})


def test_scenario_pattern_invariants():
    with pytest.raises(PreconditionViolated):
        Scenario("segregate", (1, -1, 1), (-1.0, 0.0, 1.0), 0.1, 0.5, 1.0)
    with pytest.raises(PreconditionViolated):
        Scenario("segregate", (1, 1), (-1.0, 1.0), 0.1, 0.5, 1.0)
    with pytest.raises(PreconditionViolated):
        Scenario("balanced", (1, 1), (-1.0, 1.0), 0.1, 0.5, 1.0)
    with pytest.raises(PreconditionViolated):
        Scenario("unbalanced", (1, -1), (-1.0, 1.0), 0.1, 0.5, 1.0)


def test_standard_scenario_patterns():
    sg = standard_scenario("segregate", 4, 2, epsilon=0.1, s=0.5, horizon=1.0)
    assert sg.orientations == (1, 1, -1, -1)
    assert sg.centers == (-1.5, -0.5, 0.5, 1.5)
    ba = standard_scenario("balanced", 4, epsilon=0.1, s=0.5, horizon=1.0,
                           gap=2.0)
    assert ba.orientations == (1, -1, 1, -1)
    assert ba.centers == (-3.0, -1.0, 1.0, 3.0)
    ub = standard_scenario("unbalanced", 5, 4, epsilon=0.1, s=0.5, horizon=1.0)
    assert ub.orientations == (-1, 1, 1, 1, 1)
    assert ub.surplus == 3


def test_standard_scenario_rejects_bad_requests():
    with pytest.raises(InvalidParameter):
        standard_scenario("segregate", 4, 4, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("balanced", 3, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("balanced", 4, 1, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("unbalanced", 4, 2, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("custom", 2, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("balanced", 0, epsilon=0.1, s=0.5, horizon=1.0)
    with pytest.raises(InvalidParameter):
        standard_scenario("balanced", 2, epsilon=0.1, s=0.5, horizon=1.0,
                          gap=0.0)


def test_run_scenario_desk_bounds():
    big = standard_scenario("unbalanced", 9, 9, epsilon=0.1, s=0.5, horizon=0.1)
    with pytest.raises(PreconditionViolated):
        run_scenario(big)
    fine = standard_scenario("balanced", 2, epsilon=0.01, s=0.5, horizon=0.1)
    with pytest.raises(PreconditionViolated):
        run_scenario(fine)


def test_run_scenario_custom_potential_needs_layer():
    sc = standard_scenario("balanced", 2, epsilon=0.1, s=0.5, horizon=0.1)
    with pytest.raises(InvalidParameter):
        run_scenario(sc, potential=make_cosine_potential())


# -- event records and result assembly ------------------------------------------


def _record(index=1, time=0.1, completed=0.12, duration=0.1, location=0.0,
            before=4, after=2):
    return CollisionRecord(index, time, completed, duration, location,
                           before, after)


def test_collision_record_validation():
    with pytest.raises(InvalidData):
        _record(index=0)
    with pytest.raises(InvalidData):
        _record(duration=0.0)
    with pytest.raises(InvalidData):
        _record(after=3)
    with pytest.raises(InvalidData):
        _record(completed=0.05)


def test_scenario_result_validation():
    sc = Scenario("custom", (1, -1), (-1.0, 1.0), 0.1, 0.5, 1.0)
    ev = types.SimpleNamespace(times=np.linspace(0.0, 1.0, 5))
    dev = np.zeros(5)
    e1 = _record()
    e2 = _record(index=2, time=0.3, completed=0.32, duration=0.2, before=2,
                 after=0)
    ScenarioResult(sc, ev, (e1, e2), dev, (0.1, 0.1))
    out_of_order = _record(index=2, time=0.05, completed=0.32, duration=0.2,
                           before=2, after=0)
    with pytest.raises(InvalidData):
        ScenarioResult(sc, ev, (e1, out_of_order), dev, (0.1, 0.1))
    unchained = _record(index=2, time=0.3, completed=0.32, duration=0.2,
                        before=4, after=2)
    with pytest.raises(InvalidData):
        ScenarioResult(sc, ev, (e1, unchained), dev, (0.1, 0.1))
    with pytest.raises(InvalidData):
        ScenarioResult(sc, ev, (e1, e2), dev, (0.1,))
    with pytest.raises(InvalidData):
        ScenarioResult(sc, ev, (e1, e2), np.zeros(4), (0.1, 0.1))


def test_scenario_result_phase_properties():
    sc = Scenario("custom", (1, -1), (-1.0, 1.0), 0.1, 0.5, 1.0)
    ev = types.SimpleNamespace(times=np.linspace(0.0, 1.0, 5))
    res = ScenarioResult(sc, ev, (_record(),), np.zeros(5), (0.2,))
    assert res.total_collision_time == pytest.approx(0.1)
    assert res.phase_durations == (0.1,)
    empty = ScenarioResult(sc, ev, (), np.zeros(5), ())
    assert empty.total_collision_time == 0.0
    assert empty.phase_durations == ()


# -- balanced pair: collision near the two-body time, then exponential decay ---


def test_balanced_pair_collision_time(balanced_run):
    assert len(balanced_run.events) == 1
    e = balanced_run.events[0]
    assert (e.count_before, e.count_after) == (2, 0)
    assert abs(e.time / T_TWO_BODY - 1.0) <= 0.25
    assert abs(e.location) <= 0.1
    assert int(balanced_run.evolution.crossing_counts[-1]) == 0


def test_balanced_pair_exponential_tail(balanced_run):
    fit = balanced_run.terminal_fit
    assert fit is not None and fit.kind == "exponential"
    eps = balanced_run.scenario.epsilon
    beta = reference_layer(0.5).beta
    assert fit.rate >= beta / (2.0 * eps ** 2.0)
    assert fit.r_squared >= 0.95


def test_balanced_pair_report(balanced_run):
    r = balanced_run.report
    assert r.scenario == "balanced" and r.l == 0 and r.m == 0
    assert r.relaxation_time == pytest.approx(balanced_run.events[0].time)
    assert r.drift_alpha is None and r.center_bracket is None
    assert r.residual_amplitude == pytest.approx(balanced_run.terminal_fit.amplitude)


def test_balanced_pair_ledger_and_phases(balanced_run):
    ev = balanced_run.evolution
    e = balanced_run.events[0]
    assert len(balanced_run.amplitude_ledger) == 1
    done = np.nonzero(ev.times >= e.completed - 1e-12)[0]
    assert balanced_run.amplitude_ledger[0] == pytest.approx(
        float(np.max(balanced_run.deviations[done]))
    )
    assert balanced_run.total_collision_time == pytest.approx(e.time)
    assert balanced_run.phase_durations == (pytest.approx(e.duration),)
    assert balanced_run.deviations.shape == ev.times.shape


def test_balanced_pair_relaxes_below_collision_amplitude(balanced_run):
    ev = balanced_run.evolution
    e = balanced_run.events[0]
    i_done = int(np.nonzero(ev.times >= e.completed - 1e-12)[0][0])
    sup_done = float(np.max(np.abs(ev.snapshots[i_done].samples)))
    sup_end = float(np.max(np.abs(ev.snapshots[-1].samples)))
    assert sup_end < sup_done


def test_crossing_count_parity(balanced_run, segregate_run):
    for res in (balanced_run, segregate_run):
        diffs = set(np.diff(res.evolution.crossing_counts).tolist())
        assert diffs <= {0, -2}


# -- even surplus: receding pair, power-law band, plateau containment ----------


def test_even_pair_has_no_events(even_pair_run):
    assert even_pair_run.events == ()
    assert even_pair_run.amplitude_ledger == ()
    assert even_pair_run.total_collision_time == 0.0


def test_even_pair_gap_growth(even_pair_run):
    gamma = reference_layer(0.5).gamma
    xs0 = even_pair_run.evolution.crossings[0]
    xs1 = even_pair_run.evolution.crossings[-1]
    theta0 = float(xs0[1] - xs0[0])
    theta1 = float(xs1[1] - xs1[0])
    horizon = even_pair_run.scenario.horizon
    predicted = math.sqrt(theta0 ** 2 + 4.0 * gamma * horizon)
    assert abs(theta1 / predicted - 1.0) <= 0.05


def test_even_pair_power_fit(even_pair_run):
    fit = even_pair_run.terminal_fit
    assert fit is not None and fit.kind == "power"
    s = even_pair_run.scenario.s
    assert abs(fit.rate - 2.0 * s / (1.0 + 2.0 * s)) <= 0.1
    assert fit.r_squared >= 0.995


def test_even_pair_report(even_pair_run):
    r = even_pair_run.report
    assert r.scenario == "unbalanced-even" and r.l == 2 and r.m == 1
    assert r.drift_alpha is None and r.center_bracket is None


def test_even_pair_plateau_inside_band(even_pair_run):
    sc = even_pair_run.scenario
    ev = even_pair_run.evolution
    beta = reference_layer(sc.s).beta
    late = np.nonzero(ev.times >= 0.5 * sc.horizon)[0]
    for i in late:
        band = _tail_band(ev.crossings[i], sc.centers[0], sc.centers[-1],
                          sc.epsilon, sc.s, beta)
        snap = ev.snapshots[i]
        xs = snap.x0 + snap.dx * np.arange(snap.samples.size)
        inside = (xs >= sc.centers[0]) & (xs <= sc.centers[-1])
        avg = float(np.mean(snap.samples[inside]))
        assert abs(avg - 1.0) <= band
        assert _plateau_deviation(snap, sc.centers[0], sc.centers[-1], 1.0) <= band


# -- odd surplus: a single surviving crossing ----------------------------------


def test_single_layer_report_and_drift(single_layer_run):
    res, _ = single_layer_run
    assert res.events == ()
    r = res.report
    assert r.scenario == "unbalanced-odd" and r.l == 1 and r.m == 0
    assert abs(r.drift_alpha) <= 1e-6
    lo, hi = r.center_bracket
    assert max(abs(lo), abs(hi)) <= 1e-6


def test_single_layer_connects_plateaus(single_layer_run):
    res, _ = single_layer_run
    snap = res.evolution.snapshots[-1]
    assert abs(snap.samples[0]) <= 0.05
    assert abs(snap.samples[-1] - 1.0) <= 0.05
    assert int(res.evolution.crossing_counts[-1]) == 1


def test_hooks_see_every_retained_sample(single_layer_run):
    res, calls = single_layer_run
    sc = res.scenario
    assert len(calls) == sc.n_samples
    times = np.array([t for t, _ in calls])
    assert np.allclose(times, np.linspace(0.0, sc.horizon, sc.n_samples))
    assert all(n == res.evolution.snapshots[0].samples.size for _, n in calls)


# -- segregated cascade: middle pair first, survivors follow the reduced ODE ---


def test_segregate_middle_pair_collides_first(segregate_run):
    assert segregate_run.events
    e = segregate_run.events[0]
    assert (e.count_before, e.count_after) == (4, 2)
    assert abs(e.location) <= 0.5
    assert e.time < T_TWO_BODY


def test_segregate_survivors_track_reduced_system(segregate_run):
    ev = segregate_run.evolution
    sc = segregate_run.scenario
    tail = np.nonzero(ev.crossing_counts == 2)[0]
    assert tail.size >= 10
    t0 = float(ev.times[tail[0]])
    survivors = tuple(float(p) for p in ev.crossings[tail[0]])
    reduced = ParticleSystem(survivors, (1, -1), sc.s,
                             reference_layer(sc.s).gamma)
    rec = integrate(reduced, sc.horizon - t0, sample_times=ev.times[tail] - t0)
    tracked = np.vstack([ev.crossings[i] for i in tail])
    assert float(np.max(np.abs(tracked - rec.positions))) <= 5.0 * sc.epsilon


# -- anomaly paths --------------------------------------------------------------


def test_overlapping_cores_are_an_anomaly():
    sc = Scenario("balanced", (1, -1), (-0.08, 0.08), 0.1, 0.5, 0.01,
                  n_samples=5)
    with pytest.raises(ScenarioAnomaly, match="gaps are too small"):
        run_scenario(sc)


def test_window_escape_is_an_anomaly():
    sc = standard_scenario("unbalanced", 2, 2, epsilon=0.1, s=0.25,
                           horizon=0.4, n_samples=41, margin=6.0)
    with pytest.raises(ScenarioAnomaly, match="tail-fit band"):
        run_scenario(sc)


# -- fit and band helpers --------------------------------------------------------


def test_clocked_power_fit_recovers_offset_law():
    tau = np.linspace(0.0, 3.0, 200)
    values = 2.0 * (0.04 + tau) ** -0.75
    fit, offset = _clocked_power_fit(tau, values)
    assert fit.kind == "power"
    assert abs(fit.rate - 0.75) <= 1e-3
    assert abs(offset / 0.04 - 1.0) <= 0.05
    assert abs(fit.amplitude / 2.0 - 1.0) <= 1e-2
    assert fit.r_squared >= 1.0 - 1e-6


def test_clocked_power_fit_rejects_constant_series():
    tau = np.linspace(0.0, 1.0, 30)
    with pytest.raises(InvalidData):
        _clocked_power_fit(tau, np.full(30, 2.0))


def test_tail_band_closed_form():
    band = _tail_band((0.0,), 3.0, 5.0, 0.1, 0.5, 1.0)
    assert band == pytest.approx((0.1 / 3.0) / 1.0)
    pair = _tail_band((-4.0, 4.0), -1.0, 1.0, 0.1, 0.5, 2.0)
    assert pair == pytest.approx((0.1 / 3.0 + 0.1 / 5.0) / 2.0)
    assert math.isinf(_tail_band((3.05,), 3.0, 5.0, 0.1, 0.5, 1.0))


def test_plateau_deviation_samples_window():
    g = GridFunction(-1.0, 0.5, np.array([1.0, 1.2, 0.9, 1.0, 1.05]),
                     TailModel(0.0, 0.0, 1.0))
    assert _plateau_deviation(g, -0.6, 0.7, 1.0) == pytest.approx(0.2)
    with pytest.raises(ShapeMismatch):
        _plateau_deviation(g, 0.1, 0.2, 1.0)


# -- verdict plumbing -------------------------------------------------------------


def test_verdict_summary_excludes_runtime():
    v = Verdict("A0", "demo", True, {"x": 1.0}, {"tol": 0.1}, 1.23)
    summary = v.summary()
    assert "runtime_s" not in summary
    assert summary["criterion"] == "A0" and summary["passed"] is True


def test_verification_report_payload():
    v1 = Verdict("A0", "demo", True, {}, {}, 0.5)
    v2 = Verdict("A0b", "demo2", False, {}, {}, 0.5)
    rep = VerificationReport("ode", 0, (v1, v2))
    assert not rep.all_passed
    payload = rep.summary_payload()
    assert payload["schema"] == 1 and payload["scope"] == "ode"
    assert [x["criterion"] for x in payload["verdicts"]] == ["A0", "A0b"]
    assert rep.summary_json() == canonical_dumps(payload)


def test_run_criterion_rejects_unknown_name():
    with pytest.raises(InvalidParameter):
        run_criterion("A99")
    with pytest.raises(InvalidParameter):
        verify_suite("everything")


def test_two_body_criterion_smoke():
    v = run_criterion("A3")
    assert v.criterion == "A3" and v.passed
    assert v.measured and v.pinned and v.runtime_s >= 0.0


def test_ode_scope_passes():
    rep = verify_suite("ode")
    assert rep.scope == "ode"
    assert [v.criterion for v in rep.verdicts] == ["A1", "A2", "A3", "A4"]
    assert rep.all_passed
