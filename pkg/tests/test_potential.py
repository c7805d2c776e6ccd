import numpy as np
import pytest

from dislocade import InvalidParameter, make_analytic_potential, make_cosine_potential, validate_potential


def test_cosine_closed_form_values():
    a = 0.3
    P = make_cosine_potential(a)
    assert P.w(0.0) == pytest.approx(0.0, abs=1e-15)
    assert P.w(0.5) == pytest.approx(2 * a)
    assert P.wprime(0.25) == pytest.approx(2 * np.pi * a)
    assert P.beta == pytest.approx(4 * np.pi**2 * a)


def test_default_amplitude_gives_beta_pi():
    P = make_cosine_potential()
    assert P.beta == pytest.approx(np.pi, abs=1e-12)


def test_amplitude_must_be_positive():
    with pytest.raises(InvalidParameter):
        make_cosine_potential(0.0)
    with pytest.raises(InvalidParameter):
        make_cosine_potential(-1.0)


def test_validate_accepts_cosine():
    report = validate_potential(make_cosine_potential())
    assert report.ok
    assert all(passed for passed, _, _ in report.checks.values())


def test_validate_flags_lifted_well():
    P = make_analytic_potential(
        lambda v: 1.0 - np.cos(2 * np.pi * np.asarray(v)) + 0.1,
        lambda v: 2 * np.pi * np.sin(2 * np.pi * np.asarray(v)),
        lambda v: 4 * np.pi**2 * np.cos(2 * np.pi * np.asarray(v)),
    )
    report = validate_potential(P)
    assert not report.ok
    assert not report.checks["zero_on_integers"][0]
    assert report.checks["periodic"][0]


def test_validate_flags_inverted_well():
    P = make_analytic_potential(
        lambda v: -(1.0 - np.cos(2 * np.pi * np.asarray(v))),
        lambda v: -2 * np.pi * np.sin(2 * np.pi * np.asarray(v)),
        lambda v: -4 * np.pi**2 * np.cos(2 * np.pi * np.asarray(v)),
    )
    report = validate_potential(P)
    assert not report.ok
    assert not report.checks["well_curvature"][0]
    assert not report.checks["positive_off_integers"][0]


def test_validate_flags_aperiodic():
    P = make_analytic_potential(lambda v: np.asarray(v) ** 2, lambda v: 2 * np.asarray(v), lambda v: 2.0 + 0 * np.asarray(v))
    report = validate_potential(P)
    assert not report.ok
    assert not report.checks["periodic"][0]
