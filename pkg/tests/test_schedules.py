"""Tests for schedules.py."""

# Standard library modules
import math

# Third party modules
import numpy as np
import pytest
from scipy.integrate import quad

# Project modules
from stagrover.counterdiabatic import error_functionals
from stagrover.errors import ConfigurationError, ScheduleRangeError
from stagrover.schedules import (FAMILIES, ScheduleSpec, build_quadrature_table,
                                 constraint_metric, eval_schedule,
                                 invert_quadrature, load_tabulated,
                                 sample_schedule, solve_euler_lagrange,
                                 tabulated_spec)

BUILT_IN = ['linear-naive', 'qab-linear', 'cd-linear', 'qab-quadratic',
            'cd-quadratic']


def test_registry_holds_every_family():
    assert set(BUILT_IN) | {'custom-tabulated', 'inverse-engineered'} <= set(
        FAMILIES
    )


@pytest.mark.parametrize('family', BUILT_IN)
@pytest.mark.parametrize('size', [2, 16, 1024])
def test_boundary_values(family, size):
    spec = ScheduleSpec(family=family, size=size, final_time=3.0)
    start = eval_schedule(spec, 0.0)
    end = eval_schedule(spec, 3.0)
    assert start.A == pytest.approx(1.0, abs=1e-10)
    assert start.B == pytest.approx(0.0, abs=1e-10)
    assert end.A == pytest.approx(0.0, abs=1e-10)
    assert end.B == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize('family', ['linear-naive', 'qab-linear', 'cd-linear'])
def test_linear_families_stay_on_line(family):
    _, point = sample_schedule(ScheduleSpec(family, 64, 2.0), 513)
    np.testing.assert_allclose(point.A + point.B, 1.0, atol=1e-15)
    np.testing.assert_allclose(point.dA + point.dB, 0.0, atol=1e-12)


@pytest.mark.parametrize('family', ['qab-quadratic', 'cd-quadratic'])
def test_quadratic_families_stay_on_circle(family):
    _, point = sample_schedule(ScheduleSpec(family, 64, 2.0), 513)
    np.testing.assert_allclose(point.A ** 2 + point.B ** 2, 1.0, atol=1e-10)
    np.testing.assert_allclose(point.A * point.dA + point.B * point.dB, 0.0,
                               atol=1e-10)


def test_qab_linear_closed_form():
    point = eval_schedule(ScheduleSpec('qab-linear', 2, 1.0), 0.25)
    # alpha = pi / 4, s = (1 - tan(pi / 8)) / 2
    assert point.B == pytest.approx((1 - math.tan(math.pi / 8)) / 2,
                                    abs=1e-15)
    assert point.B == pytest.approx(0.292893, abs=1e-6)


def test_cd_linear_closed_form():
    point = eval_schedule(ScheduleSpec('cd-linear', 2, 1.0), 0.25)
    assert point.B == pytest.approx((1 - 0.5 / math.sqrt(1.75)) / 2,
                                    abs=1e-15)
    assert point.B == pytest.approx(0.311018, abs=1e-6)


@pytest.mark.parametrize('family', ['linear-naive', 'qab-linear', 'cd-linear',
                                    'qab-quadratic', 'cd-quadratic'])
def test_derivatives_match_finite_differences(family):
    spec = ScheduleSpec(family, 8, 2.0)
    step = 1e-6
    for t in (0.3, 1.0, 1.7):
        point = eval_schedule(spec, t)
        ahead, behind = eval_schedule(spec, t + step), eval_schedule(
            spec, t - step
        )
        assert point.dA == pytest.approx((ahead.A - behind.A) / (2 * step),
                                         rel=1e-5, abs=1e-8)
        assert point.dB == pytest.approx((ahead.B - behind.B) / (2 * step),
                                         rel=1e-5, abs=1e-8)


def test_cd_quadratic_of_two_states_sweeps_uniformly():
    # For N = 2 the metric is constant on the circle
    point = eval_schedule(ScheduleSpec('cd-quadratic', 2, 1.0), 0.3)
    assert math.atan2(point.B, point.A) == pytest.approx(0.15 * math.pi,
                                                         abs=1e-12)


@pytest.mark.parametrize('family', ['qab-quadratic', 'cd-quadratic'])
def test_quadratic_families_are_symmetric(family):
    point = eval_schedule(ScheduleSpec(family, 16, 1.0), 0.5)
    assert math.atan2(point.B, point.A) == pytest.approx(math.pi / 4,
                                                         abs=1e-8)


@pytest.mark.parametrize('functional', ['qab', 'cd'])
def test_quadrature_inversion_matches_adaptive_integration(functional):
    spec = ScheduleSpec(f'{functional}-quadratic', 8, 1.0)
    table = build_quadrature_table(spec)

    def root_metric(phi):
        return math.sqrt(constraint_metric(8, functional, 'quadratic', phi)[0])

    total, _ = quad(root_metric, 0.0, math.pi / 2, epsabs=1e-13,
                    epsrel=1e-13, limit=200)
    assert table.total == pytest.approx(total, rel=1e-8)
    for tau in (0.1, 0.37, 0.5, 0.82):
        phi = invert_quadrature(table, tau)
        partial, _ = quad(root_metric, 0.0, phi, epsabs=1e-13,
                          epsrel=1e-13, limit=200)
        assert partial / total == pytest.approx(tau, abs=1e-8)


def test_quadrature_converges_with_table_size():
    tau = np.linspace(0.0, 1.0, 101)
    coarse = build_quadrature_table(
        ScheduleSpec('cd-quadratic', 8, 1.0, quadrature_points=1024)
    )
    fine = build_quadrature_table(
        ScheduleSpec('cd-quadratic', 8, 1.0, quadrature_points=2048)
    )
    assert coarse.total == pytest.approx(fine.total, rel=1e-10)
    np.testing.assert_allclose(invert_quadrature(coarse, tau),
                               invert_quadrature(fine, tau), atol=1e-10)


@pytest.mark.parametrize('family, functional', [
    ('qab-linear', 'qab'), ('cd-linear', 'cd'),
    ('qab-quadratic', 'qab'), ('cd-quadratic', 'cd'),
])
@pytest.mark.parametrize('size', [2, 64])
def test_optimal_schedules_keep_their_functional_constant(family, functional,
                                                          size):
    _, point = sample_schedule(ScheduleSpec(family, size, 5.0), 1001)
    values = error_functionals(size, point).value(functional)
    np.testing.assert_allclose(values, values[500], rtol=1e-6)


@pytest.mark.parametrize('functional, constraint, family', [
    ('qab', 'linear', 'qab-linear'),
    ('cd', 'linear', 'cd-linear'),
    ('cd', 'quadratic', 'cd-quadratic'),
])
@pytest.mark.parametrize('size', [2, 8, 64])
def test_euler_lagrange_geodesics_match_closed_forms(functional, constraint,
                                                     family, size):
    tau, q = solve_euler_lagrange(size, functional, constraint, steps=400)
    point = eval_schedule(ScheduleSpec(family, size, 1.0), tau)
    if constraint == 'linear':
        expected = point.B
    else:
        expected = np.arctan2(point.B, point.A)
    np.testing.assert_allclose(q, expected, atol=1e-5)


def test_times_outside_run_are_rejected():
    spec = ScheduleSpec('cd-linear', 4, 2.0)
    with pytest.raises(ScheduleRangeError):
        eval_schedule(spec, -0.1)
    with pytest.raises(ScheduleRangeError):
        eval_schedule(spec, 2.2)


@pytest.mark.parametrize('arguments', [
    dict(family='no-such-family', size=4, final_time=1.0),
    dict(family='cd-linear', size=1, final_time=1.0),
    dict(family='cd-linear', size=4, final_time=0.0),
    dict(family='cd-linear', size=4, final_time=1.0, quadrature_points=65),
    dict(family='custom-tabulated', size=4, final_time=1.0),
])
def test_invalid_specs_are_rejected(arguments):
    with pytest.raises(ConfigurationError):
        ScheduleSpec(**arguments)


def test_tabulated_schedule_interpolates_table():
    t = np.linspace(0.0, 2.0, 401)
    spec = tabulated_spec(4, t, 1 - t / 2, t / 2)
    point = eval_schedule(spec, 0.73)
    assert point.A == pytest.approx(1 - 0.365, abs=1e-12)
    assert point.dB == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize('t, a, b', [
    ([0.0, 1.0, 1.0, 2.0], [1.0, 0.6, 0.5, 0.0], [0.0, 0.4, 0.5, 1.0]),
    ([0.0, 1.0, 1.5, 2.0], [1.0, 0.6, 0.5, 0.0], [0.1, 0.4, 0.5, 1.0]),
    ([0.0, 1.0, 1.5, 2.0], [1.0, 0.6, 0.5, 0.2], [0.0, 0.4, 0.5, 1.0]),
    ([0.5, 1.0, 1.5, 2.0], [1.0, 0.6, 0.5, 0.0], [0.0, 0.4, 0.5, 1.0]),
])
def test_malformed_tables_are_rejected(t, a, b):
    with pytest.raises(ConfigurationError):
        tabulated_spec(4, t, a, b)


def test_table_file_errors_name_the_line(tmp_path):
    table = tmp_path / 'table.csv'
    table.write_text("t,A,B\n0,1,0\n0.5,oops,0.5\n1,0,1\n")
    with pytest.raises(ConfigurationError, match='Line 3'):
        load_tabulated(str(table), 4)


def test_missing_table_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_tabulated(str(tmp_path / 'missing.csv'), 4)
