"""Tests for counterdiabatic.py."""

# Standard library modules
import math

# Third party modules
import numpy as np
import pytest

# Project modules
from stagrover.counterdiabatic import (CdTerm, action, cd_coefficient,
                                       cd_spin, error_functionals,
                                       integrate_functional)
from stagrover.errors import ConfigurationError
from stagrover.model import PAULI_X, PAULI_Y, PAULI_Z, SchedulePoint, build_effective
from stagrover.schedules import FAMILIES, ScheduleSpec, eval_schedule

LINEAR = ['linear-naive', 'qab-linear', 'cd-linear']
BUILT_IN = LINEAR + ['qab-quadratic', 'cd-quadratic']


def test_cd_coefficient_of_crossing_point():
    term = cd_coefficient(4, SchedulePoint(A=0.5, B=0.5, dA=-1.0, dB=1.0))
    assert term.coeff == pytest.approx(math.sqrt(3))


def test_proportional_motion_needs_no_cd_term():
    term = cd_coefficient(16, SchedulePoint(A=0.6, B=0.3, dA=0.2, dB=0.1))
    assert abs(term.coeff) < 1e-12


def test_static_problem_weight_needs_no_cd_term():
    term = cd_coefficient(16, SchedulePoint(A=0.7, B=0.0, dA=-0.4, dB=0.0))
    assert term.coeff == 0.0


def test_cd_term_matrix():
    np.testing.assert_allclose(CdTerm(0.25).matrix, -0.25 * PAULI_Y)


@pytest.mark.parametrize('family', BUILT_IN)
def test_cd_coefficient_is_half_mixing_angle_rate(family):
    spec = ScheduleSpec(family, 8, 2.0)
    step = 1e-6
    for t in (0.2, 0.74, 1.5):
        theta = [build_effective(8, eval_schedule(spec, t + shift)).theta
                 for shift in (-step, step)]
        rate = (theta[1] - theta[0]) / (2 * step)
        coeff = cd_coefficient(8, eval_schedule(spec, t)).coeff
        assert coeff == pytest.approx(rate / 2, rel=1e-5)


def test_cd_spin_of_rotating_field():
    assert cd_spin([0, 0, 1], [1, 0, 0]) == pytest.approx([0, 1, 0])
    assert cd_spin([1, 0, 0], [0, 0, 0]) == pytest.approx([0, 0, 0])


@pytest.mark.parametrize('theta', [0.3, 1.2, 2.9])
def test_cd_spin_reproduces_cd_term(theta):
    dtheta = 0.7
    n = [-math.sin(theta), 0.0, math.cos(theta)]
    dn = [-dtheta * math.cos(theta), 0.0, -dtheta * math.sin(theta)]
    field = cd_spin(n, dn)
    assert field == pytest.approx([0.0, -dtheta, 0.0])
    matrix = (field[0] * PAULI_X + field[1] * PAULI_Y + field[2] * PAULI_Z) / 2
    np.testing.assert_allclose(matrix, CdTerm(dtheta / 2).matrix, atol=1e-15)


@pytest.mark.parametrize('n, dn', [
    ([0, 0, 2], [1, 0, 0]),
    ([0, 0, 1], [0, 0, 1]),
    ([0, 1], [1, 0]),
])
def test_cd_spin_rejects_invalid_fields(n, dn):
    with pytest.raises(ConfigurationError):
        cd_spin(n, dn)


@pytest.mark.parametrize('final_time', [0.5, 2.0, 10.0])
def test_naive_two_state_functional_at_crossing(final_time):
    point = eval_schedule(ScheduleSpec('linear-naive', 2, final_time),
                          final_time / 2)
    sample = error_functionals(2, point)
    assert sample.l_qab == pytest.approx(4 / final_time ** 2)


@pytest.mark.parametrize('family', BUILT_IN)
@pytest.mark.parametrize('size', [2, 8, 64])
def test_functional_decomposition_adds_up(family, size):
    _, point = ScheduleSpec(family, size, 3.0).schedule.sample(2049)
    sample = error_functionals(size, point)
    np.testing.assert_allclose(np.sum(sample.parts, axis=0), sample.l_qab,
                               rtol=1e-10, atol=0)
    np.testing.assert_array_equal(sample.part_direction, sample.l_cd)


def test_cd_functional_closed_form():
    point = SchedulePoint(A=0.8, B=0.3, dA=-0.5, dB=0.9)
    size = 5
    h = build_effective(size, point)
    expected = (2 * (size - 1) / size ** 2) * (
        point.A * point.dB - point.B * point.dA
    ) ** 2 / h.gap ** 6
    assert error_functionals(size, point).l_cd == pytest.approx(expected)


def test_unknown_functional_is_rejected():
    with pytest.raises(ConfigurationError):
        action(ScheduleSpec('cd-linear', 4, 1.0), 'other')


@pytest.mark.parametrize('size', [2, 8, 64])
def test_geodesics_minimize_their_action(size):
    actions = {
        (family, functional): action(ScheduleSpec(family, size, 1.0),
                                     functional)
        for family in LINEAR for functional in ('qab', 'cd')
    }
    for family in LINEAR:
        assert actions['cd-linear', 'cd'] <= actions[family, 'cd'] * (
            1 + 1e-9
        )
        assert actions['qab-linear', 'qab'] <= actions[family, 'qab'] * (
            1 + 1e-9
        )
    assert actions['cd-linear', 'cd'] < actions['linear-naive', 'cd']
    assert actions['qab-linear', 'qab'] < actions['linear-naive', 'qab']


def _perturbed_linear_points(spec, epsilon, t):
    """Return the points of `spec` with s(tau) + epsilon sin(pi tau)."""
    tau = t / spec.final_time
    s, ds_dtau = spec.schedule.fraction(tau)
    s = s + epsilon * np.sin(math.pi * tau)
    ds = (ds_dtau + epsilon * math.pi * np.cos(math.pi * tau)) / (
        spec.final_time
    )
    return SchedulePoint(A=1 - s, B=s, dA=-ds, dB=ds)


@pytest.mark.parametrize('family, functional', [('qab-linear', 'qab'),
                                                ('cd-linear', 'cd')])
@pytest.mark.parametrize('epsilon', [-0.05, -0.01, 0.01, 0.05])
def test_perturbed_geodesics_cost_more(family, functional, epsilon):
    spec = ScheduleSpec(family, 8, 1.0)
    t = np.linspace(0.0, 1.0, 4097)
    optimal = integrate_functional(8, _perturbed_linear_points(spec, 0.0, t),
                                   t, functional)
    perturbed = integrate_functional(
        8, _perturbed_linear_points(spec, epsilon, t), t, functional
    )
    assert optimal == pytest.approx(action(spec, functional, samples=4097),
                                    rel=1e-10)
    assert perturbed > optimal


@pytest.mark.parametrize('family', BUILT_IN)
@pytest.mark.parametrize('functional', ['qab', 'cd'])
def test_action_scales_inversely_with_run_time(family, functional):
    short = action(ScheduleSpec(family, 16, 1.0), functional)
    long = action(ScheduleSpec(family, 16, 4.0), functional)
    assert short == pytest.approx(4 * long, rel=1e-10)


def test_proportional_segment_has_no_cd_cost():
    t = np.linspace(0.0, 1.0, 101)
    point = SchedulePoint(A=2 * (1 + t), B=1 + t, dA=np.full_like(t, 2.0),
                          dB=np.ones_like(t))
    assert integrate_functional(4, point, t, 'cd') == pytest.approx(0.0,
                                                                    abs=1e-12)


def test_every_registered_family_has_finite_action():
    for family in BUILT_IN:
        assert family in FAMILIES
        assert math.isfinite(action(ScheduleSpec(family, 64, 2.0), 'cd'))
