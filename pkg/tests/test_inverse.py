"""Tests for inverse.py."""

# Standard library modules
import math

# Third party modules
import numpy as np
import pytest

# Project modules
from stagrover.config import DEFAULT_SETTINGS, Settings
from stagrover.errors import (ConfigurationError, DivergenceError,
                              PlanFormatError)
from stagrover.inverse import (BlochPlan, Invariant, default_plan,
                               divergence_map, endpoint_commutators,
                               evolve_inverse, invariant_residual, load_plan,
                               plan_to_schedule)
from stagrover.schedules import ScheduleSpec


@pytest.mark.parametrize('size', [2, 10, 64])
@pytest.mark.parametrize('final_time', [1.0, 10.0])
def test_default_plan_meets_boundary_conditions(size, final_time):
    plan = default_plan(size, final_time)
    assert plan.boundary_violations() == []
    assert plan.phi(1.0) == pytest.approx(math.pi / 2, abs=1e-12)


def test_schedule_spec_settings_reach_default_plan():
    settings = Settings(divergence_bound=0.5, plan_samples=512)
    spec = ScheduleSpec(family='inverse-engineered', size=2,
                        final_time=10.0, settings=settings)
    with pytest.raises(DivergenceError):
        spec.schedule
    schedule = ScheduleSpec(family='inverse-engineered', size=2,
                            final_time=10.0).schedule
    assert schedule.plan.settings == DEFAULT_SETTINGS


@pytest.mark.parametrize('size', [2, 4, 10])
def test_extracted_schedule_starts_from_driver(size):
    a, b = default_plan(size, 10.0).coefficients([0.0])
    assert a[0] == pytest.approx(1.0, abs=1e-8)
    assert b[0] == pytest.approx(0.0, abs=1e-8)


def test_extracted_schedule_endpoints_of_two_states():
    plan = default_plan(2, 10.0)
    point = plan_to_schedule(plan, np.array([0.0, 10.0]))
    assert point.A[0] == pytest.approx(1.0, abs=1e-10)
    assert point.B[0] == pytest.approx(0.0, abs=1e-10)
    assert point.A[1] == pytest.approx(0.0, abs=1e-10)


def test_short_run_of_ten_states_diverges():
    plan = default_plan(10, 1.0)
    assert plan.extraction_report().diverges
    with pytest.raises(DivergenceError) as error:
        plan_to_schedule(plan, 0.5)
    assert error.value.code == 2
    assert 0 < error.value.time < 1.0


def test_longer_runs_need_weaker_fields():
    short = default_plan(10, 2.0).extraction_report()
    long = default_plan(10, 10.0).extraction_report()
    assert long.max_abs_b < short.max_abs_b


@pytest.mark.parametrize('size', [2, 4, 10])
def test_extracted_schedule_drives_the_invariant(size):
    assert invariant_residual(default_plan(size, 10.0)) < 1e-6


def test_invariant_is_a_unit_pauli_vector():
    invariant = Invariant(default_plan(8, 5.0))
    t = np.linspace(0.0, 5.0, 101)
    np.testing.assert_allclose(np.linalg.norm(invariant.vector(t), axis=-1),
                               1.0, atol=1e-14)
    np.testing.assert_allclose(invariant.eigenvalues(t),
                               np.tile([-1.0, 1.0], (101, 1)), atol=1e-12)
    # e . de/dt = 0 for a unit vector
    np.testing.assert_allclose(
        np.sum(invariant.vector(t) * invariant.derivative(t), axis=-1), 0.0,
        atol=1e-12
    )


@pytest.mark.parametrize('size', [2, 10, 64])
def test_default_plan_commutes_with_boundary_hamiltonians(size):
    initial, final = endpoint_commutators(default_plan(size, 10.0))
    assert initial < 1e-6
    assert final < 1e-6


def test_wrong_initial_angle_leaves_initial_commutator():
    reference = default_plan(2, 10.0)
    plan = BlochPlan(size=2, final_time=10.0, theta=reference.theta - 0.2,
                     phi=reference.phi)
    assert any('Theta(0)' in violation
               for violation in plan.boundary_violations())
    initial, _ = endpoint_commutators(plan)
    assert initial == pytest.approx(math.sin(0.2), rel=1e-10)


def test_final_commutator_vanishes_for_any_final_phi():
    reference = default_plan(4, 10.0)
    plan = BlochPlan(size=4, final_time=10.0, theta=reference.theta,
                     phi=[math.pi, 0.3, 2.0])
    _, final = endpoint_commutators(plan)
    assert final < 1e-6


def test_stationary_angle_gives_pure_problem_field():
    plan = BlochPlan(size=4, final_time=1.0, theta=[1.0],
                     phi=[math.pi / 2, -1.0])
    t = np.linspace(0.0, 1.0, 11)
    a, b = plan.coefficients(t)
    np.testing.assert_allclose(a, 0.0, atol=1e-12)
    np.testing.assert_allclose(b, 1.0, atol=1e-12)
    assert invariant_residual(plan, samples=257) < 1e-10


def test_two_state_search_is_exact():
    result = evolve_inverse(default_plan(2, 10.0))
    assert result.fidelity >= 1 - 1e-6
    assert np.min(result.invariant_overlap_trace) >= 1 - 1e-5


def test_fast_two_state_search_leaves_ground_state_but_ends_exact():
    result = evolve_inverse(default_plan(2, 2.0))
    assert result.fidelity >= 1 - 1e-5
    assert result.min_adiabatic_overlap < 0.999


@pytest.mark.parametrize('size', [2, 4, 10])
@pytest.mark.parametrize('final_time', [2.0, 10.0])
def test_inverse_engineering_gives_exact_control(size, final_time):
    plan = default_plan(size, final_time)
    report = plan.extraction_report()
    if report.diverges or max(report.max_abs_a, report.max_abs_b) >= 1e3:
        pytest.skip('schedule too strong to integrate in a test')
    assert evolve_inverse(plan).fidelity >= 1 - 1e-5


def test_plan_must_match_schedule():
    spec = ScheduleSpec(family='inverse-engineered', size=8,
                        final_time=10.0, plan=default_plan(4, 10.0))
    with pytest.raises(ConfigurationError):
        spec.schedule


def test_plan_file_round_trip(tmp_path):
    reference = default_plan(4, 10.0)
    lines = ['which,power,coefficient', '# default plan, N=4, t_f=10', '']
    for name, polynomial in (('Θ', reference.theta), ('Phi', reference.phi)):
        lines.extend(f"{name},{power},{float(value)!r}"
                     for power, value in enumerate(polynomial.coef))
    plan_file = tmp_path / 'plan.csv'
    plan_file.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    plan = load_plan(str(plan_file), 4, 10.0)
    np.testing.assert_array_equal(plan.theta.coef, reference.theta.coef)
    np.testing.assert_array_equal(plan.phi.coef, reference.phi.coef)


def test_repeated_plan_terms_add_up(tmp_path):
    plan_file = tmp_path / 'plan.csv'
    plan_file.write_text("Theta,0,1.0\nTheta,0,0.5\nPhi,1,2.0\n")
    plan = load_plan(str(plan_file), 4, 1.0)
    np.testing.assert_array_equal(plan.theta.coef, [1.5])
    np.testing.assert_array_equal(plan.phi.coef, [0.0, 2.0])


@pytest.mark.parametrize('content, line_number', [
    ("which,power,coefficient\nTheta,0,1.0\nGamma,1,2.0\n", 3),
    ("Theta,0,1.0\nPhi,x,2.0\n", 2),
    ("Theta,0,1.0\n\nPhi,-1,2.0\n", 3),
    ("Theta,0\n", 1),
])
def test_malformed_plan_lines_are_reported(tmp_path, content, line_number):
    plan_file = tmp_path / 'plan.csv'
    plan_file.write_text(content)
    with pytest.raises(PlanFormatError) as error:
        load_plan(str(plan_file), 4, 1.0)
    assert error.value.line_number == line_number
    assert error.value.description.startswith(f"Line {line_number}:")
    assert error.value.code == 3


def test_plan_without_phi_terms_is_rejected(tmp_path):
    plan_file = tmp_path / 'plan.csv'
    plan_file.write_text("Theta,0,1.0\n")
    with pytest.raises(PlanFormatError):
        load_plan(str(plan_file), 4, 1.0)


def test_divergence_map():
    rows = divergence_map([2, 10], [1.0, 10.0])
    assert [(row['N'], row['t_f']) for row in rows] == [
        (2, 1.0), (2, 10.0), (10, 1.0), (10, 10.0)
    ]
    diverges = {(row['N'], row['t_f']): row['diverges'] for row in rows}
    assert diverges[10, 1.0]
    assert not diverges[2, 10.0]
