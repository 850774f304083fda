"""Invariant-based inverse engineering of Grover schedules.

The Lewis-Riesenfeld invariant of the two-level Hamiltonian is F = e . sigma,
    with e = (sin(Theta) cos(Phi), sin(Theta) sin(Phi), cos(Theta)) obeying
        de/dt = Delta n x e.
Choosing the angles Theta(t), Phi(t) (a `BlochPlan`) fixes the schedule:
    A = (N / (2 sqrt(N - 1))) dTheta / sin(Phi)
    B = (1 - 2/N) A + dTheta cos(Theta) cos(Phi) / (sin(Theta) sin(Phi))
        - dPhi
Boundary conditions make F commute with H at t = 0 and t = t_f, so that
    the state following the invariant eigenstate ends in |0>.
"""

# Standard library modules
import csv
import dataclasses
import logging
import math
import os
from typing import Optional

# Third party modules
import numpy as np
from numpy.polynomial import Polynomial

# Project modules
from stagrover.config import DEFAULT_SETTINGS, Settings
from stagrover.dynamics import EvolutionConfig, EvolutionResult, evolve
from stagrover.errors import (ConfigurationError, DivergenceError,
                              PlanFormatError)
from stagrover.model import (PAULI_X, PAULI_Y, PAULI_Z, bloch_vector,
                             build_effective, check_size,
                             initial_mixing_angle)
from stagrover.schedules import Schedule, ScheduleSpec, schedule_family

BOUNDARY_TOLERANCE = 1e-8
# Numerators below this fraction of their maximum do not make a pole
POLE_NUMERATOR_FLOOR = 1e-8
ANGLE_NAMES = {'theta': 'theta', 'Θ': 'theta', 'phi': 'phi', 'Φ': 'phi'}


@dataclasses.dataclass(frozen=True, eq=False)
class ExtractionReport:
    """Schedule extracted from a plan on a uniform grid."""

    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    divergence: Optional[DivergenceError] = None

    @property
    def diverges(self) -> bool:
        return self.divergence is not None

    @property
    def max_abs_a(self) -> float:
        return float(np.nanmax(np.abs(self.A)))

    @property
    def max_abs_b(self) -> float:
        return float(np.nanmax(np.abs(self.B)))


@dataclasses.dataclass(frozen=True, eq=False)
class BlochPlan:
    """Angles Theta, Phi of the invariant as polynomials in tau = t / t_f."""

    size: int
    final_time: float
    theta: Polynomial
    phi: Polynomial
    settings: Settings = DEFAULT_SETTINGS

    def __post_init__(self):
        object.__setattr__(self, 'size', check_size(self.size))
        if not (math.isfinite(self.final_time) and self.final_time > 0):
            raise ConfigurationError(
                f"Run time must be positive, got {self.final_time!r}"
            )
        for name in ('theta', 'phi'):
            if not isinstance(getattr(self, name), Polynomial):
                object.__setattr__(self, name,
                                   Polynomial(getattr(self, name)))
        for message in self.boundary_violations():
            logging.warning(f"Plan boundary condition violated: {message}")

    @property
    def endpoint_offset(self) -> float:
        return self.settings.endpoint_offset * self.final_time

    def angles(self, t):
        """Return Theta, Phi, dTheta/dt, dPhi/dt at times `t`."""
        tau = np.asarray(t, dtype=float) / self.final_time
        return (self.theta(tau), self.phi(tau),
                self.theta.deriv()(tau) / self.final_time,
                self.phi.deriv()(tau) / self.final_time)

    def phi_trig(self, t):
        """Return sin(Phi), cos(Phi) at `t`.

        The multiple of pi closest to Phi(0) is removed from the constant
            term first, so that sin(Phi) keeps its relative precision where
            Phi approaches it.
        """
        tau = np.asarray(t, dtype=float) / self.final_time
        turns = round(self.phi.coef[0] / math.pi)
        reduced = (self.phi - turns * math.pi)(tau)
        sign = -1.0 if turns % 2 else 1.0
        return sign * np.sin(reduced), sign * np.cos(reduced)

    def boundary_violations(self):
        """Return descriptions of the boundary conditions not met."""
        violations = []
        theta_0 = initial_mixing_angle(self.size)
        rate = self.theta.deriv()
        sin_phi_0, _ = self.phi_trig(0.0)
        checks = (
            ('Theta(0) = theta(0)', self.theta(0.0) - theta_0),
            ('sin(Phi(0)) = 0', sin_phi_0),
            ('dTheta(0) = 0', rate(0.0) / self.final_time),
            ('sin(Theta(t_f)) = 0', math.sin(self.theta(1.0))),
            ('dTheta(t_f) = 0', rate(1.0) / self.final_time),
        )
        for condition, residual in checks:
            if abs(residual) > BOUNDARY_TOLERANCE:
                violations.append(f"{condition} (residual {residual:.3e})")
        return violations

    def raw_coefficients(self, t):
        """Return A, B and their numerators and denominators at `t`.

        No endpoint limit is taken: 0/0 gives nan.
        """
        theta, _, dtheta, dphi = self.angles(t)
        sin_phi, cos_phi = self.phi_trig(t)
        sin_theta, cos_theta = np.sin(theta), np.cos(theta)
        coupling = self.size / (2 * math.sqrt(self.size - 1))
        numerator_b = dtheta * cos_theta * cos_phi
        denominator_b = sin_theta * sin_phi
        with np.errstate(divide='ignore', invalid='ignore'):
            a = coupling * dtheta / sin_phi
            b = (1 - 2 / self.size) * a + numerator_b / denominator_b - dphi
        return a, b, (dtheta, sin_phi), (numerator_b, denominator_b)

    def coefficients(self, t):
        """Return A, B at `t`.

        Within `endpoint_offset` of t = 0 or t = t_f the values are
            extrapolated from offsets eps, 2 eps, 4 eps by the quadratic
            through them; at the endpoint this is (8 f1 - 6 f2 + f4) / 3.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, b, _, _ = self.raw_coefficients(t)
        epsilon = self.endpoint_offset
        nodes = epsilon * np.array([1.0, 2.0, 4.0])
        for distance, origin, direction in ((t, 0.0, 1.0),
                                            (self.final_time - t,
                                             self.final_time, -1.0)):
            near = distance < epsilon
            if not np.any(near):
                continue
            node_a, node_b, _, _ = self.raw_coefficients(
                origin + direction * nodes
            )
            weights = _extrapolation_weights(distance[near], nodes)
            a[near] = weights @ node_a
            b[near] = weights @ node_b
        return a, b

    def coefficient_derivatives(self, t):
        """Return dA/dt, dB/dt by second order finite differences."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        step = self.endpoint_offset
        end = self.final_time

        def at(shift):
            return np.stack(self.coefficients(np.clip(t + shift, 0.0, end)))

        here, ahead, behind = at(0.0), at(step), at(-step)
        central = (ahead - behind) / (2 * step)
        forward = (-3 * here + 4 * ahead - at(2 * step)) / (2 * step)
        backward = (3 * here - 4 * behind + at(-2 * step)) / (2 * step)
        derivatives = np.where(t < step, forward,
                               np.where(t > end - step, backward, central))
        return derivatives[0], derivatives[1]

    def extraction_report(self, samples: Optional[int] = None
                          ) -> ExtractionReport:
        """Return A, B on `samples` uniform times and the first divergence.

        A divergence is a non-finite value, a value beyond the configured
            bound, or a sign change of a denominator (sin(Phi) for A,
            sin(Theta) sin(Phi) for B) whose numerator does not vanish.
        """
        if samples is None:
            samples = self.settings.plan_samples
        times = np.linspace(0.0, self.final_time, samples)
        a, b = self.coefficients(times)
        _, _, pole_a, pole_b = self.raw_coefficients(times)
        largest = np.fmax(np.abs(a), np.abs(b))
        finite = np.isfinite(a) & np.isfinite(b)
        magnitude = float(np.max(largest[finite])) if np.any(finite) else math.inf
        failures = []
        if not np.all(finite):
            index = int(np.argmin(finite))
            failures.append((times[index], math.inf, 'non-finite value'))
        beyond = largest > self.settings.divergence_bound
        if np.any(beyond):
            index = int(np.argmax(beyond))
            failures.append((times[index], magnitude, 'bound exceeded'))
        for numerator, denominator in (pole_a, pole_b):
            scale = float(np.max(np.abs(numerator))) or 1.0
            flips = (
                (denominator[:-1] * denominator[1:] < 0)
                & (np.fmin(np.abs(numerator[:-1]), np.abs(numerator[1:]))
                   > POLE_NUMERATOR_FLOOR * scale)
            )
            if np.any(flips):
                index = int(np.argmax(flips))
                failures.append(
                    ((times[index] + times[index + 1]) / 2, magnitude, 'pole')
                )
        divergence = None
        if failures:
            divergence = DivergenceError(*min(failures, key=lambda f: f[0]))
        return ExtractionReport(times=times, A=a, B=b, divergence=divergence)

    def to_spec(self) -> ScheduleSpec:
        return ScheduleSpec(family='inverse-engineered', size=self.size,
                            final_time=self.final_time, plan=self,
                            settings=self.settings)


def _extrapolation_weights(x, nodes):
    """Return Lagrange weights of the quadratic through `nodes` at `x`."""
    x = np.asarray(x, dtype=float)[:, None]
    weights = np.ones((len(x), len(nodes)))
    for j, node in enumerate(nodes):
        for k, other in enumerate(nodes):
            if k != j:
                weights[:, j] *= ((x[:, 0] - other) / (node - other))
    return weights


@dataclasses.dataclass(frozen=True, eq=False)
class Invariant:
    """Lewis-Riesenfeld invariant F(t) = e(t) . sigma of a plan."""

    plan: BlochPlan

    def vector(self, t) -> np.ndarray:
        """Return e(t), last axis of size 3."""
        theta, phi, _, _ = self.plan.angles(t)
        sin_phi, cos_phi = self.plan.phi_trig(t)
        return np.stack(
            [np.sin(theta) * cos_phi, np.sin(theta) * sin_phi,
             np.cos(theta)],
            axis=-1
        )

    def derivative(self, t) -> np.ndarray:
        """Return de/dt from the analytic derivatives of the angles."""
        theta, _, dtheta, dphi = self.plan.angles(t)
        sin_phi, cos_phi = self.plan.phi_trig(t)
        sin_theta, cos_theta = np.sin(theta), np.cos(theta)
        return np.stack(
            [dtheta * cos_theta * cos_phi - dphi * sin_theta * sin_phi,
             dtheta * cos_theta * sin_phi + dphi * sin_theta * cos_phi,
             -dtheta * sin_theta],
            axis=-1
        )

    def matrix(self, t) -> np.ndarray:
        e = self.vector(t)
        return (e[..., 0, None, None] * PAULI_X
                + e[..., 1, None, None] * PAULI_Y
                + e[..., 2, None, None] * PAULI_Z)

    def eigenvalues(self, t) -> np.ndarray:
        """Return the eigenvalues of F(t) in ascending order."""
        return np.linalg.eigvalsh(self.matrix(t))


def default_plan(size: int, final_time: float,
                 settings: Settings = DEFAULT_SETTINGS) -> BlochPlan:
    """Return the quartic plan meeting every boundary condition.

    Theta = theta0 (1 - 4 tau^3 + 3 tau^4) + 4 pi tau^3 - 3 pi tau^4
    Phi = pi (1 - 2 tau^3 + 3/2 tau^4) + (t_f / 3) (tau^3 - tau^4)
        + c (tau^2 - 2 tau^3 + tau^4),
        c = 6 N (theta0 - pi) / (sqrt(N - 1) t_f)
    """
    size = check_size(size)
    theta_0 = initial_mixing_angle(size)
    pi = math.pi
    c = 6 * size * (theta_0 - pi) / (math.sqrt(size - 1) * final_time)
    theta = Polynomial([theta_0, 0.0, 0.0, 4 * (pi - theta_0),
                        3 * (theta_0 - pi)])
    phi = Polynomial([pi, 0.0, c, -2 * pi + final_time / 3 - 2 * c,
                      1.5 * pi - final_time / 3 + c])
    return BlochPlan(size=size, final_time=final_time, theta=theta, phi=phi,
                     settings=settings)


@schedule_family('inverse-engineered')
class InverseEngineeredSchedule(Schedule):
    """Schedule extracted from a BlochPlan (the default plan when none)."""

    def __init__(self, spec):
        super().__init__(spec)
        plan = spec.plan
        if plan is None:
            plan = default_plan(spec.size, spec.final_time,
                                settings=spec.settings)
        if plan.size != spec.size or not math.isclose(
                plan.final_time, spec.final_time, rel_tol=1e-12):
            raise ConfigurationError(
                f"Plan (N={plan.size}, t_f={plan.final_time}) does not match "
                f"schedule (N={spec.size}, t_f={spec.final_time})"
            )
        self.plan = plan
        self.report = plan.extraction_report()
        if self.report.diverges:
            raise self.report.divergence
        if np.any(self.report.A < 0) or np.any(self.report.B < 0):
            logging.debug(
                f"Extracted schedule takes negative values "
                f"(min A={np.min(self.report.A):.3g}, "
                f"min B={np.min(self.report.B):.3g})"
            )

    def _coefficients(self, t):
        shape = np.shape(t)
        a, b = self.plan.coefficients(t)
        da, db = self.plan.coefficient_derivatives(t)
        return tuple(value.reshape(shape) for value in (a, b, da, db))


def plan_to_schedule(plan: BlochPlan, t):
    """Return the SchedulePoint of `plan` at `t`.

    Raise DivergenceError if the extraction diverges anywhere on the grid.
    """
    return plan.to_spec().schedule.evaluate(t)


def invariant_residual(plan: BlochPlan, samples: Optional[int] = None
                       ) -> float:
    """Return max over samples of |de/dt - Delta n x e|."""
    if samples is None:
        samples = plan.settings.plan_samples
    times, point = plan.to_spec().schedule.sample(samples)
    hamiltonian = build_effective(plan.size, point,
                                  gap_floor=plan.settings.gap_floor)
    invariant = Invariant(plan)
    precession = np.asarray(hamiltonian.gap)[:, None] * np.cross(
        hamiltonian.axis, invariant.vector(times)
    )
    residual = np.linalg.norm(invariant.derivative(times) - precession,
                              axis=-1)
    return float(np.max(residual))


def endpoint_commutators(plan: BlochPlan):
    """Return |n x e| against the driver (t = 0) and problem (t = t_f).

    The boundary Hamiltonians are A = 1, B = 0 and A = 0, B = 1, both of
        unit gap; [H, F] = i Delta (n x e) . sigma, so these vanish when F
        commutes with them.
    """
    theta_0 = initial_mixing_angle(plan.size)
    axes = np.array([[-math.sin(theta_0), 0.0, math.cos(theta_0)],
                     [0.0, 0.0, -1.0]])
    vectors = Invariant(plan).vector(np.array([0.0, plan.final_time]))
    norms = np.linalg.norm(np.cross(axes, vectors), axis=-1)
    return float(norms[0]), float(norms[1])


def evolve_inverse(plan: BlochPlan, steps: Optional[int] = None
                   ) -> EvolutionResult:
    """Evolve |+> under the extracted schedule (no counterdiabatic term).

    The result also carries the overlap with the invariant eigenstate of
        eigenvalue -1 (Bloch vector -e), which |+> starts in.
    """
    result = evolve(EvolutionConfig(spec=plan.to_spec(), steps=steps,
                                    settings=plan.settings))
    bloch = bloch_vector(result.amplitudes[:, 0], result.amplitudes[:, 1])
    norm = np.sum(np.abs(result.amplitudes) ** 2, axis=-1)
    e = Invariant(plan).vector(result.times)
    overlaps = (norm - np.sum(bloch * e, axis=-1)) / 2
    logging.info(
        f"Inverse-engineered evolution (N={plan.size}, "
        f"t_f={plan.final_time}): fidelity {result.fidelity:.10f}, "
        f"min adiabatic overlap {result.min_adiabatic_overlap:.6f}"
    )
    return dataclasses.replace(result, invariant_overlap_trace=overlaps)


def load_plan(file_, size: int, final_time: float,
              settings: Settings = DEFAULT_SETTINGS) -> BlochPlan:
    """Return the plan stored in `file_`.

    One term per row: `which,power,coefficient`, with `which` one of
        Theta, Phi (or Θ, Φ) and `power` the exponent of tau = t / t_f.
        A header row, blank lines and `#` comments are allowed. Repeated
        terms add up.
    """
    if not os.path.isfile(file_):
        raise PlanFormatError(f"Plan file `{file_}` not found")
    coefficients = {'theta': {}, 'phi': {}}
    with open(file_, newline='', encoding='utf-8') as plan_file:
        for line_number, line in enumerate(plan_file, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            row = [field.strip() for field in next(csv.reader([line]))]
            if row[0].lower() == 'which':
                continue
            if len(row) != 3:
                raise PlanFormatError(
                    f"expected `which,power,coefficient`, got {line!r}",
                    line_number=line_number
                )
            which = ANGLE_NAMES.get(row[0].lower(), ANGLE_NAMES.get(row[0]))
            if which is None:
                raise PlanFormatError(
                    f"unknown angle {row[0]!r} (use Theta or Phi)",
                    line_number=line_number
                )
            try:
                power = int(row[1])
                coefficient = float(row[2])
            except ValueError:
                raise PlanFormatError(
                    f"invalid power or coefficient in {line!r}",
                    line_number=line_number
                )
            if power < 0 or not math.isfinite(coefficient):
                raise PlanFormatError(
                    f"power must be >= 0 and coefficient finite in {line!r}",
                    line_number=line_number
                )
            terms = coefficients[which]
            terms[power] = terms.get(power, 0.0) + coefficient
    polynomials = {}
    for which, terms in coefficients.items():
        if not terms:
            raise PlanFormatError(f"Plan file `{file_}` has no {which} terms")
        coef = np.zeros(max(terms) + 1)
        for power, value in terms.items():
            coef[power] = value
        polynomials[which] = Polynomial(coef)
    logging.info(f"Loaded plan from `{file_}`")
    return BlochPlan(size=size, final_time=final_time,
                     theta=polynomials['theta'], phi=polynomials['phi'],
                     settings=settings)


def divergence_map(sizes, final_times, settings: Settings = DEFAULT_SETTINGS):
    """Return one row per (N, t_f) telling whether the default plan diverges.

    Rows hold N, t_f, diverges, max_abs_A, max_abs_B.
    """
    rows = []
    for size in sizes:
        for final_time in final_times:
            report = default_plan(
                size, float(final_time), settings=settings
            ).extraction_report()
            if report.diverges:
                logging.info(
                    f"N={size} t_f={final_time}: {report.divergence}"
                )
            rows.append(dict(N=int(size), t_f=float(final_time),
                             diverges=report.diverges,
                             max_abs_A=report.max_abs_a,
                             max_abs_B=report.max_abs_b))
    return rows
