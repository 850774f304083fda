"""Schrödinger-equation integration of annealing schedules.

Two representations are available:
    - `two-level`: the 2x2 Hamiltonian in the {|0>, |phi>} basis,
        optionally with the counterdiabatic term;
    - `full-N`: the dense N x N Hamiltonian A (1 - |+><+|) + B (1 - |0><0|),
        used as an independent oracle of the two-level reduction.
Both use classical fixed-step fourth order Runge-Kutta, starting from |+>.
"""

# Standard library modules
import concurrent.futures
import dataclasses
import logging
import math
from typing import Optional

# Third party modules
import numpy as np

# Project modules
from stagrover.config import DEFAULT_SETTINGS, Settings
from stagrover.errors import ConfigurationError
from stagrover.model import (QubitState, build_effective, effective_matrix,
                             ground_state_amplitudes, initial_ground_state)
from stagrover.schedules import ScheduleSpec

REPRESENTATIONS = ('two-level', 'full-N')
# Points used to estimate the fastest phase rotation of a schedule
RATE_SAMPLES = 4097


@dataclasses.dataclass(frozen=True)
class EvolutionConfig:
    """What to integrate and how.

    `steps` defaults to `default_steps(...)` when None. `energy_offset` is a
        constant added to the Hamiltonian (it only changes the global phase).
    """

    spec: ScheduleSpec
    steps: Optional[int] = None
    with_cd: bool = False
    representation: str = 'two-level'
    energy_offset: float = 0.0
    settings: Settings = DEFAULT_SETTINGS

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ConfigurationError(
                f"Unknown representation `{self.representation}`"
            )
        if self.steps is not None and self.steps < 100:
            raise ConfigurationError(
                f"At least 100 steps are required, got {self.steps}"
            )
        if (self.representation == 'full-N'
                and self.spec.size > self.settings.max_full_size):
            raise ConfigurationError(
                f"Dense evolution is limited to N <= "
                f"{self.settings.max_full_size}, got N={self.spec.size}"
            )


@dataclasses.dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Outcome of an evolution.

    `amplitudes` holds (c0, cphi) at every step time `times`; in full-N mode
        cphi is the projection on the uniform superposition of unmarked
        states.
    """

    final_state: object
    fidelity: float
    norm_drift: float
    adiabatic_overlap_trace: np.ndarray
    steps: int
    times: np.ndarray
    amplitudes: np.ndarray
    invariant_overlap_trace: Optional[np.ndarray] = None

    @property
    def min_adiabatic_overlap(self) -> float:
        return float(np.min(self.adiabatic_overlap_trace))


def _rotation_rates(spec: ScheduleSpec, times, settings: Settings):
    """Return gap and |dtheta| of `spec` at `times`."""
    hamiltonian = build_effective(spec.size, spec.schedule.evaluate(times),
                                  gap_floor=settings.gap_floor)
    return (np.atleast_1d(hamiltonian.gap),
            np.abs(np.atleast_1d(hamiltonian.dtheta)))


def default_steps(spec: ScheduleSpec,
                  settings: Settings = DEFAULT_SETTINGS) -> int:
    """Return max(min_steps, ceil(steps_per_radian * t_f * max Omega)).

    Omega = sqrt(Delta^2 + dtheta^2) is the rotation rate of the
        counterdiabatic two-level Hamiltonian.
    """
    times = np.linspace(0.0, spec.final_time, RATE_SAMPLES)
    gap, dtheta = _rotation_rates(spec, times, settings)
    fastest = float(np.max(np.hypot(gap, dtheta)))
    steps = max(settings.min_steps,
                math.ceil(settings.steps_per_radian * spec.final_time
                          * fastest))
    logging.debug(
        f"Default steps for {spec.family} (N={spec.size}, "
        f"t_f={spec.final_time}): {steps}"
    )
    return steps


def check_resolution(spec: ScheduleSpec, steps: int, gap, dtheta,
                     settings: Settings = DEFAULT_SETTINGS):
    """Raise ConfigurationError unless max(Delta, |dtheta|) h < guard."""
    product = max(float(np.max(gap)), float(np.max(np.abs(dtheta)))) * (
        spec.final_time / steps
    )
    if not product < settings.resolution_guard:
        raise ConfigurationError(
            f"{steps} steps do not resolve the {spec.family} schedule "
            f"(max(Delta, |dtheta|) * h = {product:.3g}, must be below "
            f"{settings.resolution_guard})"
        )


def rk4_step_matrices(generators: np.ndarray) -> np.ndarray:
    """Return the RK4 propagators of every step.

    `generators` holds -i H dt on the stage grid t_0, t_0 + h/2, t_1, ...
        (2 * steps + 1 matrices); step k maps psi(t_k) to psi(t_{k+1}).
    """
    start, middle, end = generators[0:-1:2], generators[1::2], generators[2::2]
    identity = np.eye(generators.shape[-1], dtype=complex)
    k1 = start
    k2 = middle @ (identity + start / 2)
    k3 = middle @ (identity + k2 / 2)
    k4 = end @ (identity + k3)
    return identity + (k1 + 2 * k2 + 2 * k3 + k4) / 6


class DenseGroverHamiltonian:
    """Dense N x N Hamiltonian assembled from rank-one terms."""

    def __init__(self, size: int, energy_offset: float = 0.0):
        self.size = size
        self.energy_offset = energy_offset
        plus = np.full(size, 1 / math.sqrt(size))
        self.projector_plus = np.outer(plus, plus).astype(complex)
        self.projector_marked = np.zeros((size, size), dtype=complex)
        self.projector_marked[0, 0] = 1
        # -sigma_y embedded in the {|0>, |phi>} block
        self.cd_pattern = np.zeros((size, size), dtype=complex)
        self.cd_pattern[0, 1:] = 1j / math.sqrt(size - 1)
        self.cd_pattern[1:, 0] = -1j / math.sqrt(size - 1)
        self.identity = np.eye(size, dtype=complex)

    def matrix(self, a: float, b: float, cd_coeff: float = 0.0):
        """Return A (1 - |+><+|) + B (1 - |0><0|) + coeff (-sigma_y)."""
        return ((a + b + self.energy_offset) * self.identity
                - a * self.projector_plus
                - b * self.projector_marked
                + cd_coeff * self.cd_pattern)

    def reduce(self, vectors: np.ndarray) -> np.ndarray:
        """Return (c0, cphi) of N-vectors stored along the last axis."""
        return np.stack(
            [vectors[..., 0],
             vectors[..., 1:].sum(axis=-1) / math.sqrt(self.size - 1)],
            axis=-1
        )


def _evolve_two_level(config: EvolutionConfig, hamiltonian, dt):
    matrices = effective_matrix(hamiltonian, with_cd=config.with_cd,
                                energy_offset=config.energy_offset)
    propagators = rk4_step_matrices(-1j * dt * matrices)
    amplitudes = np.empty((len(propagators) + 1, 2), dtype=complex)
    amplitudes[0] = initial_ground_state(config.spec.size).vector
    for index, propagator in enumerate(propagators):
        amplitudes[index + 1] = propagator @ amplitudes[index]
    return QubitState.from_vector(amplitudes[-1]), amplitudes


def _evolve_full(config: EvolutionConfig, point, hamiltonian, dt):
    size = config.spec.size
    dense = DenseGroverHamiltonian(size, energy_offset=config.energy_offset)
    a, b = np.atleast_1d(point.A), np.atleast_1d(point.B)
    if config.with_cd:
        cd = np.atleast_1d(hamiltonian.dtheta) / 2
    else:
        cd = np.zeros_like(a)

    def derivative(stage, psi):
        return -1j * (dense.matrix(a[stage], b[stage], cd[stage]) @ psi)

    psi = np.full(size, 1 / math.sqrt(size), dtype=complex)
    steps = (len(a) - 1) // 2
    amplitudes = np.empty((steps + 1, 2), dtype=complex)
    amplitudes[0] = dense.reduce(psi)
    for step in range(steps):
        stage = 2 * step
        k1 = dt * derivative(stage, psi)
        k2 = dt * derivative(stage + 1, psi + k1 / 2)
        k3 = dt * derivative(stage + 1, psi + k2 / 2)
        k4 = dt * derivative(stage + 2, psi + k3)
        psi = psi + (k1 + 2 * k2 + 2 * k3 + k4) / 6
        amplitudes[step + 1] = dense.reduce(psi)
    return psi, amplitudes


def evolve(config: EvolutionConfig) -> EvolutionResult:
    """Integrate i d/dt psi = H(t) psi from |+> over [0, t_f]."""
    spec, settings = config.spec, config.settings
    steps = config.steps
    if steps is None:
        steps = default_steps(spec, settings=settings)
    dt = spec.final_time / steps
    stage_times = np.linspace(0.0, spec.final_time, 2 * steps + 1)
    point = spec.schedule.evaluate(stage_times)
    hamiltonian = build_effective(spec.size, point,
                                  gap_floor=settings.gap_floor)
    check_resolution(spec, steps, hamiltonian.gap,
                     np.abs(hamiltonian.dtheta), settings=settings)
    if config.representation == 'two-level':
        final_state, amplitudes = _evolve_two_level(config, hamiltonian, dt)
        norm_squared = final_state.norm_squared
        fidelity = final_state.marked_probability
    else:
        final_state, amplitudes = _evolve_full(config, point, hamiltonian,
                                               dt)
        norm_squared = float(np.vdot(final_state, final_state).real)
        fidelity = abs(final_state[0]) ** 2
    step_hamiltonian = dataclasses.replace(
        hamiltonian,
        **{field: np.asarray(getattr(hamiltonian, field))[::2]
           for field in ('e0', 'gap', 'theta', 'dtheta', 'de0', 'dgap')}
    )
    ground_c0, ground_cphi = ground_state_amplitudes(
        step_hamiltonian, gap_floor=settings.gap_floor
    )
    overlaps = np.abs(ground_c0 * amplitudes[:, 0]
                      + ground_cphi * amplitudes[:, 1]) ** 2
    logging.debug(
        f"Evolved {spec.family} ({config.representation}, "
        f"cd={config.with_cd}, N={spec.size}, t_f={spec.final_time}, "
        f"steps={steps}): fidelity {fidelity:.12f}"
    )
    return EvolutionResult(
        final_state=final_state,
        fidelity=float(min(max(fidelity, 0.0), 1.0)),
        norm_drift=abs(1 - norm_squared),
        adiabatic_overlap_trace=overlaps,
        steps=steps,
        times=stage_times[::2],
        amplitudes=amplitudes,
    )


def oracle_compare(spec: ScheduleSpec, final_time: Optional[float] = None,
                   steps: Optional[int] = None, with_cd: bool = False,
                   settings: Settings = DEFAULT_SETTINGS):
    """Return |fidelity_two_level - fidelity_full| and both fidelities."""
    if final_time is not None:
        spec = spec.replace(final_time=final_time)
    if spec.size > settings.max_full_size:
        raise ConfigurationError(
            f"Dense oracle is limited to N <= {settings.max_full_size}"
        )
    if steps is None:
        steps = default_steps(spec, settings=settings)
    fidelities = [
        evolve(EvolutionConfig(spec=spec, steps=steps, with_cd=with_cd,
                               representation=representation,
                               settings=settings)).fidelity
        for representation in REPRESENTATIONS
    ]
    return abs(fidelities[0] - fidelities[1]), fidelities[0], fidelities[1]


@dataclasses.dataclass(frozen=True, eq=False)
class ScanResult:
    """Final fidelities of one schedule family over a grid of run times."""

    family: str
    size: int
    final_times: np.ndarray
    fidelities: np.ndarray
    with_cd: bool = False

    def rows(self):
        for final_time, fidelity in zip(self.final_times, self.fidelities):
            yield dict(family=self.family, N=self.size, t_f=final_time,
                       fidelity=fidelity)

    def first_reaching(self, threshold: float) -> Optional[float]:
        """Return the smallest grid t_f with fidelity >= threshold."""
        reached = np.nonzero(self.fidelities >= threshold)[0]
        if len(reached) == 0:
            return None
        return float(self.final_times[reached[0]])


def log_grid(tf_min: float, tf_max: float, points: int) -> np.ndarray:
    """Return `points` log-spaced run times from tf_min to tf_max."""
    if not 0 < tf_min <= tf_max:
        raise ConfigurationError(
            f"Run time grid needs 0 < tf_min <= tf_max, "
            f"got {tf_min!r}, {tf_max!r}"
        )
    if points < 1:
        raise ConfigurationError("Run time grid needs at least one point")
    return np.geomspace(tf_min, tf_max, points)


def _scan_point(task):
    spec, steps, with_cd, settings = task
    return evolve(EvolutionConfig(spec=spec, steps=steps, with_cd=with_cd,
                                  settings=settings)).fidelity


def scan_tf(family: str, size: int, tf_grid, with_cd: bool = False,
            steps: Optional[int] = None, workers: int = 1,
            quadrature_points: int = DEFAULT_SETTINGS.quadrature_points,
            settings: Settings = DEFAULT_SETTINGS) -> ScanResult:
    """Return final fidelities of `family` for every run time of `tf_grid`.

    With `workers` > 1 grid points run in a process pool; results keep
        grid order.
    """
    tf_grid = np.asarray(tf_grid, dtype=float)
    if tf_grid.ndim != 1 or len(tf_grid) == 0:
        raise ConfigurationError("Run time grid must be a non-empty list")
    if np.any(np.diff(tf_grid) <= 0):
        raise ConfigurationError("Run time grid must be increasing")
    tasks = [
        (ScheduleSpec(family=family, size=size, final_time=float(final_time),
                      quadrature_points=quadrature_points, settings=settings),
         steps, with_cd, settings)
        for final_time in tf_grid
    ]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers) as executor:
            fidelities = list(executor.map(_scan_point, tasks))
    else:
        fidelities = list(map(_scan_point, tasks))
    for final_time, fidelity in zip(tf_grid, fidelities):
        logging.info(
            f"{family:>18} N={size} t_f={final_time:<10.6g} "
            f"fidelity={fidelity:.8f}"
        )
    return ScanResult(family=family, size=size, final_times=tf_grid,
                      fidelities=np.asarray(fidelities), with_cd=with_cd)
