"""Schedule families t -> (A, B, dA, dB) for the Grover Hamiltonian.

Linear-constraint families (A + B = 1) have closed forms; quadratic-constraint
    families (A = cos(phi), B = sin(phi)) are obtained inverting a tabulated
    Simpson integral of the metric sqrt(g(phi)).
Each family is a `Schedule` subclass registered with `schedule_family`.
"""

# Standard library modules
import abc
import dataclasses
import functools
import logging
import math
from typing import Any, Callable, Dict, Tuple

# Third party modules
import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

# Project modules
from stagrover.config import DEFAULT_SETTINGS, Settings
from stagrover.errors import ConfigurationError, ScheduleRangeError
from stagrover.model import SchedulePoint, check_size
from stagrover.utilities import csv_read, scalar_or_array

FAMILIES: Dict[str, type] = {}
FUNCTIONALS = ('qab', 'cd')
CONSTRAINTS = ('linear', 'quadratic')

# Relative tolerance on times slightly beyond [0, t_f]
TIME_TOLERANCE = 1e-12


def schedule_family(name):
    """Register decorated `Schedule` subclass as family `name`."""
    def decorator(cls):
        cls.family = name
        FAMILIES[name] = cls
        return cls
    return decorator


@dataclasses.dataclass(frozen=True)
class ScheduleSpec:
    """Family name, problem size and run time of a schedule.

    `plan` is the BlochPlan of the inverse-engineered family (default plan
        when None); `table` holds the (t, A, B) arrays of custom-tabulated
        schedules. `settings` configures the default plan.
    """

    family: str
    size: int
    final_time: float
    quadrature_points: int = DEFAULT_SETTINGS.quadrature_points
    plan: Any = None
    table: Any = dataclasses.field(default=None, compare=False, repr=False)
    settings: Settings = dataclasses.field(default=DEFAULT_SETTINGS,
                                           compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"Unknown schedule family `{self.family}`. "
                f"Available families: {', '.join(sorted(FAMILIES))}"
            )
        object.__setattr__(self, 'size', check_size(self.size))
        if not (math.isfinite(self.final_time) and self.final_time > 0):
            raise ConfigurationError(
                f"Run time must be positive, got {self.final_time!r}"
            )
        if self.quadrature_points < 64 or self.quadrature_points % 2:
            raise ConfigurationError(
                "quadrature_points must be an even integer >= 64"
            )
        if self.family == 'custom-tabulated' and self.table is None:
            raise ConfigurationError(
                "custom-tabulated schedules require a (t, A, B) table"
            )

    @functools.cached_property
    def schedule(self) -> 'Schedule':
        logging.debug(
            f"Building {self.family} schedule "
            f"(N={self.size}, t_f={self.final_time})"
        )
        return FAMILIES[self.family](self)

    def replace(self, **kwargs) -> 'ScheduleSpec':
        """Return a copy of this spec with some fields changed."""
        return dataclasses.replace(self, **kwargs)


class Schedule(abc.ABC):
    """Base class of schedule families.

    Subclasses implement `_coefficients(t)`, returning arrays A, B, dA/dt and
        dB/dt for an array `t` of times already checked to lie in [0, t_f].
    """

    family = None

    def __init__(self, spec: ScheduleSpec):
        self._spec = spec

    def __repr__(self):
        return (f"<{self.__class__.__name__} N={self.size} "
                f"t_f={self.final_time}>")

    @property
    def spec(self) -> ScheduleSpec:
        return self._spec

    @property
    def size(self) -> int:
        return self._spec.size

    @property
    def final_time(self) -> float:
        return self._spec.final_time

    def check_times(self, t) -> np.ndarray:
        """Return `t` as float array clipped to [0, t_f].

        Raise ScheduleRangeError for times outside [0, t_f] beyond rounding.
        """
        t = np.asarray(t, dtype=float)
        slack = TIME_TOLERANCE * self.final_time
        outside = ~((t >= -slack) & (t <= self.final_time + slack))
        if np.any(outside):
            raise ScheduleRangeError(
                float(np.asarray(t)[outside].flat[0]), self.final_time
            )
        return np.clip(t, 0.0, self.final_time)

    @abc.abstractmethod
    def _coefficients(self, t: np.ndarray):
        raise NotImplementedError

    def evaluate(self, t) -> SchedulePoint:
        """Return the SchedulePoint at `t` (float or array of times)."""
        values = self._coefficients(self.check_times(t))
        return SchedulePoint(*(scalar_or_array(value) for value in values))

    def point(self, t: float) -> SchedulePoint:
        return self.evaluate(float(t))

    def sample(self, samples: int):
        """Return (t, points) on `samples` uniform times covering [0, t_f]."""
        if samples < 2:
            raise ConfigurationError("At least two samples are required")
        t = np.linspace(0.0, self.final_time, samples)
        return t, self.evaluate(t)


class LinearConstraintSchedule(Schedule):
    """A = 1 - s, B = s for a fraction s(tau), tau = t / t_f."""

    @abc.abstractmethod
    def fraction(self, tau: np.ndarray):
        """Return s(tau) and ds/dtau."""
        raise NotImplementedError

    def _coefficients(self, t):
        s, ds_dtau = self.fraction(t / self.final_time)
        ds = ds_dtau / self.final_time
        return 1.0 - s, s, -ds, ds


@schedule_family('linear-naive')
class NaiveLinearSchedule(LinearConstraintSchedule):
    """Uniform sweep s = tau."""

    def fraction(self, tau):
        return tau, np.ones_like(tau)


@schedule_family('qab-linear')
class QabLinearSchedule(LinearConstraintSchedule):
    """Geodesic of the L_QAB metric on the line A + B = 1.

    s = (1 - tan((1 - 2 tau) alpha) / sqrt(N - 1)) / 2,
        alpha = arctan(sqrt(N - 1))
    """

    def fraction(self, tau):
        root = math.sqrt(self.size - 1)
        alpha = math.atan(root)
        angle = (1 - 2 * tau) * alpha
        s = 0.5 * (1 - np.tan(angle) / root)
        ds_dtau = alpha / (root * np.cos(angle) ** 2)
        return s, ds_dtau


@schedule_family('cd-linear')
class CdLinearSchedule(LinearConstraintSchedule):
    """Geodesic of the L_CD metric on the line A + B = 1.

    s = (1 - (1 - 2 tau) / sqrt(D)) / 2, D = 1 + 4 (N - 1) tau (1 - tau)
    """

    def fraction(self, tau):
        discriminant = 1 + 4 * (self.size - 1) * tau * (1 - tau)
        s = 0.5 * (1 - (1 - 2 * tau) / np.sqrt(discriminant))
        ds_dtau = self.size * discriminant ** -1.5
        return s, ds_dtau


def _metric_terms(size, functional, constraint, q, lib=np):
    """Return g(q) and g'(q)/g(q); `lib` is numpy or math."""
    if functional not in FUNCTIONALS:
        raise ConfigurationError(f"Unknown functional `{functional}`")
    if constraint == 'linear':
        power = 2 if functional == 'qab' else 3
        f = 1 - 4 * (1 - 1 / size) * q * (1 - q)
        df = -4 * (1 - 1 / size) * (1 - 2 * q)
        return f ** -power, -power * df / f
    if constraint != 'quadratic':
        raise ConfigurationError(f"Unknown constraint `{constraint}`")
    den = 1 - (1 - 2 / size) * lib.sin(2 * q)
    dden = -2 * (1 - 2 / size) * lib.cos(2 * q)
    if functional == 'cd':
        return den ** -3, -3 * dden / den
    num = 1 - lib.sin(2 * q) / size
    dnum = -2 * lib.cos(2 * q) / size
    return num / den ** 2, dnum / num - 2 * dden / den


def constraint_metric(size: int, functional: str, constraint: str, q):
    """Return (g, g'/g) of the one-dimensional metric L = dq^2 g(q).

    On the linear constraint q = s and g = f^-p with
        f = 1 - 4 (1 - 1/N) s (1 - s), p = 2 (qab) or 3 (cd).
    On the quadratic constraint q = phi and
        g_qab = (1 - sin(2 phi)/N) / den^2,  g_cd = den^-3,
        den = 1 - (1 - 2/N) sin(2 phi).
    """
    size = check_size(size)
    g, log_slope = _metric_terms(size, functional, constraint,
                                 np.asarray(q, dtype=float))
    return scalar_or_array(g), scalar_or_array(log_slope)


@dataclasses.dataclass(frozen=True, eq=False)
class QuadratureTable:
    """Cumulative integral of sqrt(g(phi)) on a uniform grid of [0, pi/2]."""

    size: int
    functional: str
    angles: np.ndarray
    cumulative: np.ndarray

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def root_metric(self, phi):
        """Return sqrt(g(phi))."""
        g, _ = _metric_terms(self.size, self.functional, 'quadratic',
                             np.asarray(phi, dtype=float))
        return np.sqrt(g)


def build_quadrature_table(spec: ScheduleSpec) -> QuadratureTable:
    """Return the Simpson table of sqrt(g) for a quadratic-constraint family."""
    functional, _, constraint = spec.family.partition('-')
    if constraint != 'quadratic':
        raise ConfigurationError(
            f"Quadrature tables exist only for quadratic families, "
            f"not `{spec.family}`"
        )
    angles = np.linspace(0.0, math.pi / 2, spec.quadrature_points + 1)
    g, _ = _metric_terms(spec.size, functional, constraint, angles)
    cumulative = cumulative_simpson(np.sqrt(g), x=angles, initial=0)
    if np.any(np.diff(cumulative) <= 0):
        raise ConfigurationError(
            "Quadrature table is not strictly increasing, "
            "increase quadrature_points"
        )
    return QuadratureTable(size=spec.size, functional=functional,
                           angles=angles, cumulative=cumulative)


def invert_quadrature(table: QuadratureTable, tau, newton_steps: int = 4):
    """Return phi such that cumulative(phi) / total = tau.

    The bracketing node is found by binary search, the first guess by
        linear interpolation; Newton steps on the three-point Simpson
        integral from the bracketing node refine it.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(~((tau >= 0) & (tau <= 1))):
        raise ScheduleRangeError(float(np.min(tau) if np.min(tau) < 0
                                       else np.max(tau)), 1.0)
    target = tau * table.total
    last = len(table.angles) - 2
    index = np.clip(
        np.searchsorted(table.cumulative, target, side='right') - 1, 0, last
    )
    start = table.angles[index]
    step = table.angles[index + 1] - start
    below = table.cumulative[index]
    above = table.cumulative[index + 1]
    phi = start + step * (target - below) / (above - below)
    start_root = table.root_metric(start)
    for _ in range(newton_steps):
        root = table.root_metric(phi)
        partial = (phi - start) / 6 * (
            start_root + 4 * table.root_metric((start + phi) / 2) + root
        )
        phi = phi - (below + partial - target) / root
    phi = np.where(tau == 0, 0.0, np.where(tau == 1, math.pi / 2, phi))
    return scalar_or_array(phi)


class QuadraticConstraintSchedule(Schedule):
    """A = cos(phi), B = sin(phi) with phi from the quadrature table.

    dphi/dt = total / (t_f sqrt(g(phi))) by the inverse function rule.
    """

    def __init__(self, spec):
        super().__init__(spec)
        self.table = build_quadrature_table(spec)

    def _coefficients(self, t):
        phi = np.asarray(
            invert_quadrature(self.table, t / self.final_time), dtype=float
        )
        dphi = self.table.total / (
            self.final_time * self.table.root_metric(phi)
        )
        cos_phi, sin_phi = np.cos(phi), np.sin(phi)
        return cos_phi, sin_phi, -sin_phi * dphi, cos_phi * dphi


@schedule_family('qab-quadratic')
class QabQuadraticSchedule(QuadraticConstraintSchedule):
    pass


@schedule_family('cd-quadratic')
class CdQuadraticSchedule(QuadraticConstraintSchedule):
    pass


@schedule_family('custom-tabulated')
class TabulatedSchedule(Schedule):
    """User schedule interpolated with monotone cubic (PCHIP) splines."""

    def __init__(self, spec):
        super().__init__(spec)
        t, a, b = (np.asarray(column, dtype=float) for column in spec.table)
        if not math.isclose(t[-1], spec.final_time, rel_tol=1e-12):
            raise ConfigurationError(
                f"Table ends at t={t[-1]!r}, expected {spec.final_time!r}"
            )
        self._a = PchipInterpolator(t, a)
        self._b = PchipInterpolator(t, b)
        self._da = self._a.derivative()
        self._db = self._b.derivative()

    def _coefficients(self, t):
        return self._a(t), self._b(t), self._da(t), self._db(t)


def tabulated_spec(size: int, t, a, b) -> ScheduleSpec:
    """Return a custom-tabulated ScheduleSpec from arrays t, A, B.

    t must start at 0 and increase strictly; B(0) = 0 and A(t_f) = 0 are
        required within 1e-8.
    """
    t, a, b = (np.asarray(column, dtype=float) for column in (t, a, b))
    if not (t.ndim == 1 and t.shape == a.shape == b.shape):
        raise ConfigurationError("t, A and B must be 1-d arrays of same size")
    if len(t) < 4:
        raise ConfigurationError("A tabulated schedule needs >= 4 rows")
    if not np.all(np.isfinite(np.concatenate([t, a, b]))):
        raise ConfigurationError("Tabulated schedule has non-finite values")
    if t[0] != 0:
        raise ConfigurationError(f"First row must have t=0, got t={t[0]!r}")
    steps = np.diff(t)
    if np.any(steps <= 0):
        row = int(np.argmax(steps <= 0)) + 1
        raise ConfigurationError(f"Times must increase strictly (row {row})")
    if abs(b[0]) > 1e-8:
        raise ConfigurationError(f"B(0) must vanish, got {b[0]!r}")
    if abs(a[-1]) > 1e-8:
        raise ConfigurationError(f"A(t_f) must vanish, got {a[-1]!r}")
    return ScheduleSpec(family='custom-tabulated', size=size,
                        final_time=float(t[-1]), table=(t, a, b))


def load_tabulated(file_, size: int) -> ScheduleSpec:
    """Return the custom-tabulated spec stored in CSV `file_` (`t,A,B`)."""
    rows = csv_read(file_, default=None)
    if rows is None:
        raise ConfigurationError(f"Schedule file `{file_}` not found")
    if not rows or any(key not in rows[0] for key in ('t', 'A', 'B')):
        raise ConfigurationError(
            f"Schedule file `{file_}` needs header `t,A,B` and data rows"
        )
    columns = {'t': [], 'A': [], 'B': []}
    for line_number, row in enumerate(rows, start=2):
        for key, column in columns.items():
            try:
                column.append(float(row[key]))
            except (TypeError, ValueError):
                raise ConfigurationError(
                    f"Line {line_number}: invalid {key} value {row.get(key)!r}"
                )
    logging.info(f"Loaded {len(rows)} schedule rows from `{file_}`")
    return tabulated_spec(size, columns['t'], columns['A'], columns['B'])


def eval_schedule(spec: ScheduleSpec, t) -> SchedulePoint:
    """Return (A, B, dA, dB) of `spec` at time(s) `t`."""
    return spec.schedule.evaluate(t)


def sample_schedule(spec: ScheduleSpec, samples: int):
    """Return uniform times and the SchedulePoint arrays there."""
    return spec.schedule.sample(samples)


def _geodesic_path(log_slope: Callable, velocity: float, end: float,
                   tau=None):
    """Return the solve_ivp solution of q'' = -q'^2 g'(q) / (2 g(q)).

    q(0) = 0, dq(0) = `velocity`; integration stops early if q exceeds
        ten times `end`.
    """
    def geodesic(_, y):
        return [y[1], -0.5 * y[1] ** 2 * log_slope(y[0])]

    def escaped(_, y):
        return y[0] - 10 * end
    escaped.terminal = True

    return solve_ivp(geodesic, (0.0, 1.0), [0.0, velocity], method='DOP853',
                     t_eval=tau, events=escaped, rtol=1e-12, atol=1e-13)


def solve_euler_lagrange(size: int, functional: str, constraint: str,
                         steps: int = 4000) -> Tuple[np.ndarray, np.ndarray]:
    """Return (tau, q) on `steps` + 1 uniform points solving the
    Euler-Lagrange equation of the Lagrangian dq^2 g(q).

    q(0) = 0 and q(1) = 1 (linear) or pi/2 (quadratic); the initial
        velocity is found by shooting with `scipy.optimize.brentq`.
    """
    size = check_size(size)
    end = 1.0 if constraint == 'linear' else math.pi / 2
    # Validate names before the scalar integrations
    constraint_metric(size, functional, constraint, 0.0)

    def log_slope(q):
        return _metric_terms(size, functional, constraint, q, lib=math)[1]

    def miss(velocity):
        solution = _geodesic_path(log_slope, velocity, end)
        if solution.status != 0 or not np.isfinite(solution.y[0, -1]):
            return 10 * end
        return solution.y[0, -1] - end

    low, high = 0.0, end
    for _ in range(60):
        if miss(high) > 0:
            break
        low, high = high, 2 * high
    else:
        raise ConfigurationError("Could not bracket the geodesic velocity")
    velocity = brentq(miss, low, high, xtol=1e-13, rtol=1e-13, maxiter=200)
    logging.debug(
        f"Euler-Lagrange {functional}/{constraint} N={size}: "
        f"initial velocity {velocity:.12g}"
    )
    tau = np.linspace(0.0, 1.0, steps + 1)
    return tau, _geodesic_path(log_slope, velocity, end, tau=tau).y[0]
