"""Counterdiabatic term and adiabaticity error functionals.

The counterdiabatic (CD) term of the two-level Grover Hamiltonian is
    H_CD = -(dtheta / 2) sigma_y
    and equals the spin formula (n x dn/dt) . S with S = sigma / 2.
The error functionals measure how fast a schedule moves:
    L_QAB = Tr(dH/dt^2) / Delta^4 (evaluated on the two-level block)
    L_CD = Tr(H_CD^2) / Delta^2
"""

# Standard library modules
import dataclasses
import logging
import math

# Third party modules
import numpy as np
from scipy.integrate import simpson

# Project modules
from stagrover.config import DEFAULT_SETTINGS
from stagrover.errors import ConfigurationError
from stagrover.model import (PAULI_Y, SchedulePoint, build_effective,
                             check_size)
from stagrover.schedules import FUNCTIONALS, ScheduleSpec, sample_schedule
from stagrover.utilities import scalar_or_array


@dataclasses.dataclass(frozen=True)
class CdTerm:
    """H_CD = -coeff * sigma_y, with coeff = dtheta / 2."""

    coeff: float

    @property
    def matrix(self) -> np.ndarray:
        """Return H_CD in the {|0>, |phi>} basis."""
        return -np.multiply.outer(np.asarray(self.coeff), PAULI_Y)


@dataclasses.dataclass(frozen=True)
class ErrorFunctionalSample:
    """Error functionals at one (or more) schedule points.

    The three parts add up to `l_qab`; they come from the time dependence
        of the energy offset, of the gap and of the direction n.
    """

    l_qab: float
    l_cd: float
    part_offset: float
    part_gap: float
    part_direction: float

    @property
    def parts(self):
        return self.part_offset, self.part_gap, self.part_direction

    def value(self, functional: str):
        """Return `l_qab` or `l_cd`."""
        if functional not in FUNCTIONALS:
            raise ConfigurationError(f"Unknown functional `{functional}`")
        return getattr(self, f"l_{functional}")


def cd_coefficient(size: int, point: SchedulePoint,
                   gap_floor: float = DEFAULT_SETTINGS.gap_floor) -> CdTerm:
    """Return the CD term at `point`; its coefficient is dtheta / 2."""
    hamiltonian = build_effective(size, point, gap_floor=gap_floor)
    return CdTerm(coeff=scalar_or_array(np.asarray(hamiltonian.dtheta) / 2))


def cd_spin(n, dn) -> np.ndarray:
    """Return n x dn, the CD field of a spin-1/2 along unit vector n(t)."""
    n = np.asarray(n, dtype=float)
    dn = np.asarray(dn, dtype=float)
    if n.shape != (3,) or dn.shape != (3,):
        raise ConfigurationError("n and dn must be 3-vectors")
    if abs(np.linalg.norm(n) - 1) > 1e-10:
        raise ConfigurationError(
            f"Field direction must be a unit vector, |n| = "
            f"{np.linalg.norm(n):.12g}"
        )
    if abs(np.dot(n, dn)) > 1e-8:
        raise ConfigurationError(
            "Derivative of a unit vector must be orthogonal to it"
        )
    return np.cross(n, dn)


def error_functionals(size: int, point: SchedulePoint,
                      gap_floor: float = DEFAULT_SETTINGS.gap_floor
                      ) -> ErrorFunctionalSample:
    """Return L_QAB, L_CD and the decomposition of L_QAB at `point`.

    l_qab = (dA^2 + dB^2 + (2/N) dA dB) / Delta^4
    l_cd = dtheta^2 / (2 Delta^2)
          = (2 (N - 1) / N^2) (A dB - B dA)^2 / Delta^6
    parts = (2 dE0^2 / Delta^4, dDelta^2 / (2 Delta^4), dtheta^2 / (2 Delta^2))
    """
    size = check_size(size)
    h = build_effective(size, point, gap_floor=gap_floor)
    gap = np.asarray(h.gap, dtype=float)
    da = np.asarray(point.dA, dtype=float)
    db = np.asarray(point.dB, dtype=float)
    gap_4 = gap ** 4
    direction = np.asarray(h.dtheta) ** 2 / (2 * gap ** 2)
    return ErrorFunctionalSample(
        l_qab=scalar_or_array((da ** 2 + db ** 2 + 2 * da * db / size)
                              / gap_4),
        l_cd=scalar_or_array(direction),
        part_offset=scalar_or_array(2 * np.asarray(h.de0) ** 2 / gap_4),
        part_gap=scalar_or_array(np.asarray(h.dgap) ** 2 / (2 * gap_4)),
        part_direction=scalar_or_array(direction),
    )


def integrate_functional(size: int, points: SchedulePoint, t,
                         functional: str) -> float:
    """Return the Simpson integral over `t` of a functional at `points`."""
    values = np.asarray(error_functionals(size, points).value(functional))
    return float(simpson(values, x=np.asarray(t, dtype=float)))


def action(spec: ScheduleSpec, functional: str,
           samples: int = DEFAULT_SETTINGS.action_samples) -> float:
    """Return the time integral of `functional` along the schedule."""
    if samples < 16:
        raise ConfigurationError("Action integrals need at least 16 samples")
    if functional not in FUNCTIONALS:
        raise ConfigurationError(f"Unknown functional `{functional}`")
    # Odd sample counts give Simpson an even number of intervals
    samples += 1 - samples % 2
    t, points = sample_schedule(spec, samples)
    total = integrate_functional(spec.size, points, t, functional)
    if not math.isfinite(total):
        raise ConfigurationError(
            f"Action of {spec.family} schedule is not finite"
        )
    logging.debug(
        f"{functional} action of {spec.family} (N={spec.size}, "
        f"t_f={spec.final_time}): {total:.12g}"
    )
    return total
