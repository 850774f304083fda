"""Two-level representation of the Grover Hamiltonian.

The Hamiltonian A(t)(1 - |+><+|) + B(t)(1 - |0><0|) never leaves the span of
    the marked state |0> and of the uniform superposition |phi> of unmarked
    states. In the basis {|0>, |phi>} it reads
        E0 * I + (Delta / 2) * n . sigma,    n = (-sin(theta), 0, cos(theta))
All functions accept python floats or numpy arrays (one entry per time
    sample) and return the same kind of object they were given.
"""

# Standard library modules
import dataclasses
import math
from typing import Union

# Third party modules
import numpy as np

# Project modules
from stagrover.config import DEFAULT_SETTINGS
from stagrover.errors import ConfigurationError, DegenerateGapError
from stagrover.utilities import scalar_or_array

Real = Union[float, np.ndarray]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def check_size(size) -> int:
    """Return `size` as int, raising ConfigurationError unless it is >= 2."""
    if isinstance(size, bool) or int(size) != size:
        raise ConfigurationError(f"Problem size must be an integer, got {size!r}")
    if size < 2:
        raise ConfigurationError(
            f"Problem size must be at least 2, got {size}"
        )
    return int(size)


@dataclasses.dataclass(frozen=True)
class SchedulePoint:
    """Schedule coefficients and their time derivatives at one (or more) t."""

    A: Real
    B: Real
    dA: Real = 0.0
    dB: Real = 0.0


@dataclasses.dataclass(frozen=True)
class EffectiveHamiltonian:
    """Instantaneous decomposition E0 * I + (gap / 2) * n . sigma.

    `de0` and `dgap` are the time derivatives of `e0` and `gap`.
    """

    e0: Real
    gap: Real
    theta: Real
    dtheta: Real
    de0: Real = 0.0
    dgap: Real = 0.0

    @property
    def eigenvalues(self):
        """Return (ground, excited) energies."""
        return self.e0 - self.gap / 2, self.e0 + self.gap / 2

    @property
    def axis(self) -> np.ndarray:
        """Unit vector n = (-sin(theta), 0, cos(theta)), last axis of size 3."""
        theta = np.asarray(self.theta, dtype=float)
        return np.stack(
            [-np.sin(theta), np.zeros_like(theta), np.cos(theta)],
            axis=-1
        )


@dataclasses.dataclass(frozen=True)
class QubitState:
    """Amplitudes on |0> (marked state) and |phi> (unmarked states)."""

    c0: complex
    cphi: complex

    @classmethod
    def from_vector(cls, vector):
        vector = np.asarray(vector, dtype=complex)
        return cls(complex(vector[0]), complex(vector[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c0, self.cphi], dtype=complex)

    @property
    def norm_squared(self) -> float:
        return abs(self.c0) ** 2 + abs(self.cphi) ** 2

    @property
    def marked_probability(self) -> float:
        """Return |<0|psi>|^2, the success probability of the search."""
        return abs(self.c0) ** 2

    def overlap(self, other: 'QubitState') -> float:
        """Return |<other|self>|^2."""
        return abs(
            np.conj(other.c0) * self.c0 + np.conj(other.cphi) * self.cphi
        ) ** 2


def initial_mixing_angle(size: int) -> float:
    """Return theta(0), the mixing angle of the driver Hamiltonian."""
    size = check_size(size)
    return math.atan2(2 * math.sqrt(size - 1) / size, (size - 2) / size)


def build_effective(size: int, point: SchedulePoint,
                    gap_floor: float = DEFAULT_SETTINGS.gap_floor
                    ) -> EffectiveHamiltonian:
    """Return the two-level decomposition of the Grover Hamiltonian.

    E0 = (A + B) / 2
    Delta = sqrt((A - B)^2 + 4AB/N)
    theta = atan2(2 sqrt(N-1) A / N, (1 - 2/N) A - B)
    dtheta = 2 (sqrt(N-1) / N) (A dB - B dA) / Delta^2
    Raise DegenerateGapError if Delta falls below `gap_floor` anywhere.
    """
    size = check_size(size)
    a = np.asarray(point.A, dtype=float)
    b = np.asarray(point.B, dtype=float)
    da = np.asarray(point.dA, dtype=float)
    db = np.asarray(point.dB, dtype=float)
    gap_squared = (a - b) ** 2 + 4 * a * b / size
    gap = np.sqrt(np.maximum(gap_squared, 0.0))
    if np.any(~(gap > gap_floor)):
        raise DegenerateGapError(float(np.min(gap)), gap_floor)
    coupling = math.sqrt(size - 1) / size
    theta = np.arctan2(2 * coupling * a, (1 - 2 / size) * a - b)
    dtheta = 2 * coupling * (a * db - b * da) / gap_squared
    dgap = ((a - b) * (da - db) + 2 * (da * b + a * db) / size) / gap
    return EffectiveHamiltonian(
        e0=scalar_or_array((a + b) / 2),
        gap=scalar_or_array(gap),
        theta=scalar_or_array(theta),
        dtheta=scalar_or_array(dtheta),
        de0=scalar_or_array((da + db) / 2),
        dgap=scalar_or_array(dgap),
    )


def initial_ground_state(size: int) -> QubitState:
    """Return |+> in the {|0>, |phi>} basis."""
    size = check_size(size)
    return QubitState(complex(1 / math.sqrt(size)),
                      complex(math.sqrt((size - 1) / size)))


def ground_state_amplitudes(hamiltonian: EffectiveHamiltonian,
                            gap_floor: float = DEFAULT_SETTINGS.gap_floor):
    """Return real ground-state amplitudes (c0, cphi) as arrays.

    The ground state of E0 + (Delta/2) n.sigma is (sin(theta/2), cos(theta/2)),
        sign chosen so that c0 >= 0.
    """
    gap = np.asarray(hamiltonian.gap, dtype=float)
    if np.any(~(gap > gap_floor)):
        raise DegenerateGapError(float(np.min(gap)), gap_floor)
    half_theta = np.asarray(hamiltonian.theta, dtype=float) / 2
    c0, cphi = np.sin(half_theta), np.cos(half_theta)
    sign = np.where(c0 < 0, -1.0, 1.0)
    return c0 * sign, cphi * sign


def ground_state_of(hamiltonian: EffectiveHamiltonian,
                    gap_floor: float = DEFAULT_SETTINGS.gap_floor
                    ) -> QubitState:
    """Return the instantaneous ground state (eigenvalue E0 - Delta/2)."""
    c0, cphi = ground_state_amplitudes(hamiltonian, gap_floor=gap_floor)
    return QubitState(complex(c0), complex(cphi))


def effective_matrix(hamiltonian: EffectiveHamiltonian, with_cd: bool = False,
                     energy_offset: float = 0.0) -> np.ndarray:
    """Return E0 I + (Delta/2) n.sigma as complex array of shape (..., 2, 2).

    With `with_cd`, the counterdiabatic term -(dtheta/2) sigma_y is added.
    `energy_offset` is a constant added to E0 (it only moves the global
        phase).
    """
    e0 = np.asarray(hamiltonian.e0, dtype=float) + energy_offset
    half_gap = np.asarray(hamiltonian.gap, dtype=float) / 2
    theta = np.asarray(hamiltonian.theta, dtype=float)
    diagonal = half_gap * np.cos(theta)
    off_diagonal = -half_gap * np.sin(theta) + 0j
    if with_cd:
        off_diagonal = off_diagonal + 0.5j * np.asarray(hamiltonian.dtheta)
    matrix = np.empty(e0.shape + (2, 2), dtype=complex)
    matrix[..., 0, 0] = e0 + diagonal
    matrix[..., 1, 1] = e0 - diagonal
    matrix[..., 0, 1] = off_diagonal
    matrix[..., 1, 0] = np.conj(off_diagonal)
    return matrix


def bloch_vector(c0, cphi) -> np.ndarray:
    """Return <sigma> for amplitudes (c0, cphi), last axis of size 3.

    |0> is the +z pole. The overlap of the state with a pure state whose
        Bloch vector is m equals (|psi|^2 + b.m) / 2.
    """
    c0 = np.asarray(c0, dtype=complex)
    cphi = np.asarray(cphi, dtype=complex)
    coherence = np.conj(c0) * cphi
    return np.stack(
        [2 * coherence.real, 2 * coherence.imag,
         np.abs(c0) ** 2 - np.abs(cphi) ** 2],
        axis=-1
    )
