"""
Two-qubit annealing Hamiltonian and fixed operators.

All energies are in units of hbar*omega. Operators are dense 4x4 arrays in
the computational basis ordered |00>, |01>, |10>, |11>, where |0> is the +1
eigenstate of sigma^z. Qubit 1 is the left tensor factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

BASIS_LABELS = ("00", "01", "10", "11")

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])

X1 = np.kron(SX, I2)
X2 = np.kron(I2, SX)
Z1 = np.kron(SZ, I2)
Z2 = np.kron(I2, SZ)
XX = np.kron(SX, SX)
ZZ = np.kron(SZ, SZ)

DEFAULT_BETA = 0.05
DEFAULT_TEMPERATURE = 1.57
DEFAULT_CUTOFF = 8.0 * math.pi
HERMITIAN_TOL = 1e-12


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ScheduleParams:
    """Dimensionless experiment knobs shared by every simulation.

    Parameters
    ----------
    alpha : float
        XX coupling strength; positive is antiferromagnetic.
    beta_offset : float
        Reduction of qubit 2's transverse field, in [0, 1).
    omega_tf : float
        Total anneal time in units of 1/omega.
    kappa2 : float
        System-bath coupling.
    temperature : float
        k_B T / (hbar omega).
    cutoff : float
        Ohmic cutoff frequency.
    """

    alpha: float = 2.0
    beta_offset: float = DEFAULT_BETA
    omega_tf: float = 1e4
    kappa2: float = 0.0
    temperature: float = DEFAULT_TEMPERATURE
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        _require_finite(alpha=self.alpha, beta_offset=self.beta_offset,
                        omega_tf=self.omega_tf, kappa2=self.kappa2,
                        temperature=self.temperature, cutoff=self.cutoff)
        if not 0.0 <= self.beta_offset < 1.0:
            raise ValueError(f"beta_offset must lie in [0, 1), got {self.beta_offset}")
        if self.omega_tf <= 0:
            raise ValueError(f"omega_tf must be positive, got {self.omega_tf}")
        if self.kappa2 < 0:
            raise ValueError(f"kappa2 must be non-negative, got {self.kappa2}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.cutoff <= 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class IsingParams:
    """Coefficients of H_P = -h1 Z1 - h2 Z2 + j12 Z1 Z2."""

    h1: float = 1.0
    h2: float = 1.0
    j12: float = 1.0

    def __post_init__(self):
        _require_finite(h1=self.h1, h2=self.h2, j12=self.j12)

    def as_array(self) -> np.ndarray:
        return np.array([self.h1, self.h2, self.j12])


NOMINAL_ISING = IsingParams()


@njit(cache=True)
def hamiltonian_matrix(s, alpha, beta, h1, h2, j12):
    """Real symmetric H(s) built entry by entry (jit-friendly kernel).

    Index ``2*b1 + b2``; X1 flips bit 2, X2 flips bit 1, XX flips both.
    """
    out = np.zeros((4, 4))
    g = 1.0 - s
    tx1 = -g
    tx2 = -g * (1.0 - beta)
    txx = alpha * s * g
    for k in range(4):
        z1 = 1.0 - 2.0 * (k >> 1)
        z2 = 1.0 - 2.0 * (k & 1)
        out[k, k] = s * (-h1 * z1 - h2 * z2 + j12 * z1 * z2)
        out[k, k ^ 2] = tx1
        out[k, k ^ 1] = tx2
        out[k, k ^ 3] = txx
    return out


def build_hamiltonian(s: float, params: ScheduleParams,
                      ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """Instantaneous Hamiltonian H(s) with asymmetric transverse field.

    ``-(1-s)(X1 + (1-beta) X2) + alpha s (1-s) X1 X2 + s H_P``
    """
    _require_finite(s=s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"anneal fraction s must lie in [0, 1], got {s}")
    return hamiltonian_matrix(float(s), params.alpha, params.beta_offset,
                              ising.h1, ising.h2, ising.j12)


def problem_hamiltonian(ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """The diagonal Ising Hamiltonian H_P reached at s = 1."""
    return -ising.h1 * Z1 - ising.h2 * Z2 + ising.j12 * ZZ


def build_swap() -> np.ndarray:
    """Qubit interchange operator (1 + XX + YY + ZZ) / 2."""
    swap = 0.5 * (np.eye(4) + XX + np.kron(SY, SY) + ZZ)
    return swap.real.copy()


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return op.shape == (4, 4) and np.max(np.abs(op - op.conj().T)) <= tol


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
