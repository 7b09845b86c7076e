"""
Degenerate perturbation theory about the end of the anneal.

With Gamma = 1 - s the Hamiltonian expands as
H(s) = H_P + Gamma V1 + Gamma^2 V2, and the first-order correction lifts the
three-fold degeneracy of the H_P ground space {|00>, |01>, |10>}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hamiltonian import X1, X2, XX, build_swap, problem_hamiltonian

GROUND_INDICES = (0, 1, 2)
SYMMETRY_TOL = 1e-9
DEGENERATE_TOL = 1e-10

_SWAP = build_swap()


@dataclass(frozen=True)
class PerturbativeState:
    """First-order eigenvector over (|00>, |01>, |10>) and its eigenvalue."""

    amplitudes: np.ndarray
    eigenvalue: float
    symmetry: str

    def embed(self) -> np.ndarray:
        """Four-component state with zero |11> amplitude."""
        psi = np.zeros(4)
        psi[list(GROUND_INDICES)] = self.amplitudes
        return psi


@dataclass(frozen=True)
class PerturbationPoint:
    gamma: float
    alpha: float
    beta_offset: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


class GroundObservables(NamedTuple):
    swap: float
    p00: float
    ill_conditioned: bool


def first_order_operator(alpha: float, beta_offset: float = 0.0) -> np.ndarray:
    """V1 = -(X1 + (1-beta) X2) + alpha X1 X2 - H_P on the full space."""
    return -(X1 + (1.0 - beta_offset) * X2) + alpha * XX - problem_hamiltonian()


def second_order_operator(alpha: float) -> np.ndarray:
    return -alpha * XX


def gamma_pm(alpha: float) -> tuple[float, float]:
    root = math.sqrt(8.0 + alpha * alpha)
    return 0.5 * (alpha + root), 0.5 * (alpha - root)


def closed_form_spectrum(alpha: float) -> dict:
    """Analytic eigenpairs of the projected V1 at beta = 0.

    Keys ``antisymmetric``, ``symmetric_low``, ``symmetric_high`` map to
    ``(eigenvalue, amplitudes over |00>, |01>, |10>)``.
    """
    gp, gm = gamma_pm(alpha)
    anti = np.array([0.0, 1.0, -1.0]) / math.sqrt(2.0)
    low = np.array([gp, 1.0, 1.0]) / math.sqrt(gp * gp + 2.0)
    high = np.array([gm, 1.0, 1.0]) / math.sqrt(gm * gm + 2.0)
    return {
        "antisymmetric": (1.0 - alpha, anti),
        "symmetric_low": (1.0 + gm, low),
        "symmetric_high": (1.0 + gp, high),
    }


def _symmetry_label(amplitudes: np.ndarray) -> str:
    psi = np.zeros(4)
    psi[list(GROUND_INDICES)] = amplitudes
    value = psi @ _SWAP @ psi
    if abs(value - 1.0) <= SYMMETRY_TOL:
        return "symmetric"
    if abs(value + 1.0) <= SYMMETRY_TOL:
        return "antisymmetric"
    return "mixed"


def first_order_spectrum(alpha: float, beta_offset: float = 0.0) -> list[PerturbativeState]:
    """Eigenpairs of V1 projected onto the H_P ground space, ascending."""
    idx = np.array(GROUND_INDICES)
    block = first_order_operator(alpha, beta_offset)[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(block)
    states = []
    for j in range(3):
        amp = v[:, j]
        # sign convention: first non-negligible amplitude positive
        lead = amp[np.flatnonzero(np.abs(amp) > 1e-12)[0]]
        amp = amp * np.sign(lead)
        states.append(PerturbativeState(amplitudes=amp, eigenvalue=float(w[j]),
                                        symmetry=_symmetry_label(amp)))
    return states


def perturbative_ground_observables(alpha: float, beta_offset: float = 0.0) -> GroundObservables:
    """<SWAP> and P(|00>) of the lowest first-order state.

    ``ill_conditioned`` is set when the two lowest first-order eigenvalues
    are closer than 1e-10; the ground state is then not unique.
    """
    states = first_order_spectrum(alpha, beta_offset)
    psi = states[0].embed()
    return GroundObservables(
        swap=float(psi @ _SWAP @ psi),
        p00=float(psi[0] ** 2),
        ill_conditioned=bool(states[1].eigenvalue - states[0].eigenvalue < DEGENERATE_TOL),
    )


def _second_order_energy(psi: np.ndarray, v1: np.ndarray, v2: np.ndarray,
                         gamma: float) -> float:
    hp = np.diag(problem_hamiltonian())
    e0 = hp.min()
    excited = np.flatnonzero(hp - e0 > DEGENERATE_TOL)
    first = psi @ v1 @ psi
    coupling = v1[excited] @ psi
    shift = psi @ v2 @ psi - np.sum(coupling ** 2 / (hp[excited] - e0))
    return float(e0 + first * gamma + shift * gamma ** 2)


def second_order_energies(point: PerturbationPoint) -> tuple[float, float]:
    """Energies of the antisymmetric and lower symmetric states to O(Gamma^2).

    Returns ``(E2, E2_prime)`` in units of hbar*omega. Only defined for the
    symmetric Hamiltonian (``beta_offset == 0``).
    """
    if point.beta_offset != 0.0:
        raise ValueError("second-order energies are only defined for beta_offset = 0")
    forms = closed_form_spectrum(point.alpha)
    v1 = first_order_operator(point.alpha)
    v2 = second_order_operator(point.alpha)
    anti = np.zeros(4)
    anti[:3] = forms["antisymmetric"][1]
    sym = np.zeros(4)
    sym[:3] = forms["symmetric_low"][1]
    return (_second_order_energy(anti, v1, v2, point.gamma),
            _second_order_energy(sym, v1, v2, point.gamma))


def alpha_sweep(alphas, betas) -> list[dict]:
    """Ground-state observables and first-order eigenvalues over an alpha grid."""
    rows = []
    for beta in betas:
        for alpha in alphas:
            states = first_order_spectrum(alpha, beta)
            obs = perturbative_ground_observables(alpha, beta)
            rows.append({
                "alpha": float(alpha), "beta": float(beta),
                "swap": obs.swap, "p00": obs.p00,
                "lambda0": states[0].eigenvalue,
                "lambda1": states[1].eigenvalue,
                "lambda2": states[2].eigenvalue,
            })
    return rows
