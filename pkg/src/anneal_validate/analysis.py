"""
Entanglement negativity of two-qubit states and the alpha sweeps built on it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .closed_dynamics import evolve
from .hamiltonian import NOMINAL_ISING, IsingParams, ScheduleParams
from .open_dynamics import evolve_master
from .perturbation import first_order_spectrum

MODES = ("closed", "open", "perturbative")
CLAMP = 1e-12


@dataclass(frozen=True)
class NegativityReport:
    alpha: float
    negativity: float
    source: str


def partial_transpose(rho: np.ndarray, qubit: int = 1) -> np.ndarray:
    """Partial transpose of a 4x4 density matrix over qubit 0 or 1."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if qubit == 1:
        return r.transpose(0, 3, 2, 1).reshape(4, 4)
    if qubit == 0:
        return r.transpose(2, 1, 0, 3).reshape(4, 4)
    raise ValueError("qubit must be 0 or 1")


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def negativity(rho, qubit: int = 1) -> float:
    """N(rho) = (||rho^T_B||_1 - 1) / 2, from the eigenvalues of rho^T_B.

    Accepts a density matrix or a state vector.
    """
    rho = _as_density(rho)
    if rho.shape != (4, 4):
        raise ValueError("negativity is defined here for two-qubit (4x4) states")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-6:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.8f} is not 1")
    pt = partial_transpose(rho, qubit)
    lam = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    value = 0.5 * (np.abs(lam).sum() - 1.0)
    return 0.0 if value < CLAMP else float(value)


def perturbative_ground_state(alpha: float, beta_offset: float) -> np.ndarray:
    return first_order_spectrum(alpha, beta_offset)[0].embed()


def negativity_sweep(alpha_grid, params: ScheduleParams, mode: str = "perturbative",
                     ising: IsingParams = NOMINAL_ISING) -> list[NegativityReport]:
    """Negativity along an alpha grid at the other settings of ``params``.

    ``perturbative`` uses the first-order ground state near s = 1; ``closed``
    and ``open`` evolve to s = 1 and use the final state.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    alphas = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    if alphas.size == 0:
        raise ValueError("alpha grid is empty")
    out = []
    for a in alphas:
        p = replace(params, alpha=float(a))
        if mode == "perturbative":
            state = perturbative_ground_state(float(a), p.beta_offset)
        elif mode == "closed":
            state = evolve(replace(p, kappa2=0.0), ising)
        else:
            state, _ = evolve_master(p, ising, n_checkpoints=2)
        out.append(NegativityReport(alpha=float(a), negativity=negativity(state), source=mode))
    return out
