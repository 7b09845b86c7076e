"""
Closed-system annealing: the Schroedinger equation in the anneal fraction s,

    d psi / ds = -i (omega t_f) H(s) psi,

integrated from the ground state of H(0) to s = 1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from numba import njit

from .hamiltonian import NOMINAL_ISING, IsingParams, ScheduleParams, build_hamiltonian, hamiltonian_matrix
from .integrate import solve
from .spectrum import diagonalize

RTOL = 1e-12
ATOL = 1e-15
NORM_TOL = 1e-8


@njit(cache=True)
def schroedinger_rhs(s, psi, args):
    # args: omega_tf, alpha, beta, h1, h2, j12
    H = hamiltonian_matrix(s, args[1], args[2], args[3], args[4], args[5])
    out = np.empty(4, dtype=np.complex128)
    for i in range(4):
        acc = 0.0j
        for j in range(4):
            acc += H[i, j] * psi[j]
        out[i] = -1.0j * args[0] * acc
    return out


def _args(params: ScheduleParams, ising: IsingParams) -> np.ndarray:
    return np.array([params.omega_tf, params.alpha, params.beta_offset,
                     ising.h1, ising.h2, ising.j12])


def initial_ground_state(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """Ground state of H(0) for the given transverse-field asymmetry."""
    dec = diagonalize(build_hamiltonian(0.0, params, ising))
    return dec.ground_state.astype(np.complex128)


def evolve_trajectory(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
                      initial: Optional[np.ndarray] = None, checkpoints=(0.0, 1.0),
                      rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """States at each checkpoint in s, shape ``(len(checkpoints), 4)``."""
    psi0 = initial_ground_state(params, ising) if initial is None else np.asarray(initial, np.complex128)
    if abs(np.linalg.norm(psi0) - 1.0) > NORM_TOL:
        raise ValueError("initial state must be normalized")
    states, _ = solve(schroedinger_rhs, psi0, checkpoints, _args(params, ising), rtol, atol)
    return states


def evolve(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
           initial: Optional[np.ndarray] = None, rtol: float = RTOL,
           atol: float = ATOL) -> np.ndarray:
    """Final state at s = 1 of the closed-system anneal."""
    return evolve_trajectory(params, ising, initial, (0.0, 1.0), rtol, atol)[-1]


def populations(state: np.ndarray) -> np.ndarray:
    """Computational-basis populations |<b|psi>|^2, ordered 00, 01, 10, 11."""
    state = np.asarray(state)
    if state.ndim == 2:
        return np.clip(np.diagonal(state).real, 0.0, None)
    p = np.abs(state) ** 2
    if abs(p.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (sum of populations {p.sum():.10f})")
    return p


def ground_state_overlap_trace(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
                               n_checkpoints: int = 101) -> list[tuple[float, float]]:
    """Instantaneous ground-state population at uniformly spaced s values.

    At s = 1 the ground space of H_P is three-fold degenerate; the population
    of the whole degenerate ground space is reported there.
    """
    if n_checkpoints < 2:
        raise ValueError("n_checkpoints must be at least 2")
    s_grid = np.linspace(0.0, 1.0, n_checkpoints)
    states = evolve_trajectory(params, ising, checkpoints=s_grid)
    trace = []
    prev = None
    for s, psi in zip(s_grid, states):
        prev = diagonalize(build_hamiltonian(float(s), params, ising), prev, s=float(s))
        trace.append((float(s), float(np.vdot(psi, prev.ground_projector() @ psi).real)))
    return trace
