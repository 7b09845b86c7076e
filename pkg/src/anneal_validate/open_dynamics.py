"""
Time-dependent Davies master equation for the two-qubit anneal.

Each qubit couples to its own Ohmic bath through sigma^z. Lindblad operators
are built in the instantaneous energy eigenbasis and grouped by Bohr
frequency, so the dissipator only depends on the spectral projectors of H(s)
and not on the eigenvector gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .closed_dynamics import initial_ground_state
from .hamiltonian import (NOMINAL_ISING, Z1, Z2, IsingParams, ScheduleParams,
                          build_hamiltonian, hamiltonian_matrix, problem_hamiltonian)
from .integrate import IntegrationError, solve
from .spectrum import DEGENERACY_TOL, SpectralDecomposition, diagonalize

RTOL = 1e-10
ATOL = 1e-13
POSITIVITY_ABORT = -1e-5

_COUPLINGS = np.ascontiguousarray(np.stack([Z1, Z2]))
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def ohmic_kernel(w, kappa2, temperature, cutoff):
    if kappa2 == 0.0:
        return 0.0
    if w == 0.0:
        return _TWO_PI * kappa2 * temperature
    # w / (1 - exp(-w/T)) written with expm1 so both signs stay accurate
    return _TWO_PI * kappa2 * math.exp(-abs(w) / cutoff) * w / (-math.expm1(-w / temperature))


def ohmic_rate(w: float, params: ScheduleParams) -> float:
    """Ohmic bath rate gamma(w) with KMS detailed balance at ``params.temperature``.

    ``2 pi kappa^2 w exp(-|w|/w_c) / (1 - exp(-w/T))``, continued to
    ``2 pi kappa^2 T`` at w = 0.
    """
    return ohmic_kernel(float(w), params.kappa2, params.temperature, params.cutoff)


@njit(cache=True)
def group_frequencies(energies, tol):
    """Bohr-frequency group label for each pair (a, b), w = E_b - E_a.

    Returns ``(labels, freqs)``; ``labels[a, b]`` indexes ``freqs``. Groups
    are formed by single linkage on the sorted frequencies.
    """
    n = energies.size
    w = np.empty(n * n)
    for a in range(n):
        for b in range(n):
            w[a * n + b] = energies[b] - energies[a]
    order = np.argsort(w)
    labels_flat = np.empty(n * n, dtype=np.int64)
    sums = np.zeros(n * n)
    counts = np.zeros(n * n)
    g = 0
    for k in range(n * n):
        idx = order[k]
        if k > 0 and w[idx] - w[order[k - 1]] > tol:
            g += 1
        labels_flat[idx] = g
        sums[g] += w[idx]
        counts[g] += 1.0
    freqs = sums[:g + 1] / counts[:g + 1]
    return labels_flat.reshape((n, n)), freqs


@njit(cache=True)
def _dissipator_eigenbasis(rho_e, couplings_e, labels, freqs, kappa2, temperature, cutoff):
    out = np.zeros((4, 4), dtype=np.complex128)
    for q in range(couplings_e.shape[0]):
        S = couplings_e[q]
        for g in range(freqs.size):
            rate = ohmic_kernel(freqs[g], kappa2, temperature, cutoff)
            if rate == 0.0:
                continue
            L = np.zeros((4, 4), dtype=np.complex128)
            nonzero = False
            for a in range(4):
                for b in range(4):
                    if labels[a, b] == g and S[a, b] != 0.0:
                        L[a, b] = S[a, b]
                        nonzero = True
            if not nonzero:
                continue
            Lt = L.T.copy()
            LtL = Lt @ L
            out += rate * (L @ rho_e @ Lt - 0.5 * (LtL @ rho_e + rho_e @ LtL))
    return out


@njit(cache=True)
def master_rhs(t, y, args):
    # args: omega_tf, alpha, beta, h1, h2, j12, kappa2, temperature, cutoff, frozen_s
    s = args[9] if args[9] >= 0.0 else t
    H = hamiltonian_matrix(s, args[1], args[2], args[3], args[4], args[5]).astype(np.complex128)
    rho = y.reshape((4, 4))
    drho = -1.0j * (H @ rho - rho @ H)
    if args[6] > 0.0:
        E, V = np.linalg.eigh(H.real)
        Vc = V.astype(np.complex128)
        rho_e = Vc.T @ rho @ Vc
        couplings_e = np.empty((2, 4, 4))
        for q in range(2):
            couplings_e[q] = V.T @ _COUPLINGS[q] @ V
        labels, freqs = group_frequencies(E, DEGENERACY_TOL)
        d_e = _dissipator_eigenbasis(rho_e, couplings_e, labels, freqs,
                                     args[6], args[7], args[8])
        drho += Vc @ d_e @ Vc.T
    return (args[0] * drho).reshape(16)


def _args(params: ScheduleParams, ising: IsingParams, frozen_s: float = -1.0) -> np.ndarray:
    return np.array([params.omega_tf, params.alpha, params.beta_offset,
                     ising.h1, ising.h2, ising.j12,
                     params.kappa2, params.temperature, params.cutoff, frozen_s])


@dataclass(frozen=True)
class BohrDecomposition:
    """Davies Lindblad operators at one s, in the computational basis.

    ``lindblads[(k, i)]`` is L_{w,i} for ``w = frequencies[k]`` and qubit ``i``
    (0 or 1).
    """

    frequencies: np.ndarray
    lindblads: dict

    def operators_for(self, qubit: int) -> list[np.ndarray]:
        return [self.lindblads[(k, qubit)] for k in range(len(self.frequencies))]


def build_lindblads(decomp: SpectralDecomposition) -> BohrDecomposition:
    """Group <E_a|Z_i|E_b> |E_a><E_b| by Bohr frequency E_b - E_a."""
    E = np.asarray(decomp.eigenvalues, dtype=float)
    V = decomp.eigenvectors
    labels, freqs = group_frequencies(E, DEGENERACY_TOL)
    lindblads = {}
    for i, Z in enumerate((Z1, Z2)):
        S = V.conj().T @ Z @ V
        for k in range(len(freqs)):
            mask = labels == k
            lindblads[(k, i)] = V @ np.where(mask, S, 0.0) @ V.conj().T
    return BohrDecomposition(frequencies=freqs, lindblads=lindblads)


def davies_generator(rho: np.ndarray, s: float, params: ScheduleParams,
                     ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """d rho / dt (units of omega) at fixed s, unitary part included."""
    unit_time = ScheduleParams(alpha=params.alpha, beta_offset=params.beta_offset,
                               omega_tf=1.0, kappa2=params.kappa2,
                               temperature=params.temperature, cutoff=params.cutoff)
    y = np.ascontiguousarray(rho, dtype=np.complex128).reshape(16)
    return master_rhs(float(s), y, _args(unit_time, ising, float(s))).reshape(4, 4)


def liouvillian(s: float, params: ScheduleParams, ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """16x16 matrix of the frozen-s generator acting on row-major vec(rho)."""
    out = np.empty((16, 16), dtype=np.complex128)
    for k in range(16):
        basis = np.zeros(16, dtype=np.complex128)
        basis[k] = 1.0
        out[:, k] = davies_generator(basis.reshape(4, 4), s, params, ising).reshape(16)
    return out


def gibbs_state(H: np.ndarray, temperature: float) -> np.ndarray:
    E, V = np.linalg.eigh(H)
    weights = np.exp(-(E - E.min()) / temperature)
    weights /= weights.sum()
    return (V * weights) @ V.conj().T


def ising_gibbs_populations(temperature: float, ising: IsingParams = NOMINAL_ISING) -> np.ndarray:
    """Boltzmann populations of the four computational states under H_P."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    energies = np.diag(problem_hamiltonian(ising))
    weights = np.exp(-(energies - energies.min()) / temperature)
    return weights / weights.sum()


def check_density_matrix(rho: np.ndarray, s: float, floor: float = POSITIVITY_ABORT) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise IntegrationError("density matrix lost Hermiticity", s)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < floor:
        raise IntegrationError(f"positivity violated (min eigenvalue {lam:.3e}); step too coarse", s)


def evolve_master_trajectory(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
                             checkpoints=(0.0, 1.0), rtol: float = RTOL,
                             atol: float = ATOL) -> np.ndarray:
    """Density matrices at the requested s checkpoints."""
    psi0 = initial_ground_state(params, ising)
    rho0 = np.outer(psi0, psi0.conj())
    states, _ = solve(master_rhs, rho0.reshape(16), checkpoints, _args(params, ising), rtol, atol)
    rhos = states.reshape(-1, 4, 4)
    for s, rho in zip(checkpoints, rhos):
        check_density_matrix(rho, float(s))
    return rhos


def evolve_master(params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
                  n_checkpoints: int = 101, rtol: float = RTOL, atol: float = ATOL):
    """Integrate the master equation from the ground state of H(0) to s = 1.

    Returns
    -------
    final : ndarray, shape (4, 4)
        Density matrix at s = 1.
    trace : list of (s, ground_population)
        Instantaneous ground-state population at ``n_checkpoints`` uniformly
        spaced anneal fractions.
    """
    s_grid = np.linspace(0.0, 1.0, n_checkpoints)
    rhos = evolve_master_trajectory(params, ising, s_grid, rtol, atol)
    trace = []
    prev = None
    for s, rho in zip(s_grid, rhos):
        prev = diagonalize(build_hamiltonian(float(s), params, ising), prev, s=float(s))
        trace.append((float(s), float(np.trace(prev.ground_projector() @ rho).real)))
    return rhos[-1], trace


def relax_frozen(s: float, params: ScheduleParams, ising: IsingParams = NOMINAL_ISING,
                 duration: float = 1e4, initial: np.ndarray | None = None,
                 rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Evolve for ``duration`` (units of 1/omega) with H held at H(s)."""
    frozen = ScheduleParams(alpha=params.alpha, beta_offset=params.beta_offset,
                            omega_tf=1.0, kappa2=params.kappa2,
                            temperature=params.temperature, cutoff=params.cutoff)
    if initial is None:
        initial = np.zeros((4, 4), dtype=np.complex128)
        initial[0, 0] = 1.0
    states, _ = solve(master_rhs, np.asarray(initial, np.complex128).reshape(16),
                      (0.0, float(duration)), _args(frozen, ising, float(s)), rtol, atol)
    return states[-1].reshape(4, 4)
