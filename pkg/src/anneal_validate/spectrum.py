"""
Exact diagonalization of the instantaneous Hamiltonian along the anneal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .hamiltonian import (NOMINAL_ISING, IsingParams, ScheduleParams,
                          build_hamiltonian, build_swap, hamiltonian_matrix)

DEGENERACY_TOL = 1e-9
GAP_FLOOR = 1e-12
NORM_TOL = 1e-6


class GapClosedError(ArithmeticError):
    """The two lowest levels cross (gap below the numerical floor)."""

    def __init__(self, s: float, gap: float):
        super().__init__(f"gap closes at s={s:.9f} (gap={gap:.3e})")
        self.s = s
        self.gap = gap


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of H(s); eigenvectors are the columns of ``eigenvectors``."""

    s: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def ground_projector(self, tol: float = DEGENERACY_TOL) -> np.ndarray:
        """Projector onto every level within ``tol`` of the ground energy."""
        v = self.eigenvectors[:, self.eigenvalues - self.eigenvalues[0] <= tol]
        return v @ v.conj().T

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _fix_phase(vec: np.ndarray, ref: complex) -> np.ndarray:
    if abs(ref) == 0:
        return vec
    return vec * (abs(ref) / ref)


def diagonalize(H: np.ndarray, previous: Optional[SpectralDecomposition] = None,
                s: float = float("nan")) -> SpectralDecomposition:
    """Eigen-decompose ``H`` with ascending eigenvalues.

    Without ``previous`` each eigenvector is rotated so its largest component
    is real and positive. With ``previous``, each eigenvector is matched to
    the previous eigenvector it overlaps most and its phase chosen to make
    that overlap real and non-negative.
    """
    H = np.asarray(H)
    w, v = np.linalg.eigh(H)
    v = v.copy()
    if previous is None:
        for j in range(v.shape[1]):
            k = np.argmax(np.abs(v[:, j]))
            v[:, j] = _fix_phase(v[:, j], v[k, j])
    else:
        overlaps = previous.eigenvectors.conj().T @ v
        for j in range(v.shape[1]):
            i = np.argmax(np.abs(overlaps[:, j]))
            v[:, j] = _fix_phase(v[:, j], overlaps[i, j])
    if np.isrealobj(H):
        v = v.real
    return SpectralDecomposition(s=s, eigenvalues=w, eigenvectors=v)


def spectrum_along(params: ScheduleParams, s_grid, ising: IsingParams = NOMINAL_ISING):
    """Gauge-continuous decompositions at each point of ``s_grid``."""
    out = []
    prev = None
    for s in s_grid:
        prev = diagonalize(build_hamiltonian(float(s), params, ising), prev, s=float(s))
        out.append(prev)
    return out


def _eigvals_on_grid(params, ising, s_grid):
    stack = np.array([hamiltonian_matrix(float(s), params.alpha, params.beta_offset,
                                         ising.h1, ising.h2, ising.j12) for s in s_grid])
    return np.linalg.eigh(stack)


def _gap(s, params, ising):
    e = np.linalg.eigvalsh(build_hamiltonian(s, params, ising))
    return e[1] - e[0]


def _tracked_difference(s, ref_a, ref_b, params, ising):
    # energy difference of the two levels most similar to ref_a and ref_b
    w, v = np.linalg.eigh(build_hamiltonian(s, params, ising))
    ia = np.argmax(np.abs(ref_a @ v))
    ib = np.argmax(np.abs(ref_b @ v))
    return w[ia] - w[ib]


def min_gap(params: ScheduleParams, s_resolution: float = 1e-3,
            ising: IsingParams = NOMINAL_ISING) -> tuple[float, float]:
    """Location and size of the minimum ground-state gap along the anneal.

    The terminal three-fold degeneracy of H_P at s = 1 is not a gap minimum;
    only interior local minima of E1 - E0 are considered. The coarse scan
    is refined by golden-section search.

    Raises
    ------
    GapClosedError
        If the ground state changes identity through a true level crossing.
    ValueError
        If the gap has no interior minimum.
    """
    if not 0 < s_resolution < 0.5:
        raise ValueError("s_resolution must lie in (0, 0.5)")
    n = int(round(1.0 / s_resolution)) + 1
    s_grid = np.linspace(0.0, 1.0, n)
    w, v = _eigvals_on_grid(params, ising, s_grid)
    gaps = w[:, 1] - w[:, 0]

    for k in range(1, n - 1):
        if gaps[k] < GAP_FLOOR:
            raise GapClosedError(float(s_grid[k]), float(gaps[k]))
    # a true crossing swaps the ground state for an orthogonal one between grid
    # points; eigenvectors inside a degenerate ground space (s = 1) are arbitrary
    ground = v[:, :, 0]
    overlap = np.abs(np.einsum("ij,ij->i", ground[:-1], ground[1:]))
    resolved = (gaps[:-1] > DEGENERACY_TOL) & (gaps[1:] > DEGENERACY_TOL)
    for k in np.flatnonzero((overlap < 0.5) & resolved):
        a, b = ground[k], ground[k + 1]
        lo, hi = s_grid[k], s_grid[k + 1]
        d_lo = _tracked_difference(lo, a, b, params, ising)
        d_hi = _tracked_difference(hi, a, b, params, ising)
        if d_lo * d_hi <= 0:
            s_x = brentq(_tracked_difference, lo, hi, args=(a, b, params, ising),
                         xtol=1e-14, rtol=4 * np.finfo(float).eps)
            raise GapClosedError(s_x, _gap(s_x, params, ising))

    interior = [k for k in range(1, n - 1)
                if gaps[k] <= gaps[k - 1] and gaps[k] <= gaps[k + 1]]
    if not interior:
        raise ValueError("gap has no interior minimum along the anneal")
    k = min(interior, key=lambda i: gaps[i])
    res = minimize_scalar(_gap, bracket=(s_grid[k - 1], s_grid[k], s_grid[k + 1]),
                          args=(params, ising), method="golden",
                          options={"xtol": 1e-7})
    s_star, gap = float(res.x), float(res.fun)
    if gap < GAP_FLOOR:
        raise GapClosedError(s_star, gap)
    return s_star, gap


def expectation(operator: np.ndarray, state: np.ndarray) -> float:
    """<psi|O|psi> for a state vector or Tr(rho O) for a density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        norm = np.vdot(state, state).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2={norm:.8f})")
        value = np.vdot(state, operator @ state)
    elif state.ndim == 2:
        tr = np.trace(state).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace is {tr:.8f}, expected 1")
        value = np.trace(state @ operator)
    else:
        raise ValueError("state must be a vector or a square matrix")
    return float(value.real)


def spectrum_table(params: ScheduleParams, s_grid, ising: IsingParams = NOMINAL_ISING):
    """Rows of (s, E0..E3, gap, <SWAP> in the ground state)."""
    swap = build_swap()
    rows = []
    for dec in spectrum_along(params, s_grid, ising):
        e = dec.eigenvalues
        rows.append({
            "s": dec.s,
            "E0": e[0], "E1": e[1], "E2": e[2], "E3": e[3],
            "gap": e[1] - e[0],
            "swap_expectation_of_ground_state": expectation(swap, dec.ground_state),
        })
    return rows
