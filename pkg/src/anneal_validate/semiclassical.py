"""
Semiclassical analogues of the anneal: two classical unit spin vectors
M_i = (sin t cos p, sin t sin p, cos t) on the potential obtained by
replacing Pauli operators with spin components,

    V(s) = -(1-s)(M1x + (1-beta) M2x) + alpha s (1-s) M1x M2x
           + s (-M1z - M2z + M1z M2z).

Spin-vector dynamics (SVD) integrates the precession equation
dM_i/ds = omega_tf H_i x M_i with H_i = 2 grad_{M_i} V. Spin-vector Monte
Carlo (SVMC) replaces the dynamics with Metropolis updates that resample
each spin uniformly on the sphere while s is swept from 0 to 1.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from .hamiltonian import ScheduleParams
from .integrate import solve
from .noise_ensemble import DEFAULT_SEED, realization_rng

SVD_RTOL = 1e-10
SVD_ATOL = 1e-13
NORM_TOL = 1e-7


@dataclass(frozen=True)
class SpinConfig:
    """Polar and azimuthal angles of the two spins."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = np.mod(np.asarray(self.phi, dtype=float), 2 * np.pi)
        if theta.shape != (2,) or phi.shape != (2,):
            raise ValueError("SpinConfig needs two polar and two azimuthal angles")
        if np.any(theta < 0) or np.any(theta > np.pi):
            raise ValueError("polar angles must lie in [0, pi]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_vectors(cls, m) -> "SpinConfig":
        m = np.asarray(m, dtype=float).reshape(2, 3)
        norms = np.linalg.norm(m, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError(f"spin vectors must be unit length, got norms {norms}")
        theta = np.arccos(np.clip(m[:, 2] / norms, -1.0, 1.0))
        phi = np.arctan2(m[:, 1], m[:, 0])
        return cls(theta, phi)

    @classmethod
    def along_x(cls) -> "SpinConfig":
        return cls(np.array([np.pi / 2, np.pi / 2]), np.zeros(2))

    def vectors(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=1)


@dataclass(frozen=True)
class SvmcSpec:
    temperature: float
    n_sweeps: int = 1_000_000
    n_runs: int = 10_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n_sweeps < 1:
            raise ValueError("n_sweeps must be at least 1")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


@njit(cache=True)
def potential_kernel(s, m1x, m1z, m2x, m2z, alpha, beta):
    return (-(1.0 - s) * (m1x + (1.0 - beta) * m2x)
            + alpha * s * (1.0 - s) * m1x * m2x
            + s * (-m1z - m2z + m1z * m2z))


def potential(s: float, config: SpinConfig, params: ScheduleParams) -> float:
    """Semiclassical potential V(s) for the given spin configuration."""
    m = config.vectors()
    return float(potential_kernel(s, m[0, 0], m[0, 2], m[1, 0], m[1, 2],
                                  params.alpha, params.beta_offset))


@njit(cache=True)
def svd_rhs(s, y, args):
    # y = (M1x, M1y, M1z, M2x, M2y, M2z); args: omega_tf, alpha, beta
    T, a, b = args[0], args[1], args[2]
    g = 1.0 - s
    h1x = 2.0 * (-g + a * s * g * y[3])
    h1z = 2.0 * s * (-1.0 + y[5])
    h2x = 2.0 * (-g * (1.0 - b) + a * s * g * y[0])
    h2z = 2.0 * s * (-1.0 + y[2])
    out = np.empty(6)
    # H x M with H = (hx, 0, hz)
    out[0] = -T * h1z * y[1]
    out[1] = T * (h1z * y[0] - h1x * y[2])
    out[2] = T * h1x * y[1]
    out[3] = -T * h2z * y[4]
    out[4] = T * (h2z * y[3] - h2x * y[5])
    out[5] = T * h2x * y[4]
    return out


def svd_evolve(params: ScheduleParams, initial: SpinConfig | None = None,
               n_checkpoints: int = 2, rtol: float = SVD_RTOL,
               atol: float = SVD_ATOL) -> list[SpinConfig]:
    """Spin-vector dynamics from s = 0 to 1.

    Returns the configuration at ``n_checkpoints`` uniformly spaced values
    of s (the last one is s = 1). Both spins start along +x by default.
    """
    initial = SpinConfig.along_x() if initial is None else initial
    s_grid = np.linspace(0.0, 1.0, max(2, n_checkpoints))
    y0 = initial.vectors().reshape(6)
    args = np.array([params.omega_tf, params.alpha, params.beta_offset])
    states, _ = solve(svd_rhs, y0, s_grid, args, rtol, atol)
    out = []
    for s, y in zip(s_grid, states):
        m = y.reshape(2, 3)
        norms = np.linalg.norm(m, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            warnings.warn(f"spin norm drift {np.abs(norms - 1).max():.2e} at s={s:.4f}; renormalizing",
                          RuntimeWarning, stacklevel=2)
        out.append(SpinConfig.from_vectors(m / norms[:, None]))
    return out


def svd_vectors(params: ScheduleParams, initial: SpinConfig | None = None,
                s_grid=(0.0, 1.0), rtol: float = SVD_RTOL, atol: float = SVD_ATOL) -> np.ndarray:
    """Raw spin vectors, shape ``(len(s_grid), 2, 3)``, without renormalization."""
    initial = SpinConfig.along_x() if initial is None else initial
    args = np.array([params.omega_tf, params.alpha, params.beta_offset])
    states, _ = solve(svd_rhs, initial.vectors().reshape(6), s_grid, args, rtol, atol)
    return states.reshape(-1, 2, 3)


@dataclass(frozen=True)
class Landscape:
    theta1: np.ndarray
    theta2: np.ndarray
    values: np.ndarray
    minima: list = field(default_factory=list)


def landscape_scan(s: float, params: ScheduleParams, phi_fixed: float = 0.0,
                   grid: int = 181) -> Landscape:
    """V on a (theta1, theta2) grid at fixed azimuth, with its local minima.

    ``values[i, j]`` is V at ``theta1[i], theta2[j]``. Minima are grid points
    no higher than any of their (up to eight) neighbours, listed deepest
    first as ``(theta1, theta2, V)``.
    """
    if grid < 2:
        raise ValueError("grid needs at least 2 points per axis")
    th = np.linspace(0.0, np.pi, grid)
    mx = np.sin(th) * np.cos(phi_fixed)
    mz = np.cos(th)
    values = potential_kernel(s, mx[:, None], mz[:, None], mx[None, :], mz[None, :],
                              params.alpha, params.beta_offset)
    padded = np.pad(values, 1, constant_values=np.inf)
    is_min = np.ones_like(values, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbour = padded[1 + di:1 + di + grid, 1 + dj:1 + dj + grid]
            is_min &= values <= neighbour
    idx = np.argwhere(is_min)
    minima = sorted(((th[i], th[j], values[i, j]) for i, j in idx), key=lambda m: m[2])
    return Landscape(theta1=th, theta2=th, values=values, minima=minima)


@njit(cache=True)
def _metropolis_update(rng, i, s, mx, my, mz, T, alpha, beta):
    u = rng.random()
    v = rng.random()
    cz = 2.0 * v - 1.0
    st = math.sqrt(max(0.0, 1.0 - cz * cz))
    ph = 2.0 * math.pi * u
    nx = st * math.cos(ph)
    ny = st * math.sin(ph)
    e_old = potential_kernel(s, mx[0], mz[0], mx[1], mz[1], alpha, beta)
    ox, oy, oz = mx[i], my[i], mz[i]
    mx[i], my[i], mz[i] = nx, ny, cz
    dE = potential_kernel(s, mx[0], mz[0], mx[1], mz[1], alpha, beta) - e_old
    if dE > 0.0 and rng.random() >= math.exp(-dE / T):
        mx[i], my[i], mz[i] = ox, oy, oz
        return False
    return True


@njit(cache=True)
def _svmc_single(rng, n_sweeps, T, alpha, beta):
    mx = np.array([1.0, 1.0])
    my = np.zeros(2)
    mz = np.zeros(2)
    for k in range(n_sweeps):
        s = (k + 1) / n_sweeps
        _metropolis_update(rng, 0, s, mx, my, mz, T, alpha, beta)
        _metropolis_update(rng, 1, s, mx, my, mz, T, alpha, beta)
    out = np.empty((2, 3))
    out[:, 0] = mx
    out[:, 1] = my
    out[:, 2] = mz
    return out


@njit(cache=True)
def _svmc_frozen(rng, s, n_sweeps, T, alpha, beta, burn_in):
    mx = np.array([1.0, 1.0])
    my = np.zeros(2)
    mz = np.zeros(2)
    samples = np.empty((n_sweeps, 2, 3))
    accepted = 0
    for k in range(burn_in + n_sweeps):
        for i in range(2):
            if _metropolis_update(rng, i, s, mx, my, mz, T, alpha, beta) and k >= burn_in:
                accepted += 1
        if k >= burn_in:
            r = k - burn_in
            samples[r, :, 0] = mx
            samples[r, :, 1] = my
            samples[r, :, 2] = mz
    return samples, accepted / (2.0 * n_sweeps)


def svmc_frozen_chain(s: float, params: ScheduleParams, temperature: float,
                      n_sweeps: int, seed: int = DEFAULT_SEED, burn_in: int = 1000):
    """Metropolis chain with s held fixed; returns (samples, acceptance rate).

    ``samples`` has shape ``(n_sweeps, 2, 3)``: spin vectors after each sweep.
    """
    return _svmc_frozen(realization_rng(seed, 0), float(s), int(n_sweeps), float(temperature),
                        params.alpha, params.beta_offset, int(burn_in))


def _svmc_job(args):
    params, spec, index = args
    return _svmc_single(realization_rng(spec.seed, index), spec.n_sweeps,
                        spec.temperature, params.alpha, params.beta_offset)


def svmc_run(params: ScheduleParams, spec: SvmcSpec, workers: int = 1) -> np.ndarray:
    """Final spin vectors of ``spec.n_runs`` independent SVMC anneals.

    The anneal fraction takes the values k / n_sweeps, k = 1..n_sweeps, and
    each value gets one update attempt on spin 1 followed by spin 2. Returns
    an array of shape ``(n_runs, 2, 3)``.
    """
    jobs = [(params, spec, i) for i in range(spec.n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_svmc_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_svmc_job(job) for job in jobs]
    return np.array(out)


def populations_from_mz(mz1, mz2) -> np.ndarray:
    """Independent-qubit populations (P00, P01, P10, P11) from z-magnetizations."""
    p1 = 0.5 * (1.0 + np.asarray(mz1, dtype=float))
    p2 = 0.5 * (1.0 + np.asarray(mz2, dtype=float))
    return np.stack([p1 * p2, p1 * (1 - p2), (1 - p1) * p2, (1 - p1) * (1 - p2)], axis=-1)


def bloch_to_populations(config: SpinConfig) -> np.ndarray:
    """Computational-basis probabilities read off the Bloch vectors."""
    mz = np.cos(config.theta)
    return populations_from_mz(mz[0], mz[1])


def svmc_summary(finals: np.ndarray, resamples: int = 1000,
                 seed: int = DEFAULT_SEED) -> dict:
    """Mean magnetizations with 2-sigma bootstrap bars, and mean populations.

    ``finals`` is the output of :func:`svmc_run`.
    """
    columns = {
        "Mx1": finals[:, 0, 0], "Mx2": finals[:, 1, 0],
        "Mz1": finals[:, 0, 2], "Mz2": finals[:, 1, 2],
    }
    out = {}
    for name, col in columns.items():
        out[f"mean_{name}"] = float(col.mean())
        if col.size >= 2 and np.ptp(col) > 0:
            res = stats.bootstrap((col,), np.mean, n_resamples=resamples, method="percentile",
                                  rng=np.random.default_rng(seed))
            out[f"err_{name}"] = float(2.0 * res.standard_error)
        else:
            out[f"err_{name}"] = 0.0
    pops = populations_from_mz(finals[:, 0, 2], finals[:, 1, 2]).mean(axis=0)
    for label, p in zip(("p00", "p01", "p10", "p11"), pops):
        out[label] = float(p)
    return out
