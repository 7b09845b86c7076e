"""
Gaussian implementation errors on the Ising parameters, averaged over
independent closed-system anneals with bootstrap confidence intervals.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .closed_dynamics import evolve, populations
from .hamiltonian import IsingParams, ScheduleParams
from .integrate import IntegrationError

DEFAULT_SEED = 20190708


class EnsembleError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"realization {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class EnsembleSpec:
    sigma: float
    n_realizations: int = 1000
    seed: int = DEFAULT_SEED
    resamples: int = 1000
    confidence: float = 0.95

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.resamples < 1:
            raise ValueError("resamples must be at least 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class EnsembleResult:
    sigma: float
    mean_populations: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    realizations: np.ndarray = field(repr=False)
    isings: np.ndarray = field(repr=False)


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one realization, keyed by (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def sample_ising(sigma: float, rng: np.random.Generator) -> IsingParams:
    """Nominal (1, 1, 1) plus i.i.d. Normal(0, sigma^2) errors on h1, h2, j12."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    d1, d2, d3 = rng.normal(0.0, sigma, size=3)
    return IsingParams(h1=1.0 + d1, h2=1.0 + d2, j12=1.0 + d3)


def bootstrap_ci(samples, resamples: int = 1000, confidence: float = 0.95,
                 seed: int = DEFAULT_SEED) -> tuple[np.ndarray, np.ndarray]:
    """Percentile bootstrap interval of the column means of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] < 2:
        raise ValueError("bootstrap needs at least 2 samples")
    # scipy warns on degenerate (constant) columns; the percentile interval is still exact
    spread = np.ptp(samples, axis=0) > 0
    low = samples[0].copy()
    high = samples[0].copy()
    if np.any(spread):
        res = stats.bootstrap((samples[:, spread],), np.mean, axis=0, vectorized=True,
                              n_resamples=resamples, confidence_level=confidence,
                              method="percentile", rng=np.random.default_rng(seed))
        low[spread] = res.confidence_interval.low
        high[spread] = res.confidence_interval.high
    return low, high


def _one(args):
    params, sigma, seed, index = args
    ising = sample_ising(sigma, realization_rng(seed, index))
    try:
        pops = populations(evolve(params, ising))
    except IntegrationError as exc:
        raise EnsembleError(index, exc) from exc
    return ising.as_array(), pops


def run_ensemble(params: ScheduleParams, spec: EnsembleSpec, workers: int = 1) -> EnsembleResult:
    """Mean final populations over noisy Ising instances.

    Realizations are independent; with ``workers > 1`` they are spread over
    processes, and results are always combined in realization order.
    """
    if params.kappa2 != 0.0:
        raise ValueError("noise ensembles use closed-system evolution (kappa2 = 0)")
    jobs = [(params, spec.sigma, spec.seed, i) for i in range(spec.n_realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_one(job) for job in jobs]
    isings = np.array([o[0] for o in out])
    pops = np.array([o[1] for o in out])
    mean = pops.mean(axis=0)
    if spec.n_realizations >= 2:
        low, high = bootstrap_ci(pops, spec.resamples, spec.confidence, seed=spec.seed)
    else:
        low, high = mean.copy(), mean.copy()
    return EnsembleResult(sigma=spec.sigma, mean_populations=mean, ci_low=low,
                          ci_high=high, realizations=pops, isings=isings)


def sweep_rows(result: EnsembleResult, labels=("00", "01", "10", "11")) -> list[dict]:
    return [{"sigma": result.sigma, "state": label, "mean": result.mean_populations[k],
             "ci_low": result.ci_low[k], "ci_high": result.ci_high[k]}
            for k, label in enumerate(labels)]
