import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from anneal_validate.hamiltonian import ScheduleParams
from anneal_validate.semiclassical import (SpinConfig, SvmcSpec, bloch_to_populations,
                                           landscape_scan, potential, potential_kernel,
                                           svd_evolve, svd_rhs, svd_vectors,
                                           svmc_frozen_chain, svmc_run, svmc_summary)

NOMINAL = ScheduleParams(alpha=2.0, beta_offset=0.05)
angles = st.tuples(st.floats(0, np.pi), st.floats(0, np.pi),
                   st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))


def _config(t1, t2, p1=0.0, p2=0.0):
    return SpinConfig(np.array([t1, t2]), np.array([p1, p2]))


def test_potential_examples():
    for mz2 in np.linspace(-1, 1, 11):
        cfg = SpinConfig.from_vectors([[0, 0, 1], [np.sqrt(1 - mz2 ** 2), 0, mz2]])
        assert potential(1.0, cfg, NOMINAL) == pytest.approx(-1.0, abs=1e-12)
    eps = 0.01
    mz2 = np.linspace(-1, 1, 201)
    v = potential_kernel(1.0, np.sqrt(1 - (1 - eps) ** 2), 1 - eps, 0.0, mz2, 2.0, 0.05)
    assert mz2[np.argmin(v)] == 1.0
    assert potential(0.0, SpinConfig.along_x(), ScheduleParams(beta_offset=0.0)) == pytest.approx(-2.0)


def _gradient_field(s, m, alpha, beta, h=1e-6):
    # H_i = 2 dV/dM_i by central differences of the potential
    def V(mm):
        return potential_kernel(s, mm[0], mm[2], mm[3], mm[5], alpha, beta)
    g = np.zeros(6)
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        g[k] = (V(m + e) - V(m - e)) / (2 * h)
    return 2 * g


@settings(max_examples=100, deadline=None)
@given(s=st.floats(0, 1), a=st.floats(-3, 3), b=st.floats(0, 0.9), ang=angles,
       wt=st.floats(0.1, 100))
def test_precession_uses_gradient_field(s, a, b, ang, wt):
    m = _config(*ang[:2], *ang[2:]).vectors().reshape(6)
    H = _gradient_field(s, m, a, b)
    expected = wt * np.concatenate([np.cross(H[:3], m[:3]), np.cross(H[3:], m[3:])])
    np.testing.assert_allclose(svd_rhs(s, m, np.array([wt, a, b])), expected, atol=1e-7)


def test_start_is_fixed_point():
    m = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    np.testing.assert_array_equal(svd_rhs(0.0, m, np.array([1e4, 2.0, 0.05])), 0.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(0, 0.9), ang=angles, log_wt=st.floats(0, 3))
def test_spin_norm_conservation(a, b, ang, log_wt):
    params = ScheduleParams(alpha=a, beta_offset=b, omega_tf=10 ** log_wt)
    traj = svd_vectors(params, _config(*ang[:2], *ang[2:]), s_grid=np.linspace(0, 1, 11))
    assert np.abs(np.linalg.norm(traj, axis=2) - 1).max() <= 1e-7


def test_exchange_symmetry_without_beta():
    traj = svd_vectors(ScheduleParams(alpha=2.0, beta_offset=0.0, omega_tf=300.0),
                       s_grid=np.linspace(0, 1, 21))
    np.testing.assert_allclose(traj[:, 0], traj[:, 1], atol=1e-12)


def test_svd_slow_anneal_follows_favored_minimum():
    final = svd_evolve(ScheduleParams(alpha=2.0, beta_offset=0.05, omega_tf=1e5))[-1]
    # beta weakens qubit 2's transverse field, so spin 1 stays in the plane
    assert final.theta[0] == pytest.approx(np.pi / 2, abs=0.05)
    assert final.theta[1] == pytest.approx(0.0, abs=0.05)
    p = bloch_to_populations(final)
    assert p[0] == pytest.approx(0.5, abs=0.02)
    assert p[2] == pytest.approx(0.5, abs=0.02)


def test_landscape_two_unequal_minima():
    scan = landscape_scan(0.35, NOMINAL, grid=361)
    assert len(scan.minima) == 2
    (t1a, t2a, va), (t1b, t2b, vb) = scan.minima
    assert va < vb - 1e-3
    assert t1a > t2a and t1b < t2b


def test_landscape_single_minimum_early():
    scan = landscape_scan(0.05, NOMINAL, grid=181)
    assert len(scan.minima) == 1
    t1, t2, _ = scan.minima[0]
    assert t1 == pytest.approx(np.pi / 2, abs=0.1)
    assert t2 == pytest.approx(np.pi / 2, abs=0.1)


def test_landscape_symmetric_without_beta():
    scan = landscape_scan(0.6, ScheduleParams(alpha=2.0, beta_offset=0.0), grid=101)
    assert np.abs(scan.values - scan.values.T).max() <= 1e-12
    with pytest.raises(ValueError):
        landscape_scan(0.5, NOMINAL, grid=1)


def test_bloch_examples():
    np.testing.assert_allclose(bloch_to_populations(_config(0.0, np.pi / 2)), [0.5, 0.5, 0, 0], atol=1e-15)
    np.testing.assert_allclose(bloch_to_populations(_config(0.0, 0.0)), [1, 0, 0, 0])
    np.testing.assert_allclose(bloch_to_populations(_config(np.pi / 2, np.pi / 2)), [0.25] * 4, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(ang=angles)
def test_bloch_normalization(ang):
    p = bloch_to_populations(_config(*ang[:2], *ang[2:]))
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


def test_spin_config_validation():
    with pytest.raises(ValueError):
        SpinConfig(np.array([4.0, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        SpinConfig.from_vectors([[1, 0, 1], [0, 0, 1]])
    cfg = _config(0.3, 2.0, 1.0, 5.0)
    np.testing.assert_allclose(SpinConfig.from_vectors(cfg.vectors()).vectors(), cfg.vectors(), atol=1e-14)


def test_svmc_detailed_balance_at_start():
    # at s = 0, V = -(M1x + (1-beta) M2x): the M1x marginal is proportional to exp(x / T)
    T = 1.0
    samples, _ = svmc_frozen_chain(0.0, NOMINAL, T, 200_000, seed=3)
    x = samples[::4, 0, 0]
    edges = np.linspace(-1, 1, 11)
    observed, _ = np.histogram(x, edges)
    cdf = np.exp(edges / T)
    expected = np.diff(cdf) / (cdf[-1] - cdf[0]) * x.size
    chi2 = ((observed - expected) ** 2 / expected).sum()
    assert chi2 < stats.chi2.ppf(0.999, df=9)


def test_svmc_zero_temperature_never_climbs():
    samples, acc = svmc_frozen_chain(0.7, NOMINAL, 1e-12, 2000, seed=4, burn_in=0)
    v = potential_kernel(0.7, samples[:, 0, 0], samples[:, 0, 2], samples[:, 1, 0],
                         samples[:, 1, 2], 2.0, 0.05)
    assert np.all(np.diff(v) <= 1e-15)
    assert 0 < acc < 0.5


def test_svmc_high_temperature_accepts_everything():
    samples, acc = svmc_frozen_chain(0.5, NOMINAL, 1e6, 20_000, seed=5)
    assert acc > 0.999
    assert np.abs(samples[:, :, 2].mean(axis=0)).max() < 0.03


def test_svmc_run_determinism():
    spec = SvmcSpec(temperature=0.5, n_sweeps=500, n_runs=6, seed=9)
    a = svmc_run(NOMINAL, spec)
    b = svmc_run(NOMINAL, spec, workers=2)
    assert a.shape == (6, 2, 3)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=2), 1.0, atol=1e-12)


def test_svmc_summary_columns():
    finals = svmc_run(NOMINAL, SvmcSpec(temperature=0.5, n_sweeps=200, n_runs=20))
    out = svmc_summary(finals, resamples=100)
    assert set(out) == {"mean_Mx1", "err_Mx1", "mean_Mx2", "err_Mx2", "mean_Mz1", "err_Mz1",
                        "mean_Mz2", "err_Mz2", "p00", "p01", "p10", "p11"}
    assert sum(out[k] for k in ("p00", "p01", "p10", "p11")) == pytest.approx(1.0)
    assert all(out[k] > 0 for k in out if k.startswith("err"))


def test_svmc_spec_validation():
    with pytest.raises(ValueError):
        SvmcSpec(temperature=0.0)
    with pytest.raises(ValueError):
        SvmcSpec(temperature=1.0, n_sweeps=0)
