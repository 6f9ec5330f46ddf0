import numpy as np
import pytest
from scipy import integrate, stats

from lplangevin.diagnostics import (GibbsSpec, autocorrelation, effective_sample_size, estimate_h_min,
                                    gibbs_log_density, invariant_report, ks_critical_value, ks_statistic,
                                    orbit_defect, orbit_rejection_sampler, refinement_slope, subsample)
from lplangevin.dynamics import RigidBodyEnergy, rigid_body_system
from lplangevin.errors import EfficiencyError, InputError
from lplangevin.integrate import Trajectory, integrate_trajectory
from lplangevin.noise import brownian_path
from lplangevin.sphere import vortex_hamiltonian_batch

INERTIA = (1.0, 2.0, 3.0)


def rigid_spec(beta, radius=1.0):
    return GibbsSpec(beta, RigidBodyEnergy(INERTIA).value, {"kind": "sphere", "radius": radius})


class PairEnergy:
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return vortex_hamiltonian_batch(x.reshape(-1, 6), np.ones(2), 1.0).reshape(x.shape[:-1])


def sphere_expectation(f, beta):
    """Gibbs expectation of ``f`` on the unit sphere by 2-D quadrature."""
    inv = 1.0 / np.array(INERTIA)

    def point(th, ph):
        return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def w(th, ph):
        p = point(th, ph)
        return np.exp(-beta * 0.5 * np.sum(inv * p * p)) * np.sin(th)

    num = integrate.dblquad(lambda th, ph: f(point(th, ph)) * w(th, ph), 0, 2 * np.pi, 0, np.pi, epsabs=1e-11)[0]
    den = integrate.dblquad(w, 0, 2 * np.pi, 0, np.pi, epsabs=1e-11)[0]
    return num / den


# ---------------------------------------------------------------------------
# KS and time-series helpers


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    for n, m in ((50, 70), (300, 200), (1000, 1000)):
        a, b = rng.normal(size=n), rng.normal(0.1, 1.2, size=m)
        assert abs(ks_statistic(a, b) - stats.ks_2samp(a, b).statistic) < 1e-14
    # ties
    a, b = np.array([0, 0, 1, 2.0]), np.array([0, 1, 1, 1, 3.0])
    assert abs(ks_statistic(a, b) - stats.ks_2samp(a, b).statistic) < 1e-14


def test_ks_critical_value_known_constant():
    # c(0.01) = 1.6276 for the two-sample asymptotic test
    assert abs(ks_critical_value(100, 100) - 1.6276 * np.sqrt(0.02)) < 1e-4
    with pytest.raises(InputError):
        ks_statistic([], [1.0])


def test_ess_of_white_noise_and_ar1():
    rng = np.random.default_rng(1)
    x = rng.normal(size=20000)
    assert 0.8 * x.size < effective_sample_size(x) < 1.2 * x.size
    # AR(1) with phi: ESS / n -> (1 - phi) / (1 + phi)
    phi, y = 0.9, np.zeros(50000)
    e = rng.normal(size=y.size)
    for k in range(1, y.size):
        y[k] = phi * y[k - 1] + e[k]
    ratio = effective_sample_size(y) / y.size
    assert abs(ratio - (1 - phi) / (1 + phi)) < 0.02


def test_autocorrelation_lag_zero_and_subsample():
    x = np.sin(np.arange(100.0))
    assert autocorrelation(x)[0] == 1.0
    np.testing.assert_array_equal(subsample(np.arange(1000), 0.2, 100), np.arange(200, 1000, 100))


def test_refinement_slope_exact_power_law():
    dts = np.array([0.1, 0.05, 0.025])
    assert abs(refinement_slope(dts, 3 * dts**2) - 2.0) < 1e-12
    assert np.isnan(refinement_slope(dts, [1.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# Gibbs densities


def test_beta_zero_density_is_flat():
    s = rigid_spec(0.0)
    assert gibbs_log_density(s, [0, 0, 1.0]) == 0.0
    assert gibbs_log_density(s, [0.6, 0.8, 0.0]) == 0.0


def test_rigid_density_peaks_on_largest_inertia_axis():
    s = rigid_spec(1.0)
    pts = np.random.default_rng(2).normal(size=(500, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    top = gibbs_log_density(s, [0, 0, 1.0])
    assert all(gibbs_log_density(s, p) <= top + 1e-15 for p in pts)
    assert abs(top - (-1.0 / 6.0)) < 1e-15


def test_two_vortex_density_grows_with_separation():
    s = GibbsSpec(1.0, PairEnergy(), {"kind": "vortex", "R": 1.0, "n": 2})
    vals = []
    for ang in (0.3, 1.0, 2.0, 3.0):
        x = np.array([0, 0, 1.0, np.sin(ang), 0, np.cos(ang)])
        vals.append(gibbs_log_density(s, x))
    assert np.all(np.diff(vals) > 0)


def test_off_orbit_state_rejected():
    with pytest.raises(InputError):
        gibbs_log_density(rigid_spec(1.0), [0, 0, 1.1])
    assert orbit_defect(rigid_spec(1.0, 2.0), [0, 0, 2.2]) == pytest.approx(0.1)
    with pytest.raises(InputError):
        GibbsSpec(-1.0, RigidBodyEnergy(INERTIA).value, {"kind": "sphere", "radius": 1.0})
    with pytest.raises(InputError):
        GibbsSpec(1.0, RigidBodyEnergy(INERTIA).value, {"kind": "torus"})


def test_h_min_on_sphere():
    # minimum of |Pi|^2 / (2 I) over |Pi| = 2 is 4 / 6
    assert abs(estimate_h_min(rigid_spec(1.0, 2.0)) - 4.0 / 6.0) < 1e-9


# ---------------------------------------------------------------------------
# rejection sampler


def test_sampler_deterministic_and_on_orbit():
    s = rigid_spec(2.0)
    a = orbit_rejection_sampler(s, 500, seed=3)
    b = orbit_rejection_sampler(s, 500, seed=3)
    assert a.tobytes() == b.tobytes()
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-14)


def test_sampler_beta_zero_is_uniform():
    n = 20000
    x = orbit_rejection_sampler(rigid_spec(0.0), n, seed=4)
    # each coordinate of a uniform point has mean 0, variance 1/3
    assert np.max(np.abs(x.mean(axis=0))) < 4 / np.sqrt(n)
    # z is uniform on [-1, 1]
    assert stats.kstest(x[:, 2], "uniform", args=(-1, 2)).pvalue > 1e-3


@pytest.mark.parametrize("beta", [1.0, 5.0])
def test_sampler_moments_match_quadrature(beta):
    n = 40000
    x = orbit_rejection_sampler(rigid_spec(beta), n, seed=5)
    for k in range(3):
        f = x[:, k] ** 2
        expect = sphere_expectation(lambda p, k=k: p[k] ** 2, beta)
        assert abs(f.mean() - expect) < 4 * f.std() / np.sqrt(n)


def test_sampler_two_independent_runs_agree_in_ks():
    s = rigid_spec(3.0)
    h = RigidBodyEnergy(INERTIA).value
    a = h(orbit_rejection_sampler(s, 10000, seed=6))
    b = h(orbit_rejection_sampler(s, 10000, seed=7))
    assert ks_statistic(a, b) < 0.03


def test_sampler_with_underestimated_floor_restarts():
    s = rigid_spec(1.0)
    # a floor above the true minimum must be lowered, never exceeded
    x = orbit_rejection_sampler(s, 2000, seed=8, h_min=0.3)
    ref = orbit_rejection_sampler(s, 2000, seed=8)
    assert ks_statistic(RigidBodyEnergy(INERTIA).value(x), RigidBodyEnergy(INERTIA).value(ref)) < 0.06


def test_sampler_low_acceptance_raises():
    with pytest.raises(EfficiencyError):
        orbit_rejection_sampler(rigid_spec(1e4, 10.0), 10, seed=0, batch=20000)


# ---------------------------------------------------------------------------
# invariant report


def test_invariant_report_monotone_verdict():
    t = np.linspace(0, 1, 5)
    up = Trajectory(t, np.zeros((5, 1)), {"h0": np.array([1.0, 0.9, 0.8, 0.81, 0.7]), "c": np.ones(5)},
                    {"sigma": 0.0})
    rep = invariant_report(up)
    assert rep["energy_monotone"] is False
    assert rep["energy_max_increase"] == pytest.approx(0.01)
    assert rep["invariants"]["c"]["max_rel_drift"] == 0.0
    down = Trajectory(t, np.zeros((5, 1)), {"h0": np.array([1.0, 0.9, 0.8, 0.8, 0.7])}, {"sigma": 0.0})
    rep = invariant_report(down)
    assert rep["energy_monotone"] is True and rep["energy_strictly_decreasing"] is False
    noisy = Trajectory(t, np.zeros((5, 1)), {"h0": np.ones(5)}, {"sigma": 0.5})
    assert "energy_monotone" not in invariant_report(noisy)


def test_invariant_report_on_dissipative_run():
    sysm = rigid_body_system(INERTIA, sigma=0.0, theta=0.2)
    tr = integrate_trajectory(sysm, "heun", brownian_path(3, 0.0, 10.0, 1000, seed=0), [1.0, 1.0, 1.0])
    rep = invariant_report(tr)
    assert rep["energy_monotone"]
    assert rep["invariants"]["norm_sq"]["max_rel_drift"] < 1e-3
    assert rep["dt"] == pytest.approx(0.01)
