import numpy as np
import pytest
from scipy import stats

from lplangevin.errors import InputError, UnsupportedError
from lplangevin.noise import (BROWNIAN, CLOCK, DATA, brownian_path, load_path_csv, refine, save_path_csv,
                              scaled_noise, standard_normals, stream_key)


def test_same_seed_bitwise_identical():
    a = brownian_path(3, 0.0, 1.0, 500, seed=42)
    b = brownian_path(3, 0.0, 1.0, 500, seed=42)
    assert a.increments.tobytes() == b.increments.tobytes()
    assert a.times.tobytes() == b.times.tobytes()


def test_different_seed_or_traj_differs():
    a = brownian_path(2, 0.0, 1.0, 100, seed=1)
    assert not np.array_equal(a.increments[:, 1:], brownian_path(2, 0.0, 1.0, 100, seed=2).increments[:, 1:])
    assert not np.array_equal(a.increments[:, 1:], brownian_path(2, 0.0, 1.0, 100, seed=1, traj=1).increments[:, 1:])


def test_increment_variance_chi_square_bound():
    n, dt = 10**5, 1e-3
    p = brownian_path(1, 0.0, n * dt, n, seed=7)
    v = np.mean(p.increments[:, 1] ** 2) / dt
    # variance of the sample mean of chi^2_1 / n is 2/n; 6 sigma is about 0.027
    assert 0.9 <= v <= 1.1
    assert abs(v - 1.0) < 6 * np.sqrt(2.0 / n)


def test_normals_pass_ks_against_standard_normal():
    z = standard_normals(3, 0, 1, 0, 20000)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_clock_component_is_grid_spacing():
    p = brownian_path(2, 0.5, 2.5, 400, seed=0)
    np.testing.assert_array_equal(p.increments[:, 0], np.diff(p.times))
    np.testing.assert_allclose(p.increments[:, 0], 0.005, rtol=1e-12)
    np.testing.assert_array_equal(p.qv_increments[:, 0], 0.0)
    np.testing.assert_array_equal(p.qv_increments[:, 1:], np.diff(p.times)[:, None] * np.ones((1, 2)))
    assert p.kinds == (CLOCK, BROWNIAN, BROWNIAN)
    assert p.times[0] == 0.5 and p.times[-1] == 2.5


def test_increment_reproducible_in_isolation():
    p = brownian_path(3, 0.0, 1.0, 1000, seed=9, traj=4)
    step, comp = 637, 2
    z = standard_normals(9, 4, comp, 0, 1, start=step)[0]
    assert z * np.sqrt(p.increments[step, 0]) == p.increments[step, comp]


def test_stream_key_layout():
    k = stream_key(5, 3, 2, 1)
    assert int(k[0]) == 5
    assert int(k[1]) == (3 << 32) | (2 << 8) | 1
    with pytest.raises(InputError):
        stream_key(0, 0, 0, 256)


@pytest.mark.parametrize("bad", [dict(n_steps=0), dict(t1=0.0), dict(n_noise=-1)])
def test_bad_arguments(bad):
    args = dict(n_noise=1, t0=0.0, t1=1.0, n_steps=10, seed=0)
    args.update(bad)
    with pytest.raises(InputError):
        brownian_path(**args)


def test_components_uncorrelated():
    n = 10**5
    p = brownian_path(3, 0.0, 1.0, n, seed=11)
    c = np.corrcoef(p.increments[:, 1:].T)
    off = c[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 4 / np.sqrt(n)


def test_refine_bridge_consistency():
    p = brownian_path(2, 0.0, 1.0, 300, seed=3)
    r = refine(p)
    pair = r.increments[0::2] + r.increments[1::2]
    for i in range(1, 3):
        err = np.abs(pair[:, i] - p.increments[:, i])
        # one rounding unit of the largest operand of the subtraction and the sum
        big = np.maximum.reduce([np.abs(p.increments[:, i]), np.abs(r.increments[0::2, i]),
                                 np.abs(r.increments[1::2, i])])
        assert np.all(err <= np.spacing(big))
    np.testing.assert_array_equal(r.times[0::2], p.times)


def test_refine_counts_and_clock():
    p = brownian_path(1, 0.0, 1.0, 50, seed=3)
    rr = refine(refine(p))
    assert rr.n_steps == 4 * p.n_steps
    assert rr.level == 2
    np.testing.assert_allclose(refine(p).increments[:, 0], 0.01, rtol=1e-12)


def test_refined_increments_have_halved_variance():
    p = brownian_path(1, 0.0, 100.0, 50000, seed=8)
    r = refine(p)
    dt = r.increments[0, 0]
    v = np.mean(r.increments[:, 1] ** 2) / dt
    assert abs(v - 1.0) < 6 * np.sqrt(2.0 / r.n_steps)
    # the two halves of a coarse step are uncorrelated
    assert abs(np.corrcoef(r.increments[0::2, 1], r.increments[1::2, 1])[0, 1]) < 4 / np.sqrt(p.n_steps)


def test_csv_round_trip_and_data_tag(tmp_path):
    p = brownian_path(2, 0.0, 1.0, 20, seed=5)
    f = tmp_path / "path.csv"
    save_path_csv(p, f)
    q = load_path_csv(f)
    np.testing.assert_allclose(q.increments, p.increments, atol=1e-15)
    np.testing.assert_array_equal(q.times, p.times)
    assert q.kinds == (CLOCK, DATA, DATA)
    np.testing.assert_allclose(q.qv_increments[:, 1:], q.increments[:, 1:] ** 2)
    with pytest.raises(UnsupportedError):
        refine(q)


def test_load_rejects_bad_files(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,S1\n0,0\n1,1\n")
    with pytest.raises(InputError):
        load_path_csv(f)
    f.write_text("t,S1\n0,0\n0,1\n")
    with pytest.raises(InputError):
        load_path_csv(f)


def test_scaled_noise_masks_components():
    p = brownian_path(2, 0.0, 1.0, 10, seed=1)
    q = scaled_noise(p, [1.0, 0.0])
    np.testing.assert_array_equal(q.increments[:, 2], 0.0)
    np.testing.assert_array_equal(q.increments[:, :2], p.increments[:, :2])
