import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lplangevin.algebra import ad_star, bracket, double_bracket_drift, se3_heavy_top, so3
from lplangevin.diagnostics import ks_statistic
from lplangevin.dynamics import heavy_top_system, rigid_body_system
from lplangevin.noise import brownian_path, refine
from lplangevin.sphere import VortexConfig, vortex_drift, vortex_gradient

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
vec6 = arrays(np.float64, 6, elements=finite)
inertia = st.tuples(*[st.floats(0.5, 5.0)] * 3)
structures = st.sampled_from([so3(), so3(convention="right"), se3_heavy_top()])


def vecs(s, n):
    return st.lists(arrays(np.float64, s.dim, elements=finite), min_size=n, max_size=n)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_jacobi_identity(data):
    s = data.draw(structures)
    a, b, c = data.draw(vecs(s, 3))
    j = (bracket(s, a, bracket(s, b, c)) + bracket(s, b, bracket(s, c, a)) + bracket(s, c, bracket(s, a, b)))
    scale = 1.0 + np.max(np.abs([a, b, c])) ** 3
    assert np.max(np.abs(j)) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_coadjoint_duality(data):
    s = data.draw(structures)
    xi, eta, mu = data.draw(vecs(s, 3))
    lhs = ad_star(s, xi, mu) @ eta
    rhs = mu @ bracket(s, xi, eta)
    assert abs(lhs - rhs) <= 1e-12 * (1.0 + np.max(np.abs([xi, eta, mu])) ** 3)


@settings(max_examples=60, deadline=None)
@given(inertia, vec3, st.floats(0.0, 2.0))
def test_double_bracket_never_raises_energy(I, mu, theta):
    s = so3(inertia=I)
    g = mu / np.array(I)
    assert double_bracket_drift(s, g, mu, theta) @ g <= 1e-12 * (1.0 + mu @ mu) ** 2


@settings(max_examples=40, deadline=None)
@given(inertia, vec6, st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_heavy_top_drift_never_raises_energy(I, mu, sigma, theta):
    s = heavy_top_system(I, 0.7, (0.0, 0.0, 1.0), sigma=sigma, theta=theta)
    drift = s.fields(mu)[:, 0]
    g = s.grad_h0(mu)
    assert drift @ g <= 1e-10 * (1.0 + mu @ mu) ** 2


@settings(max_examples=40, deadline=None)
@given(inertia, vec6, st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_every_field_is_tangent_to_casimir_levels(I, mu, sigma, theta):
    s = heavy_top_system(I, 0.7, (0.0, 0.0, 1.0), sigma=sigma, theta=theta)
    F = s.fields(mu)
    for c in s.structure.casimirs:
        assert np.max(np.abs(c.grad(mu) @ F)) <= 1e-10 * (1.0 + mu @ mu) ** 2


@settings(max_examples=40, deadline=None)
@given(inertia, vec3, st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_rigid_body_fields_tangent_to_spheres(I, mu, sigma, theta):
    s = rigid_body_system(I, sigma=sigma, theta=theta)
    assert np.max(np.abs(mu @ s.fields(mu))) <= 1e-10 * (1.0 + mu @ mu) ** 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 3), st.integers(1, 200), st.floats(0.01, 10.0))
def test_bridge_halves_sum_to_parent(seed, m, n, t1):
    p = brownian_path(m, 0.0, t1, n, seed=seed)
    r = refine(p)
    pair = r.increments[0::2, 1:] + r.increments[1::2, 1:]
    big = np.maximum.reduce([np.abs(p.increments[:, 1:]), np.abs(r.increments[0::2, 1:]),
                             np.abs(r.increments[1::2, 1:])])
    assert np.all(np.abs(pair - p.increments[:, 1:]) <= np.spacing(big))


def vortex_configs(n):
    def build(raw):
        x = np.asarray(raw, dtype=float).reshape(n, 3)
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms < 0.1):
            return None
        x = x / norms[:, None]
        gap = 1.0 - x @ x.T
        np.fill_diagonal(gap, 1.0)
        if gap.min() < 1e-3:
            return None
        return x
    return arrays(np.float64, 3 * n, elements=st.floats(-1.0, 1.0)).map(build).filter(lambda x: x is not None)


@settings(max_examples=40, deadline=None)
@given(vortex_configs(4), st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4), st.floats(0.0, 2.0))
def test_vortex_drift_tangent(x, g, theta):
    d = vortex_drift(VortexConfig(1.0, x, g), theta)
    scale = 1.0 + np.max(np.abs(d))
    assert np.max(np.abs(np.sum(d * x, axis=1))) <= 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(vortex_configs(4), st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4))
def test_conservative_vortex_motion_conserves_energy_and_momentum(x, g):
    c = VortexConfig(1.0, x, g)
    d = vortex_drift(c, 0.0)
    scale = (1.0 + np.max(np.abs(d))) * (1.0 + np.max(np.abs(g)))
    assert abs(np.sum(vortex_gradient(c) * d)) <= 1e-9 * scale * (1.0 + np.max(np.abs(vortex_gradient(c))))
    assert np.max(np.abs(np.asarray(g) @ d)) <= 1e-10 * scale


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=1, max_size=50), st.lists(finite, min_size=1, max_size=50))
def test_ks_statistic_is_symmetric_and_bounded(a, b):
    d = ks_statistic(a, b)
    assert d == ks_statistic(b, a)
    assert 0.0 <= d <= 1.0
    assert ks_statistic(a, a) == 0.0
