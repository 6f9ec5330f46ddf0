import numpy as np
import pytest

from lplangevin import algebra
from lplangevin.algebra import (LieStructure, ad_star, ad_star_matrix, bracket, casimirs, double_bracket_drift,
                                flat, se3_heavy_top, sharp, so3)
from lplangevin.errors import InputError


def cross_matrix(w):
    return np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])


def rotation(axis, angle):
    K = cross_matrix(np.asarray(axis) / np.linalg.norm(axis))
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


# ---------------------------------------------------------------------------
# bracket


def test_so3_basis_brackets():
    s = so3()
    e = np.eye(3)
    np.testing.assert_array_equal(bracket(s, e[0], e[1]), e[2])
    np.testing.assert_array_equal(bracket(s, e[1], e[2]), e[0])


def test_bracket_self_is_zero():
    s = so3()
    xi = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(bracket(s, xi, xi), np.zeros(3))


def test_so3_bracket_matches_cross_product():
    s = so3()
    xi, eta = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
    # hand arithmetic: (2*6-3*5, 3*4-1*6, 1*5-2*4)
    np.testing.assert_allclose(bracket(s, xi, eta), [-3.0, 6.0, -3.0], atol=0)


def test_bracket_dimension_mismatch():
    with pytest.raises(InputError):
        bracket(so3(), np.ones(2), np.ones(3))


def test_right_convention_flips_bracket():
    xi, eta = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
    np.testing.assert_allclose(bracket(so3(convention="right"), xi, eta), [3.0, -6.0, 3.0])


# ---------------------------------------------------------------------------
# construction checks


def test_rejects_non_antisymmetric_constants():
    c = np.zeros((2, 2, 2))
    c[0, 0, 1] = 1.0
    with pytest.raises(InputError, match="antisymmetric"):
        LieStructure(2, c, np.eye(2))


def test_rejects_jacobi_violation():
    # antisymmetric but not a Lie algebra: [e1,e2]=e3, [e2,e3]=e3, [e3,e1]=e1
    c = np.zeros((3, 3, 3))
    for k, i, j in ((2, 0, 1), (2, 1, 2), (0, 2, 0)):
        c[k, i, j] = 1.0
        c[k, j, i] = -1.0
    assert algebra.jacobi_defect(c) > 0
    with pytest.raises(InputError, match="Jacobi"):
        LieStructure(3, c, np.eye(3))


@pytest.mark.parametrize("gamma", [np.array([[1.0, 0.5], [0.0, 1.0]]), np.diag([1.0, -1.0])])
def test_rejects_bad_gamma(gamma):
    with pytest.raises(InputError):
        LieStructure(2, np.zeros((2, 2, 2)), gamma)


def test_rejects_wrong_shape():
    with pytest.raises(InputError, match="shape"):
        LieStructure(3, np.zeros((3, 3, 2)), np.eye(3))


def test_builtin_structures_satisfy_jacobi():
    for s in (so3(), so3(convention="right"), se3_heavy_top()):
        assert algebra.jacobi_defect(s.structure_constants) == 0.0


# ---------------------------------------------------------------------------
# coadjoint action


def test_ad_star_right_convention_example():
    s = so3(convention="right")
    np.testing.assert_array_equal(ad_star(s, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0])


def test_ad_star_left_convention_is_pi_cross_xi():
    s = so3()
    xi, pi = np.array([0.2, -0.7, 1.1]), np.array([1.5, 0.3, -0.4])
    np.testing.assert_allclose(ad_star(s, xi, pi), np.cross(pi, xi), atol=1e-15)
    np.testing.assert_allclose(ad_star(so3(convention="right"), xi, pi), np.cross(xi, pi), atol=1e-15)


def test_ad_star_of_zero():
    np.testing.assert_array_equal(ad_star(se3_heavy_top(), np.arange(6.0), np.zeros(6)), np.zeros(6))


@pytest.mark.parametrize("make", [so3, lambda: so3(convention="right"), se3_heavy_top])
def test_duality_pairing(make):
    s = make()
    rng = np.random.default_rng(1)
    for _ in range(100):
        xi, eta, mu = rng.normal(size=(3, s.dim))
        assert abs(ad_star(s, xi, mu) @ eta - mu @ bracket(s, xi, eta)) < 1e-12


def test_ad_star_matrix_is_antisymmetric():
    s = se3_heavy_top()
    A = ad_star_matrix(s, np.random.default_rng(0).normal(size=6))
    np.testing.assert_allclose(A, -A.T, atol=0)


def test_heavy_top_coadjoint_formula():
    s = se3_heavy_top()
    rng = np.random.default_rng(2)
    xi, u, Pi, G = rng.normal(size=(4, 3))
    out = ad_star(s, np.concatenate([xi, u]), np.concatenate([Pi, G]))
    np.testing.assert_allclose(out[:3], np.cross(Pi, xi) + np.cross(G, u), atol=1e-14)
    np.testing.assert_allclose(out[3:], np.cross(G, xi), atol=1e-14)


# ---------------------------------------------------------------------------
# musical maps


def test_sharp_identity_metric():
    mu = np.array([0.1, 2.0, -3.0])
    np.testing.assert_array_equal(sharp(so3(), mu), mu)


def test_sharp_diagonal_metric():
    s = so3(gamma=np.diag([1.0, 2.0, 3.0]))
    mu = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(sharp(s, mu), np.linalg.solve(np.diag([1.0, 2.0, 3.0]), mu), rtol=1e-15)
    np.testing.assert_allclose(sharp(s, mu), [1.0, 1.0, 1.0], rtol=1e-15)


def test_sharp_flat_round_trip():
    g = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])
    s = so3(gamma=g)
    mu = np.array([0.7, -1.3, 2.2])
    np.testing.assert_allclose(flat(s, sharp(s, mu)), mu, atol=1e-14)
    eta = np.array([0.4, 0.5, -0.6])
    assert abs(mu @ eta - sharp(s, mu) @ g @ eta) < 1e-14


# ---------------------------------------------------------------------------
# double bracket


def test_double_bracket_theta_zero():
    s = so3(inertia=(1, 2, 3))
    np.testing.assert_array_equal(double_bracket_drift(s, [1.0, 0.5, 1 / 3], [1.0, 1.0, 1.0], 0.0), np.zeros(3))


def test_double_bracket_rigid_body_value():
    # hand arithmetic: Pi x I^-1 (Pi x I^-1 Pi) = (-1/2, 0, 1/2) for Pi=(1,1,1), I=diag(1,2,3).
    # The drift is theta times that vector; its sign makes it dissipative.
    pi = np.array([1.0, 1.0, 1.0])
    omega = pi / np.array([1.0, 2.0, 3.0])
    hand = np.cross(pi, np.cross(pi, omega) / np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(hand, [-0.5, 0.0, 0.5], atol=1e-15)
    for conv in ("left", "right"):
        s = so3(inertia=(1, 2, 3), convention=conv)
        d = double_bracket_drift(s, omega, pi, 0.3)
        np.testing.assert_allclose(d, 0.3 * hand, atol=1e-15)
        assert d @ omega < 0


def test_double_bracket_vanishes_at_equilibrium():
    s = so3(inertia=(1, 2, 3))
    pi = np.array([0.0, 0.0, 2.0])
    np.testing.assert_allclose(double_bracket_drift(s, pi / np.array([1, 2, 3]), pi, 1.0), 0.0, atol=0)


def test_double_bracket_negative_theta():
    with pytest.raises(InputError):
        double_bracket_drift(so3(), np.ones(3), np.ones(3), -0.1)


def test_double_bracket_energy_pairing_identity():
    s = se3_heavy_top(gamma=np.diag([1.0, 2.0, 0.5, 1.0, 3.0, 1.5]))
    rng = np.random.default_rng(5)
    for _ in range(50):
        mu, g = rng.normal(size=(2, 6))
        w = ad_star(s, g, mu)
        expect = -0.7 * w @ np.linalg.solve(s.gamma, w)
        assert abs(double_bracket_drift(s, g, mu, 0.7) @ g - expect) < 1e-12


# ---------------------------------------------------------------------------
# Casimirs


def test_so3_casimir_value():
    assert casimirs(so3(), [3.0, 4.0, 0.0]) == {"norm_sq": 25.0}


def test_heavy_top_casimir_values():
    assert casimirs(se3_heavy_top(), [1.0, 0, 0, 0, 1.0, 0]) == {"gamma_sq": 1.0, "pi_dot_gamma": 0.0}


def test_casimir_invariant_under_rotation():
    rng = np.random.default_rng(3)
    s = se3_heavy_top()
    for _ in range(20):
        Q = rotation(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
        Pi, G = rng.normal(size=(2, 3))
        before = casimirs(s, np.concatenate([Pi, G]))
        after = casimirs(s, np.concatenate([Q @ Pi, Q @ G]))
        for k in before:
            assert abs(before[k] - after[k]) <= 1e-12 * max(1.0, abs(before[k]))
    pi = rng.normal(size=3)
    Q = rotation([1.0, 2.0, -0.5], 0.8)
    assert abs(casimirs(so3(), Q @ pi)["norm_sq"] - pi @ pi) < 1e-12


def test_casimir_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    for s in (so3(), se3_heavy_top()):
        mu = rng.normal(size=s.dim)
        for c in s.casimirs:
            h = 1e-6
            fd = np.array([(c.value(mu + h * e) - c.value(mu - h * e)) / (2 * h) for e in np.eye(s.dim)])
            np.testing.assert_allclose(c.grad(mu), fd, atol=1e-8)


def test_casimirs_annihilated_by_coadjoint_directions():
    rng = np.random.default_rng(6)
    for s in (so3(), se3_heavy_top()):
        for _ in range(50):
            mu, xi = rng.normal(size=(2, s.dim))
            for c in s.casimirs:
                assert abs(c.grad(mu) @ ad_star(s, xi, mu)) < 1e-10
