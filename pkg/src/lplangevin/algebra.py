"""Finite-dimensional Lie algebra and coalgebra arithmetic.

A Lie algebra is stored as data: structure constants ``c[k, i, j]`` with
``[e_i, e_j] = sum_k c[k, i, j] e_k`` and an inner product ``gamma`` on the
algebra. Coalgebra vectors are coordinates in the dual basis, so the pairing
is the plain dot product.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, UnsupportedError

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class Casimir:
    """Named Casimir function with its gradient on the dual algebra.

    ``value`` and ``grad`` accept a single vector or a stack of vectors.
    """

    name: str
    value: Callable
    grad: Callable


def _norm_sq(mu):
    mu = np.asarray(mu, dtype=float)
    return np.einsum("...i,...i->...", mu, mu)


def _norm_sq_grad(mu):
    return 2.0 * np.asarray(mu, dtype=float)


def _gamma_sq(mu):
    mu = np.asarray(mu, dtype=float)
    return np.einsum("...i,...i->...", mu[..., 3:6], mu[..., 3:6])


def _gamma_sq_grad(mu):
    mu = np.asarray(mu, dtype=float)
    g = np.zeros_like(mu)
    g[..., 3:6] = 2.0 * mu[..., 3:6]
    return g


def _pi_dot_gamma(mu):
    mu = np.asarray(mu, dtype=float)
    return np.einsum("...i,...i->...", mu[..., 0:3], mu[..., 3:6])


def _pi_dot_gamma_grad(mu):
    mu = np.asarray(mu, dtype=float)
    return np.concatenate([mu[..., 3:6], mu[..., 0:3]], axis=-1)


@dataclass(frozen=True)
class LieStructure:
    """Lie algebra given by structure constants and an inner product.

    Attributes:
        dim: dimension of the algebra.
        structure_constants: array ``c[k, i, j]`` of shape (dim, dim, dim).
        gamma: symmetric positive definite inner product on the algebra.
        casimirs: registered Casimir functions of the dual.
        name: label recorded in run metadata.
    """

    dim: int
    structure_constants: np.ndarray
    gamma: np.ndarray
    casimirs: tuple = ()
    name: str = "custom"
    gamma_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        n = int(self.dim)
        if n < 1:
            raise InputError(f"dim must be positive, got {n}")
        if c.shape != (n, n, n):
            raise InputError(f"structure_constants must have shape {(n, n, n)}, got {c.shape}")
        if g.shape != (n, n):
            raise InputError(f"gamma must have shape {(n, n)}, got {g.shape}")
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(g)):
            raise InputError("structure constants and gamma must be finite")
        if np.max(np.abs(c + np.swapaxes(c, 1, 2)), initial=0.0) > 0:
            raise InputError("structure constants are not antisymmetric in (i, j)")
        jac = jacobi_defect(c)
        if jac > JACOBI_TOL * max(1.0, np.max(np.abs(c)) ** 2):
            raise InputError(f"Jacobi identity violated (defect {jac:.3e})")
        if np.max(np.abs(g - g.T)) > 1e-14 * max(1.0, np.max(np.abs(g))):
            raise InputError("gamma is not symmetric")
        if np.linalg.eigvalsh(g)[0] <= 0:
            raise InputError("gamma is not positive definite")
        c.setflags(write=False)
        g.setflags(write=False)
        ginv = np.linalg.inv(g)
        ginv = 0.5 * (ginv + ginv.T)
        ginv.setflags(write=False)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "structure_constants", c)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "gamma_inv", ginv)
        object.__setattr__(self, "casimirs", tuple(self.casimirs))

    def with_gamma(self, gamma):
        """Return a copy with a different inner product."""
        return LieStructure(self.dim, self.structure_constants, gamma, self.casimirs, self.name)


def jacobi_defect(c):
    """Largest entry of the Jacobi sum built from structure constants."""
    # [[e_i,e_j],e_k] = sum_m c[m,i,j] c[l,m,k] e_l, then sum over cyclic (i,j,k)
    t = np.einsum("mij,lmk->lijk", c, c)
    s = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
    return float(np.max(np.abs(s), initial=0.0))


def _check(s, v, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (s.dim,):
        raise InputError(f"{what} must have length {s.dim}, got shape {v.shape}")
    return v


def bracket(s: LieStructure, xi, eta):
    """Lie bracket ``[xi, eta]``."""
    xi = _check(s, xi, "xi")
    eta = _check(s, eta, "eta")
    return np.einsum("kij,i,j->k", s.structure_constants, xi, eta)


def ad(s: LieStructure, xi, eta):
    """Adjoint action ``ad_xi eta = [xi, eta]``."""
    return bracket(s, xi, eta)


def ad_star_matrix(s: LieStructure, mu):
    """Matrix ``A(mu)`` with ``ad*_xi mu = A(mu) @ xi``.

    ``A`` is the Lie-Poisson tensor at ``mu``; it is antisymmetric.
    """
    mu = _check(s, mu, "mu")
    return np.einsum("kij,k->ji", s.structure_constants, mu)


def ad_star(s: LieStructure, xi, mu):
    """Coadjoint action of the algebra on its dual.

    Defined by ``<ad*_xi mu, eta> = <mu, [xi, eta]>`` for all ``eta``.
    """
    xi = _check(s, xi, "xi")
    return ad_star_matrix(s, mu) @ xi


def sharp(s: LieStructure, mu):
    """Musical map from the dual to the algebra, ``gamma^{-1} mu``."""
    mu = _check(s, mu, "mu")
    return s.gamma_inv @ mu


def flat(s: LieStructure, xi):
    """Inverse of :func:`sharp`, ``gamma xi``."""
    xi = _check(s, xi, "xi")
    return s.gamma @ xi


def double_bracket_drift(s: LieStructure, grad_h, mu, theta):
    """Dissipative drift ``theta * ad*_{(ad*_{grad_h} mu)^sharp} mu``.

    Its pairing with ``grad_h`` equals ``-theta * |ad*_{grad_h} mu|^2`` in the
    metric ``gamma^{-1}``, so energy never increases under it.
    """
    if theta < 0:
        raise InputError(f"theta must be nonnegative, got {theta}")
    grad_h = _check(s, grad_h, "grad_h")
    A = ad_star_matrix(s, mu)
    return theta * (A @ (s.gamma_inv @ (A @ grad_h)))


def casimirs(s: LieStructure, mu):
    """Evaluate all registered Casimirs at ``mu`` as a name -> value dict."""
    mu = _check(s, mu, "mu")
    return {c.name: float(c.value(mu)) for c in s.casimirs}


def so3(inertia=None, convention="left", gamma=None):
    """so(3) with the cross-product bracket.

    Args:
        inertia: optional principal moments; when given and ``gamma`` is not,
            the inner product is ``diag(inertia)`` so that ``sharp`` applies
            the inverse inertia tensor to angular momenta.
        convention: ``"left"`` uses ``[a, b] = a x b`` which gives
            ``ad*_xi Pi = Pi x xi``; ``"right"`` uses ``[a, b] = b x a`` which
            gives ``ad*_xi Pi = xi x Pi``.
        gamma: explicit 3x3 inner product, overrides ``inertia``.
    """
    eps = levi_civita()
    if convention == "left":
        c = eps.copy()
    elif convention == "right":
        c = -eps
    else:
        raise InputError(f"convention must be 'left' or 'right', got {convention!r}")
    if gamma is None:
        gamma = np.eye(3) if inertia is None else np.diag(np.asarray(inertia, dtype=float))
    cas = (Casimir("norm_sq", _norm_sq, _norm_sq_grad),)
    return LieStructure(3, c, gamma, cas, name=f"so3-{convention}")


def se3_heavy_top(gamma=None):
    """Semidirect product so(3) x R^3 used by the heavy top.

    Coordinates are ``(xi, u)``; the bracket is
    ``[(xi, u), (eta, v)] = (xi x eta, xi x v - eta x u)``, so that
    ``ad*_{(xi, u)}(Pi, Gamma) = (Pi x xi + Gamma x u, Gamma x xi)``.
    The default inner product is the 6x6 identity.
    """
    eps = levi_civita()
    c = np.zeros((6, 6, 6))
    c[0:3, 0:3, 0:3] = eps
    c[3:6, 0:3, 3:6] = eps
    c[3:6, 3:6, 0:3] = -np.swapaxes(eps, 1, 2)
    if gamma is None:
        gamma = np.eye(6)
    cas = (
        Casimir("gamma_sq", _gamma_sq, _gamma_sq_grad),
        Casimir("pi_dot_gamma", _pi_dot_gamma, _pi_dot_gamma_grad),
    )
    return LieStructure(6, c, gamma, cas, name="se3-heavy-top")


def levi_civita():
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[k, i, j] = 1.0
        eps[k, j, i] = -1.0
    return eps


def rotation_axis_from_skew(A):
    """Vector ``w`` with ``A @ v = w x v`` for an antisymmetric 3x3 ``A``."""
    if A.shape != (3, 3):
        raise UnsupportedError("rotation axis extraction needs a 3x3 matrix")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])
