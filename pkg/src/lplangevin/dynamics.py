"""Stratonovich vector fields for the Lie-Poisson-Langevin family.

Every system exposes the same small interface used by the integrators:

* ``dim`` and ``n_noise``;
* ``fields(x)``: matrix of shape (dim, n_noise + 1) whose column 0 is the
  drift per unit time and column ``i`` the diffusion field for ``dS^i``;
* ``apply_fields(x, dS)``: ``fields(x) @ dS`` (systems may do this faster);
* ``ito_drift(x, qv)``: ``0.5 * sum_i (J f_i) f_i d[S^i]``, the
  Stratonovich to Ito correction for one step;
* ``project(x)``: post-step projection (identity unless stated);
* ``diagnostics(states)``: named scalar series for a stack of states.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import algebra
from .algebra import LieStructure
from .errors import InputError

ORTHONORMAL_TOL = 1e-10
FD_EPS = np.finfo(float).eps ** (1.0 / 3.0)


def resolve_theta(sigma, theta=None, beta=None):
    """Return ``(theta, beta)`` honoring ``theta = beta * sigma**2 / 2``.

    When only ``beta`` is given, ``theta`` is computed from it. When both are
    given they must agree. A bare ``theta`` leaves ``beta`` undefined.
    """
    if sigma < 0:
        raise InputError(f"sigma must be nonnegative, got {sigma}")
    if beta is not None and beta < 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    if theta is None and beta is None:
        return 0.0, None
    if theta is None:
        return 0.5 * beta * sigma**2, float(beta)
    if theta < 0:
        raise InputError(f"theta must be nonnegative, got {theta}")
    if beta is not None:
        target = 0.5 * beta * sigma**2
        if abs(theta - target) > 1e-12 * max(abs(theta), abs(target)):
            raise InputError(
                f"theta={theta} is inconsistent with beta*sigma^2/2={target}; "
                "pass only one of them"
            )
        return float(theta), float(beta)
    return float(theta), None


def _fd_jacobian_products(fields_fn, x, cols):
    """``(J f_i) f_i`` for the listed field columns by central differences."""
    F = fields_fn(x)
    out = np.zeros((x.size, len(cols)))
    scale = max(1.0, float(np.max(np.abs(x))))
    for n, i in enumerate(cols):
        v = F[:, i]
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        h = FD_EPS * scale / nv
        out[:, n] = (fields_fn(x + h * v)[:, i] - fields_fn(x - h * v)[:, i]) / (2.0 * h)
    return out


class SystemBase:
    """Shared defaults for the system interface."""

    dim: int
    n_noise: int

    def fields(self, x):
        raise NotImplementedError

    def apply_fields(self, x, dS):
        return self.fields(x) @ dS

    def ito_terms(self, x):
        """Columns ``(J f_i) f_i`` for ``i = 1..n_noise``."""
        return _fd_jacobian_products(self.fields, np.asarray(x, dtype=float), range(1, self.n_noise + 1))

    def ito_drift(self, x, qv):
        if self.n_noise == 0:
            return np.zeros_like(x)
        return 0.5 * (self.ito_terms(x) @ qv[1:])

    def project(self, x):
        return x

    def diagnostics(self, states):
        return {}

    def state_labels(self):
        return [f"x{i}" for i in range(self.dim)]

    def describe(self):
        return {"system": type(self).__name__}


# ---------------------------------------------------------------------------
# energies


@dataclass(frozen=True)
class RigidBodyEnergy:
    """``h0 = 0.5 * Pi . I^{-1} Pi`` for principal moments ``inertia``."""

    inertia: tuple

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        return 0.5 * np.sum(mu * mu / np.asarray(self.inertia), axis=-1)

    def grad(self, mu):
        return np.asarray(mu, dtype=float) / np.asarray(self.inertia)


@dataclass(frozen=True)
class HeavyTopEnergy:
    """``h = 0.5 * Pi . I^{-1} Pi + Mgl * Gamma . chi``."""

    inertia: tuple
    mgl: float
    chi: tuple

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        pi, gam = mu[..., 0:3], mu[..., 3:6]
        return 0.5 * np.sum(pi * pi / np.asarray(self.inertia), axis=-1) + self.mgl * (gam @ np.asarray(self.chi))

    def grad(self, mu):
        mu = np.asarray(mu, dtype=float)
        g = np.empty_like(mu)
        g[..., 0:3] = mu[..., 0:3] / np.asarray(self.inertia)
        g[..., 3:6] = self.mgl * np.asarray(self.chi)
        return g


# ---------------------------------------------------------------------------
# Lie-Poisson-Langevin


@dataclass(frozen=True)
class LiePoissonSystem(SystemBase):
    """Lie-Poisson-Langevin system on the dual of a Lie algebra.

    Attributes:
        structure: the Lie algebra with its inner product.
        grad_h0: callable returning the energy gradient (an algebra vector).
        noise_dirs: array (M, dim) of gamma-orthonormal directions xi_i.
        sigma: noise amplitude.
        theta: dissipation strength; computed from beta when omitted.
        beta: inverse temperature, optional.
        h0: callable energy, used for diagnostics.
        label: name recorded in metadata.
    """

    structure: LieStructure
    grad_h0: Callable
    noise_dirs: np.ndarray
    sigma: float = 0.0
    theta: Optional[float] = None
    beta: Optional[float] = None
    h0: Optional[Callable] = None
    label: str = "custom_lie_poisson"
    _xi: np.ndarray = field(init=False, repr=False, compare=False)
    _cT: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = self.structure
        xi = np.asarray(self.noise_dirs, dtype=float).reshape(-1, s.dim)
        if xi.shape[0]:
            G = xi @ s.gamma @ xi.T
            err = np.max(np.abs(G - np.eye(xi.shape[0])))
            if err > ORTHONORMAL_TOL:
                raise InputError(f"noise directions are not gamma-orthonormal (defect {err:.3e})")
        theta, beta = resolve_theta(self.sigma, self.theta, self.beta)
        xi.setflags(write=False)
        d = s.dim
        # _cT @ mu reshaped to (d, d) is the ad*-matrix A(mu)
        cT = np.ascontiguousarray(s.structure_constants.transpose(2, 1, 0).reshape(d * d, d))
        object.__setattr__(self, "_cT", cT)
        object.__setattr__(self, "_xi", xi)
        object.__setattr__(self, "noise_dirs", xi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def dim(self):
        return self.structure.dim

    @property
    def n_noise(self):
        return self._xi.shape[0]

    def _A(self, mu):
        d = self.structure.dim
        return (self._cT @ mu).reshape(d, d)

    def fields(self, mu):
        s = self.structure
        A = self._A(mu)
        w = A @ self.grad_h0(mu)
        F = np.empty((s.dim, self.n_noise + 1))
        F[:, 0] = w + self.theta * (A @ (s.gamma_inv @ w))
        if self.n_noise:
            F[:, 1:] = self.sigma * (A @ self._xi.T)
        return F

    def apply_fields(self, mu, dS):
        A = self._A(mu)
        w = A @ self.grad_h0(mu)
        out = (w + self.theta * (A @ (self.structure.gamma_inv @ w))) * dS[0]
        if self.n_noise:
            out = out + self.sigma * (A @ (dS[1:] @ self._xi))
        return out

    def ito_terms(self, mu):
        c = self.structure.structure_constants
        A = self._A(mu)
        B = (A @ self._xi.T).T  # rows: ad*_{xi_i} mu
        return self.sigma**2 * np.einsum("kij,mk,mi->jm", c, B, self._xi)

    def energy(self, mu):
        if self.h0 is None:
            raise InputError("system has no energy function")
        return self.h0(mu)

    def diagnostics(self, states):
        out = {}
        if self.h0 is not None:
            out["h0"] = np.asarray(self.h0(states), dtype=float)
        for c in self.structure.casimirs:
            out[c.name] = np.asarray(c.value(states), dtype=float)
        return out

    def state_labels(self):
        if self.label in ("rigid_body",):
            return ["Pi1", "Pi2", "Pi3"]
        if self.label in ("heavy_top",):
            return ["Pi1", "Pi2", "Pi3", "Gamma1", "Gamma2", "Gamma3"]
        return [f"mu{i + 1}" for i in range(self.dim)]

    def describe(self):
        return {
            "system": self.label,
            "structure": self.structure.name,
            "gamma": self.structure.gamma.tolist(),
            "noise_dirs": self._xi.tolist(),
            "sigma": self.sigma,
            "theta": self.theta,
            "beta": self.beta,
        }


@dataclass(frozen=True)
class ProjectedLiePoissonSystem(LiePoissonSystem):
    """Heavy-top variant that rescales ``Gamma`` back to its initial length."""

    gamma_norm: float = 1.0

    def project(self, x):
        y = x.copy()
        n = np.linalg.norm(y[3:6])
        if n > 0:
            y[3:6] *= self.gamma_norm / n
        return y


def lp_fields(sys: LiePoissonSystem, mu):
    """Drift and list of diffusion fields of a Lie-Poisson-Langevin system."""
    mu = algebra._check(sys.structure, mu, "mu")
    F = sys.fields(mu)
    return F[:, 0].copy(), [F[:, i].copy() for i in range(1, F.shape[1])]


def lp_ito_correction(sys: LiePoissonSystem, mu):
    """``0.5 * sum_i sigma^2 ad*_{xi_i} ad*_{xi_i} mu`` for Brownian noise."""
    mu = algebra._check(sys.structure, mu, "mu")
    if sys.n_noise == 0:
        return np.zeros(sys.dim)
    return 0.5 * np.sum(sys.ito_terms(mu), axis=1)


def rigid_body_system(inertia, sigma=0.0, theta=None, beta=None, convention="left", noise_dirs=None):
    """Stochastic dissipative rigid body.

    The inner product on so(3) is ``diag(inertia)``, so ``sharp`` is the
    inverse inertia tensor and the default noise directions
    ``e_i / sqrt(I_i)`` (principal axes) are orthonormal.
    """
    inertia = tuple(float(v) for v in inertia)
    if len(inertia) != 3 or min(inertia) <= 0:
        raise InputError(f"inertia must be three positive moments, got {inertia}")
    s = algebra.so3(inertia=inertia, convention=convention)
    if noise_dirs is None:
        noise_dirs = np.diag(1.0 / np.sqrt(inertia))
    e = RigidBodyEnergy(inertia)
    return LiePoissonSystem(s, e.grad, noise_dirs, sigma, theta, beta, e.value, "rigid_body")


def heavy_top_system(inertia, mgl, chi, sigma=0.0, theta=None, beta=None, xi=None, grad_gamma=None,
                     gamma=None, renormalize=False, gamma_norm=1.0):
    """Stochastic dissipative heavy top on so(3) x R^3.

    Args:
        inertia: principal moments.
        mgl: product of mass, gravity and lever length.
        chi: unit vector from the fixed point to the centre of mass.
        xi: (M, 3) rotational noise directions, default the standard basis.
        grad_gamma: (M, 3) translational parts ``grad gamma_i``, default zero.
        gamma: 6x6 inner product for ``sharp``, default identity.
        renormalize: rescale ``Gamma`` to ``gamma_norm`` after every step.
    """
    inertia = tuple(float(v) for v in inertia)
    chi = np.asarray(chi, dtype=float)
    if abs(np.linalg.norm(chi) - 1.0) > 1e-12:
        raise InputError("chi must be a unit vector")
    s = algebra.se3_heavy_top(gamma)
    xi = np.eye(3) if xi is None else np.asarray(xi, dtype=float).reshape(-1, 3)
    gg = np.zeros_like(xi) if grad_gamma is None else np.asarray(grad_gamma, dtype=float).reshape(xi.shape)
    dirs = np.hstack([xi, gg])
    e = HeavyTopEnergy(inertia, float(mgl), tuple(chi.tolist()))
    if renormalize:
        return ProjectedLiePoissonSystem(s, e.grad, dirs, sigma, theta, beta, e.value, "heavy_top",
                                         gamma_norm=float(gamma_norm))
    return LiePoissonSystem(s, e.grad, dirs, sigma, theta, beta, e.value, "heavy_top")


def heavy_top_fields(inertia, mgl, chi, Pi, Gamma, sigma=0.0, theta=0.0, xi=None, grad_gamma=None):
    """Heavy-top drift and diffusions written out with cross products.

    Uses identity ``sharp``. With ``Omega = I^{-1} Pi`` and
    ``W = Pi x Omega + Mgl Gamma x chi``::

        dPi    = W dt + theta (Pi x W + Gamma x (Gamma x Omega)) dt
                 + sigma sum (Pi x xi_i + Gamma x grad_gamma_i) o dW^i
        dGamma = Gamma x Omega dt + theta Gamma x W dt
                 + sigma sum Gamma x xi_i o dW^i

    Returns:
        (drift, diffusions) with drift of length 6 and a list of 6-vectors.
    """
    Pi = np.asarray(Pi, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    chi = np.asarray(chi, dtype=float)
    Om = Pi / np.asarray(inertia, dtype=float)
    W = np.cross(Pi, Om) + mgl * np.cross(Gamma, chi)
    V = np.cross(Gamma, Om)
    dPi = W + theta * (np.cross(Pi, W) + np.cross(Gamma, V))
    dGa = V + theta * np.cross(Gamma, W)
    xi = np.eye(3) if xi is None else np.asarray(xi, dtype=float).reshape(-1, 3)
    gg = np.zeros_like(xi) if grad_gamma is None else np.asarray(grad_gamma, dtype=float).reshape(xi.shape)
    diffs = [
        sigma * np.concatenate([np.cross(Pi, x) + np.cross(Gamma, g), np.cross(Gamma, x)])
        for x, g in zip(xi, gg)
    ]
    return np.concatenate([dPi, dGa]), diffs


# ---------------------------------------------------------------------------
# canonical phase space


@dataclass(frozen=True)
class Hamiltonian:
    """Scalar function on phase space with an optional analytic gradient.

    ``grad(q, p)`` must return ``(dH/dq, dH/dp)``. Without it, central
    differences with step ``eps^(1/3) * scale`` are used.
    """

    value: Callable
    grad: Optional[Callable] = None
    scale: float = 1.0

    def gradient(self, q, p):
        if self.grad is not None:
            gq, gp = self.grad(q, p)
            return np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)
        h = FD_EPS * self.scale
        gq = np.empty(q.size)
        gp = np.empty(p.size)
        for i in range(q.size):
            e = np.zeros(q.size)
            e[i] = h
            gq[i] = (self.value(q + e, p) - self.value(q - e, p)) / (2 * h)
            gp[i] = (self.value(q, p + e) - self.value(q, p - e)) / (2 * h)
        return gq, gp


def canonical_bracket(grad_f, grad_g):
    """``{F, G} = F_q . G_p - F_p . G_q`` from gradient pairs."""
    return float(grad_f[0] @ grad_g[1] - grad_f[1] @ grad_g[0])


def hamiltonian_vector_field(grad):
    """``X_H = (dH/dp, -dH/dq)``."""
    return np.concatenate([grad[1], -grad[0]])


@dataclass(frozen=True)
class CanonicalSystem(SystemBase):
    """Symplectic Langevin system on R^{2n}.

    ``hamiltonians[0]`` is the energy; the others are noise Hamiltonians
    ``h_i`` that enter with amplitude ``sigma``, i.e. ``H_i = sigma h_i``.
    """

    dim_q: int
    hamiltonians: tuple
    sigma: float = 0.0
    theta: Optional[float] = None
    beta: Optional[float] = None
    label: str = "canonical"

    def __post_init__(self):
        if len(self.hamiltonians) < 1:
            raise InputError("need at least the energy Hamiltonian")
        theta, beta = resolve_theta(self.sigma, self.theta, self.beta)
        object.__setattr__(self, "hamiltonians", tuple(self.hamiltonians))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self):
        return 2 * self.dim_q

    @property
    def n_noise(self):
        return len(self.hamiltonians) - 1

    def split(self, x):
        return x[: self.dim_q], x[self.dim_q:]

    def fields(self, x):
        q, p = self.split(np.asarray(x, dtype=float))
        drift, diffs = langevin_fields(self, q, p)
        return np.column_stack([drift] + diffs)

    def diagnostics(self, states):
        h = self.hamiltonians[0]
        return {"h0": np.array([h.value(*self.split(s)) for s in states])}

    def state_labels(self):
        return [f"q{i + 1}" for i in range(self.dim_q)] + [f"p{i + 1}" for i in range(self.dim_q)]

    def describe(self):
        return {"system": self.label, "sigma": self.sigma, "theta": self.theta, "beta": self.beta}


def bismut_fields(sys: CanonicalSystem, q, p):
    """Hamiltonian vector fields ``(dH_i/dp, -dH_i/dq)`` of every ``H_i``.

    Noise Hamiltonians carry the factor ``sigma``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    out = []
    for i, h in enumerate(sys.hamiltonians):
        X = hamiltonian_vector_field(h.gradient(q, p))
        out.append(X if i == 0 else sys.sigma * X)
    return out


def langevin_fields(sys: CanonicalSystem, q, p):
    """Drift ``X_H0 - (beta/2) sum {H0, H_i} X_{H_i}`` and diffusions ``X_{H_i}``.

    With ``H_i = sigma h_i`` the dissipative part is
    ``-theta sum {H0, h_i} X_{h_i}`` where ``theta = beta sigma^2 / 2``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    g0 = sys.hamiltonians[0].gradient(q, p)
    drift = hamiltonian_vector_field(g0)
    diffs = []
    for h in sys.hamiltonians[1:]:
        gi = h.gradient(q, p)
        Xi = hamiltonian_vector_field(gi)
        drift = drift - sys.theta * canonical_bracket(g0, gi) * Xi
        diffs.append(sys.sigma * Xi)
    return drift, diffs


def coordinate_hamiltonian(i):
    """``h(q, p) = q^i`` with its exact gradient."""
    return Hamiltonian(_Coordinate(i), _CoordinateGrad(i))


@dataclass(frozen=True)
class _Coordinate:
    i: int

    def __call__(self, q, p):
        return float(q[self.i])


@dataclass(frozen=True)
class _CoordinateGrad:
    i: int

    def __call__(self, q, p):
        g = np.zeros(len(q))
        g[self.i] = 1.0
        return g, np.zeros(len(p))


@dataclass(frozen=True)
class _SeparableEnergy:
    m: float
    k: float

    def __call__(self, q, p):
        return float(p @ p / (2 * self.m) + 0.5 * self.k * q @ q)


@dataclass(frozen=True)
class _SeparableEnergyGrad:
    m: float
    k: float

    def __call__(self, q, p):
        return self.k * np.asarray(q, dtype=float), np.asarray(p, dtype=float) / self.m


def underdamped_langevin_system(n, m=1.0, k=1.0, sigma=0.0, theta=None, beta=None):
    """``H0 = |p|^2/2m + k|q|^2/2`` with noise Hamiltonians ``h_i = q^i``."""
    hs = [Hamiltonian(_SeparableEnergy(m, k), _SeparableEnergyGrad(m, k))]
    hs += [coordinate_hamiltonian(i) for i in range(n)]
    return CanonicalSystem(n, tuple(hs), sigma, theta, beta, label="underdamped_langevin")


# ---------------------------------------------------------------------------
# magnetic particle


@dataclass(frozen=True)
class HarmonicPotential:
    """``V(q) = k |q|^2 / 2`` evaluated row-wise."""

    k: float = 1.0

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * self.k * np.sum(q * q, axis=-1)

    def grad(self, q):
        return self.k * np.asarray(q, dtype=float)


@dataclass(frozen=True)
class UniformField:
    """Constant magnetic field."""

    b: tuple = (0.0, 0.0, 0.0)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(np.asarray(self.b, dtype=float), q.shape)


@dataclass(frozen=True)
class FieldFromPotential:
    """Magnetic field from a vector potential ``A``.

    Uses ``B_i = (eps_ijk / 2)(dA_j/dq^k - dA_k/dq^j)``, which is ``-curl A``.
    Derivatives are central differences with step ``h``.
    """

    A: Callable
    h: float = 1e-5

    def __call__(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        J = np.empty(q.shape + (3,))  # J[n, j, k] = dA_j / dq^k
        for k in range(3):
            e = np.zeros(3)
            e[k] = self.h
            J[:, :, k] = (np.atleast_2d(self.A(q + e)) - np.atleast_2d(self.A(q - e))) / (2 * self.h)
        curl = np.stack(
            [J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], axis=-1
        )
        return -curl


@dataclass(frozen=True)
class MagneticParticleSystem(SystemBase):
    """Charged Brownian particles in a magnetic field.

    State layout is ``(q_1..q_n, p_1..p_n)``, each a 3-vector, flattened.
    The ``n_particles`` copies are independent and share parameters. Drift::

        dq = p/m dt
        dp = (-grad V + (charge/m) p x B - (theta/m) p) dt + sigma dW
    """

    m: float
    potential: object
    field_b: Callable
    charge: float = 1.0
    sigma: float = 0.0
    theta: Optional[float] = None
    beta: Optional[float] = None
    n_particles: int = 1
    label: str = "magnetic_particle"

    def __post_init__(self):
        if not self.m > 0:
            raise InputError(f"mass must be positive, got {self.m}")
        if int(self.n_particles) < 1:
            raise InputError("n_particles must be positive")
        theta, beta = resolve_theta(self.sigma, self.theta, self.beta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self):
        return 6 * self.n_particles

    @property
    def n_noise(self):
        return 3 * self.n_particles

    def split(self, x):
        n = self.n_particles
        return x[: 3 * n].reshape(n, 3), x[3 * n:].reshape(n, 3)

    def drift(self, x):
        q, p = self.split(x)
        B = self.field_b(q)
        dq = p / self.m
        dp = -self.potential.grad(q) + (self.charge / self.m) * np.cross(p, B) - (self.theta / self.m) * p
        return np.concatenate([dq.ravel(), dp.ravel()])

    def fields(self, x):
        F = np.zeros((self.dim, self.n_noise + 1))
        F[:, 0] = self.drift(x)
        n3 = 3 * self.n_particles
        F[n3:, 1:] = self.sigma * np.eye(n3)
        return F

    def apply_fields(self, x, dS):
        out = self.drift(x) * dS[0]
        out[3 * self.n_particles:] += self.sigma * dS[1:]
        return out

    def ito_drift(self, x, qv):
        return np.zeros_like(x)

    def energy(self, x):
        q, p = self.split(np.asarray(x, dtype=float))
        return float(np.sum(p * p) / (2 * self.m) + np.sum(self.potential.value(q)))

    def diagnostics(self, states):
        n = self.n_particles
        q = states[:, : 3 * n].reshape(len(states), n, 3)
        p = states[:, 3 * n:].reshape(len(states), n, 3)
        h = np.sum(p * p, axis=(1, 2)) / (2 * self.m) + np.sum(self.potential.value(q), axis=1)
        return {"h0": h}

    def state_labels(self):
        n = self.n_particles
        lab = []
        for name in ("q", "p"):
            for a in range(n):
                lab += [f"{name}{a}_{c}" for c in "xyz"]
        return lab

    def describe(self):
        return {"system": self.label, "m": self.m, "charge": self.charge, "sigma": self.sigma,
                "theta": self.theta, "beta": self.beta, "n_particles": self.n_particles}


def magnetic_particle_system(m=1.0, potential=None, B=None, A=None, charge=1.0, sigma=0.0, theta=None,
                             beta=None, n_particles=1):
    """Build a :class:`MagneticParticleSystem`.

    Exactly one of ``B`` (constant 3-vector or callable) and ``A`` (vector
    potential callable) may be given; neither means no field.
    """
    if B is not None and A is not None:
        raise InputError("give either B or A, not both")
    if A is not None:
        fb = FieldFromPotential(A)
    elif B is None:
        fb = UniformField()
    elif callable(B):
        fb = B
    else:
        fb = UniformField(tuple(float(v) for v in B))
    pot = HarmonicPotential(0.0) if potential is None else potential
    return MagneticParticleSystem(float(m), pot, fb, float(charge), float(sigma), theta, beta, int(n_particles))
