"""Stochastic dissipative point vortices on a sphere of radius R.

Positions are extrinsic 3-vectors with ``|x_i| = R``. The interaction uses
the Green's function ``G0(x, y) = -log(R^2 - x.y) / (4 pi R)`` with the
self-interaction removed. Transport noise is built from real spherical
harmonics; every vortex is moved by the same Brownian increments.
"""

import json
from dataclasses import dataclass, field
from math import factorial, pi, sqrt

import numpy as np

from .dynamics import SystemBase, resolve_theta
from .errors import CollisionError, InputError

COLLISION_REL_EPS = 1e-8
RADIUS_TOL = 1e-10


def green_g0(x, y, R=1.0, collision_eps=None):
    """Green's function of the Laplacian on the sphere (up to constants)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps = COLLISION_REL_EPS * R * R if collision_eps is None else collision_eps
    gap = R * R - float(x @ y)
    if gap <= eps:
        raise CollisionError(f"points collide (R^2 - x.y = {gap:.3e})", pair=(0, 1), gap=gap)
    return -np.log(gap) / (4.0 * pi * R)


@dataclass(frozen=True)
class VortexConfig:
    """Point vortex positions and strengths on the sphere of radius ``R``."""

    R: float
    positions: np.ndarray
    strengths: np.ndarray
    collision_eps: float = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.positions, dtype=float))
        g = np.asarray(self.strengths, dtype=float).ravel()
        if not self.R > 0:
            raise InputError(f"R must be positive, got {self.R}")
        if x.shape[1] != 3 or x.shape[0] != g.size:
            raise InputError(f"need N positions of length 3 and N strengths, got {x.shape} and {g.shape}")
        dev = np.max(np.abs(np.linalg.norm(x, axis=1) - self.R), initial=0.0)
        if dev > RADIUS_TOL * max(1.0, self.R):
            raise InputError(f"positions are off the sphere by {dev:.3e}")
        eps = COLLISION_REL_EPS * self.R**2 if self.collision_eps is None else self.collision_eps
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "strengths", g)
        object.__setattr__(self, "collision_eps", float(eps))
        check_collisions(x, self.R, eps)

    @property
    def n(self):
        return self.positions.shape[0]

    def to_json(self):
        return json.dumps({"R": self.R, "positions": self.positions.tolist(), "strengths": self.strengths.tolist()})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(float(d["R"]), np.array(d["positions"], dtype=float), np.array(d["strengths"], dtype=float))


def check_collisions(x, R, eps):
    """Raise :class:`CollisionError` for the closest pair if it is too close."""
    n = x.shape[0]
    if n < 2:
        return
    gap = R * R - x @ x.T
    np.fill_diagonal(gap, np.inf)
    k = int(np.argmin(gap))
    i, j = divmod(k, n)
    if gap[i, j] <= eps:
        raise CollisionError(
            f"vortices {min(i, j)} and {max(i, j)} collide (R^2 - x.y = {gap[i, j]:.3e})",
            pair=(min(i, j), max(i, j)),
            gap=float(gap[i, j]),
        )


def _gaps(x, R):
    gap = R * R - x @ x.T
    np.fill_diagonal(gap, np.inf)
    return gap


def vortex_hamiltonian(c: VortexConfig):
    """``h0 = sum_{i<j} Gamma_i Gamma_j G0(x_i, x_j)``."""
    return _hamiltonian(c.positions, c.strengths, c.R)


def _hamiltonian(x, g, R):
    n = x.shape[0]
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, 1)
    gap = (R * R - x @ x.T)[iu]
    return float(np.sum(-g[iu[0]] * g[iu[1]] * np.log(gap)) / (4.0 * pi * R))


def vortex_hamiltonian_batch(states, strengths, R):
    """Hamiltonian for a stack of flattened configurations."""
    g = np.asarray(strengths, dtype=float)
    n = g.size
    x = np.asarray(states, dtype=float).reshape(len(states), n, 3)
    if n < 2:
        return np.zeros(len(states))
    iu = np.triu_indices(n, 1)
    gap = R * R - np.einsum("tid,tjd->tij", x, x)[:, iu[0], iu[1]]
    return np.sum(-g[iu[0]] * g[iu[1]] * np.log(gap), axis=1) / (4.0 * pi * R)


def vortex_gradient(c: VortexConfig):
    """Ambient gradient ``d h0 / d x_i`` as an (N, 3) array."""
    x, g, R = c.positions, c.strengths, c.R
    w = g[:, None] * g[None, :] / (4.0 * pi * R * _gaps(x, R))
    return w @ x


def vortex_drift(c: VortexConfig, theta=0.0):
    """Conservative plus dissipative drift of every vortex, shape (N, 3).

    The conservative part is
    ``v_i = (1/4 pi R) sum_{j != i} Gamma_j (x_j x x_i) / (R^2 - x_i.x_j)``.
    The dissipative part is, for each ``i``,
    ``-theta sum_{k != i} [ v_k x (Gamma_k x_i / (4 pi R (R^2 - x_i.x_k)))
    + (x_i . v_k) Gamma_k (x_k x x_i) / (4 pi R (R^2 - x_i.x_k)^2) ]``
    where the inner sums over ``j`` are exactly the conservative ``v_k``.
    """
    if theta < 0:
        raise InputError(f"theta must be nonnegative, got {theta}")
    return _drift(c.positions, c.strengths, c.R, theta)


def _drift(x, g, R, theta):
    c4 = 4.0 * pi * R
    gap = _gaps(x, R)
    cr = np.cross(x[None, :, :], x[:, None, :])  # cr[i, j] = x_j x x_i
    v = np.einsum("j,ijd,ij->id", g, cr, 1.0 / gap) / c4
    if theta == 0.0:
        return v
    w = g[None, :] / (c4 * gap)  # w[i, k]
    t1 = np.einsum("ik,ikd->id", w, np.cross(v[None, :, :], x[:, None, :]))
    s = x @ v.T  # s[i, k] = x_i . v_k
    t2 = np.einsum("ik,ikd->id", s * g[None, :] / (c4 * gap**2), cr)
    return v - theta * (t1 + t2)


def vortex_momentum(x, strengths):
    """``M = sum_i Gamma_i x_i`` for one (N, 3) configuration."""
    return np.asarray(strengths, dtype=float) @ np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# spherical harmonics


def _legendre_q(lmax, z):
    """Polynomial parts ``Q_l^m(z)`` of ``P_l^m = (1-z^2)^{m/2} Q_l^m`` and their z-derivatives.

    No Condon-Shortley phase. Returns dicts keyed by ``(l, m)``.
    """
    Q, dQ = {}, {}
    one = np.ones_like(z)
    for m in range(lmax + 1):
        dfact = 1.0
        for k in range(1, 2 * m, 2):
            dfact *= k
        Q[m, m] = dfact * one
        dQ[m, m] = 0.0 * one
        if m + 1 <= lmax:
            Q[m + 1, m] = (2 * m + 1) * z * Q[m, m]
            dQ[m + 1, m] = (2 * m + 1) * (Q[m, m] + z * dQ[m, m])
        for l in range(m + 2, lmax + 1):
            Q[l, m] = ((2 * l - 1) * z * Q[l - 1, m] - (l + m - 1) * Q[l - 2, m]) / (l - m)
            dQ[l, m] = ((2 * l - 1) * (Q[l - 1, m] + z * dQ[l - 1, m]) - (l + m - 1) * dQ[l - 2, m]) / (l - m)
    return Q, dQ


def harmonic_modes(ell_max):
    """Ordered ``(l, m)`` pairs for ``1 <= l <= ell_max``, ``-l <= m <= l``."""
    return [(l, m) for l in range(1, ell_max + 1) for m in range(-l, l + 1)]


def _norm(l, m):
    m = abs(m)
    n = sqrt((2 * l + 1) / (4 * pi) * factorial(l - m) / factorial(l + m))
    return n if m == 0 else sqrt(2.0) * n


def real_harmonics(u, ell_max, with_grad=True):
    """Real orthonormal spherical harmonics on the unit sphere.

    Args:
        u: unit vectors, shape (..., 3).
        ell_max: largest degree.
        with_grad: also return surface gradients.

    Returns:
        ``Y`` of shape (..., n_modes) and, if requested, surface gradients of
        shape (..., n_modes, 3), mode order as in :func:`harmonic_modes`.
    """
    u = np.asarray(u, dtype=float)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    Q, dQ = _legendre_q(ell_max, z)
    # (x + i y)^m and its derivative m (x + i y)^(m-1)
    w = x + 1j * y
    powers = [np.ones_like(w)]
    for m in range(1, ell_max + 1):
        powers.append(powers[-1] * w)
    modes = harmonic_modes(ell_max)
    Y = np.empty(u.shape[:-1] + (len(modes),))
    G = np.empty(u.shape[:-1] + (len(modes), 3)) if with_grad else None
    for n, (l, m) in enumerate(modes):
        a = abs(m)
        c = _norm(l, m)
        pw = powers[a]
        trig = pw.real if m >= 0 else pw.imag
        Y[..., n] = c * Q[l, a] * trig
        if with_grad:
            if a == 0:
                dx = dy = np.zeros_like(z)
            else:
                d = a * powers[a - 1]
                dx = d.real if m >= 0 else d.imag
                dy = -d.imag if m >= 0 else d.real
            g = np.stack([c * Q[l, a] * dx, c * Q[l, a] * dy, c * dQ[l, a] * trig], axis=-1)
            # remove the normal component to get the surface gradient
            G[..., n, :] = g - np.sum(g * u, axis=-1)[..., None] * u
    return (Y, G) if with_grad else Y


@dataclass(frozen=True)
class HarmonicBasis:
    """Real spherical harmonics ``1 <= l <= ell_max`` on the sphere of radius ``R``.

    Harmonics are normalized over the radius-``R`` sphere, eigenvalues are
    ``lambda = l (l + 1) / R^2``.
    """

    ell_max: int = 3
    R: float = 1.0
    entries: tuple = field(init=False)

    def __post_init__(self):
        if int(self.ell_max) < 1:
            raise InputError("ell_max must be at least 1 (l = 0 generates no flow)")
        ent = tuple((l, m, l * (l + 1) / self.R**2) for l, m in harmonic_modes(int(self.ell_max)))
        object.__setattr__(self, "entries", ent)

    @property
    def n_modes(self):
        return len(self.entries)

    def values(self, x):
        """``Y_l^m(x)`` normalized on the radius-R sphere, shape (..., n_modes)."""
        u = np.asarray(x, dtype=float) / self.R
        return real_harmonics(u, self.ell_max, with_grad=False) / self.R

    def surface_gradients(self, x):
        """Surface gradients of the radius-R harmonics, shape (..., n_modes, 3)."""
        u = np.asarray(x, dtype=float) / self.R
        _, G = real_harmonics(u, self.ell_max)
        return G / self.R**2

    def noise_fields(self, x):
        """``lambda^{-1/2} (x/R) x grad_S Y`` for every mode, shape (..., n_modes, 3)."""
        x = np.asarray(x, dtype=float)
        u = x / self.R
        G = self.surface_gradients(x)
        lam = np.array([e[2] for e in self.entries])
        return np.cross(u[..., None, :], G) / np.sqrt(lam)[:, None]


def harmonic_noise_fields(b: HarmonicBasis, x, ell=None):
    """Noise fields at the point(s) ``x``.

    ``ell`` restricts to modes of one degree; ``ell = 0`` is rejected.
    """
    if ell is not None:
        if ell < 1 or ell > b.ell_max:
            raise InputError(f"degree {ell} is outside 1..{b.ell_max}")
        idx = [n for n, e in enumerate(b.entries) if e[0] == ell]
        return b.noise_fields(x)[..., idx, :]
    return b.noise_fields(x)


def sphere_quadrature(n, R=1.0):
    """Product Gauss-Legendre (in z) by uniform (in phi) rule on the sphere.

    Exact for polynomials of degree up to ``2n - 1`` in the Cartesian
    coordinates. Returns points (n * 2n, 3) on the radius-R sphere and area
    weights summing to ``4 pi R^2``.
    """
    z, wz = np.polynomial.legendre.leggauss(n)
    nphi = 2 * n
    phi = 2 * pi * np.arange(nphi) / nphi
    Z, P = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1 - Z**2)
    pts = np.stack([r * np.cos(P), r * np.sin(P), Z], axis=-1).reshape(-1, 3) * R
    w = (wz[:, None] * np.full(nphi, 2 * pi / nphi)[None, :]).ravel() * R**2
    return pts, w


def harmonic_gram(b: HarmonicBasis, n_quad=None):
    """Gram matrix ``int <f_a, f_b> dA`` of the noise fields by quadrature."""
    n = n_quad if n_quad is not None else 2 * b.ell_max + 4
    pts, w = sphere_quadrature(n, b.R)
    F = b.noise_fields(pts)  # (P, modes, 3)
    return np.einsum("p,pad,pbd->ab", w, F, F)


# ---------------------------------------------------------------------------
# system wrapper


@dataclass(frozen=True)
class PointVortexSystem(SystemBase):
    """Point vortices with harmonic transport noise, flattened (3N,) state."""

    R: float
    strengths: tuple
    sigma: float = 0.0
    theta: float = None
    beta: float = None
    ell_max: int = 3
    collision_eps: float = None
    label: str = "point_vortex"

    def __post_init__(self):
        theta, beta = resolve_theta(self.sigma, self.theta, self.beta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "strengths", tuple(float(v) for v in self.strengths))
        eps = COLLISION_REL_EPS * self.R**2 if self.collision_eps is None else self.collision_eps
        object.__setattr__(self, "collision_eps", float(eps))
        object.__setattr__(self, "_basis", HarmonicBasis(self.ell_max, self.R) if self.sigma > 0 else None)
        object.__setattr__(self, "_g", np.array(self.strengths))

    @property
    def n_vortices(self):
        return len(self.strengths)

    @property
    def dim(self):
        return 3 * self.n_vortices

    @property
    def n_noise(self):
        return self._basis.n_modes if self._basis is not None else 0

    def positions(self, x):
        return np.asarray(x, dtype=float).reshape(self.n_vortices, 3)

    def drift(self, x):
        p = self.positions(x)
        check_collisions(p, self.R, self.collision_eps)
        return _drift(p, self._g, self.R, self.theta).ravel()

    def fields(self, x):
        F = np.empty((self.dim, self.n_noise + 1))
        F[:, 0] = self.drift(x)
        if self.n_noise:
            nf = self._basis.noise_fields(self.positions(x))  # (N, modes, 3)
            F[:, 1:] = self.sigma * nf.transpose(0, 2, 1).reshape(self.dim, self.n_noise)
        return F

    def project(self, x):
        p = self.positions(x)
        p = p * (self.R / np.linalg.norm(p, axis=1))[:, None]
        return p.ravel()

    def diagnostics(self, states):
        states = np.asarray(states, dtype=float)
        out = {"h0": vortex_hamiltonian_batch(states, self._g, self.R)}
        M = np.einsum("i,tid->td", self._g, states.reshape(len(states), self.n_vortices, 3))
        out["M1"], out["M2"], out["M3"] = M[:, 0], M[:, 1], M[:, 2]
        return out

    def state_labels(self):
        return [f"x{i}_{c}" for i in range(self.n_vortices) for c in "xyz"]

    def describe(self):
        return {"system": self.label, "R": self.R, "strengths": list(self.strengths), "sigma": self.sigma,
                "theta": self.theta, "beta": self.beta, "ell_max": self.ell_max}


def octahedron_error(x, R=1.0):
    """Largest distance of the pairwise ``x_i.x_j / R^2`` from the set {0, -1}."""
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    d = (x @ x.T) / R**2
    iu = np.triu_indices(len(x), 1)
    v = d[iu]
    return float(np.max(np.minimum(np.abs(v), np.abs(v + 1.0)), initial=0.0))


def random_uniform_positions(n, R=1.0, rng=None):
    """``n`` iid uniform points on the sphere of radius ``R``."""
    rng = np.random.default_rng(rng)
    v = rng.normal(size=(n, 3))
    return R * v / np.linalg.norm(v, axis=1)[:, None]
