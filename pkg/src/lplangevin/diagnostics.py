"""Invariant monitors and Gibbs-measure checks."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import EfficiencyError, InputError, UnsupportedError

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class GibbsSpec:
    """Gibbs measure ``exp(-beta h0)`` on a coadjoint orbit.

    Attributes:
        beta: inverse temperature, nonnegative.
        h0: energy; must accept a single state or a stack of states.
        orbit: descriptor dict. Supported kinds:
            ``{"kind": "sphere", "radius": r}`` for so(3) momenta,
            ``{"kind": "vortex", "R": R, "n": N}`` for point vortices,
            ``{"kind": "heavy_top", "gamma_sq": a, "pi_dot_gamma": b}``.
    """

    beta: float
    h0: Callable
    orbit: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.beta < 0:
            raise InputError(f"beta must be nonnegative, got {self.beta}")
        if self.orbit.get("kind") not in ("sphere", "vortex", "heavy_top"):
            raise InputError(f"unknown orbit kind {self.orbit.get('kind')!r}")


def orbit_defect(spec: GibbsSpec, state):
    """Relative distance of ``state`` from the declared orbit."""
    x = np.asarray(state, dtype=float)
    o = spec.orbit
    if o["kind"] == "sphere":
        r = float(o["radius"])
        return abs(np.linalg.norm(x) - r) / r
    if o["kind"] == "vortex":
        R = float(o["R"])
        p = x.reshape(-1, 3)
        return float(np.max(np.abs(np.linalg.norm(p, axis=1) - R))) / R
    a, b = float(o["gamma_sq"]), float(o["pi_dot_gamma"])
    da = abs(x[3:6] @ x[3:6] - a) / max(abs(a), 1.0)
    db = abs(x[0:3] @ x[3:6] - b) / max(abs(b), 1.0)
    return max(da, db)


def gibbs_log_density(spec: GibbsSpec, state, tol=1e-8):
    """Unnormalized log density ``-beta h0(state)`` on the orbit."""
    d = orbit_defect(spec, state)
    if d > tol:
        raise InputError(f"state is off the orbit (relative defect {d:.3e})")
    if spec.beta == 0:
        return 0.0
    return -spec.beta * float(spec.h0(np.asarray(state, dtype=float)))


def _uniform_orbit(spec, rng, n):
    o = spec.orbit
    if o["kind"] == "sphere":
        v = rng.standard_normal((n, 3))
        return float(o["radius"]) * v / np.linalg.norm(v, axis=1)[:, None]
    if o["kind"] == "vortex":
        N = int(o["n"])
        v = rng.standard_normal((n, N, 3))
        v = float(o["R"]) * v / np.linalg.norm(v, axis=2)[:, :, None]
        return v.reshape(n, 3 * N)
    raise UnsupportedError("uniform sampling is only available for sphere and vortex orbits")


def _fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + 5**0.5) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def estimate_h_min(spec: GibbsSpec, seed=0, n_grid=4000):
    """Coarse grid minimum of ``h0`` on the orbit, refined locally."""
    o = spec.orbit
    if o["kind"] == "sphere":
        r = float(o["radius"])
        pts = r * _fibonacci_sphere(n_grid)

        def lift(a):
            th, ph = a
            return r * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    elif o["kind"] == "vortex":
        N, R = int(o["n"]), float(o["R"])
        pts = _uniform_orbit(spec, np.random.Generator(np.random.Philox(seed)), n_grid)

        def lift(a):
            p = a.reshape(N, 3)
            return (R * p / np.linalg.norm(p, axis=1)[:, None]).ravel()

    else:
        raise UnsupportedError("h_min estimation needs a sphere or vortex orbit")
    h = np.asarray(spec.h0(pts), dtype=float)
    k = int(np.argmin(h))
    best = float(h[k])
    if o["kind"] == "sphere":
        x = pts[k] / r
        a0 = np.array([np.arccos(np.clip(x[2], -1, 1)), np.arctan2(x[1], x[0])])
    else:
        a0 = pts[k].copy()
    res = optimize.minimize(lambda a: float(spec.h0(lift(a))), a0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    return min(best, float(res.fun))


def orbit_rejection_sampler(spec: GibbsSpec, n, seed, h_min=None, batch=None):
    """Exact samples of the Gibbs measure by rejection from the uniform orbit measure.

    Proposals are accepted with probability ``exp(-beta (h0 - h_min))``. If a
    proposal undercuts ``h_min`` the estimate is lowered and sampling
    restarts, so the returned samples never use an acceptance ratio above 1.

    Raises:
        EfficiencyError: acceptance rate below 1e-4.
    """
    if n < 1:
        raise InputError("n must be positive")
    hmin = estimate_h_min(spec, seed) if h_min is None else float(h_min)
    batch = batch or max(4 * n, 10000)
    while True:
        rng = np.random.Generator(np.random.Philox(seed))
        out, total, restart = [], 0, False
        while sum(len(o) for o in out) < n:
            prop = _uniform_orbit(spec, rng, batch)
            h = np.asarray(spec.h0(prop), dtype=float)
            if h.min() < hmin:
                hmin = float(h.min())
                restart = True
                break
            u = rng.random(batch)
            acc = u < np.exp(-spec.beta * (h - hmin))
            out.append(prop[acc])
            total += batch
            rate = sum(len(o) for o in out) / total
            if rate < MIN_ACCEPTANCE:
                raise EfficiencyError(f"acceptance rate {rate:.2e} is too low; try a smaller beta")
        if not restart:
            return np.concatenate(out)[:n]


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise InputError("both samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical_value(n, m, alpha=0.01):
    """Asymptotic two-sample KS critical value at level ``alpha``."""
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    return float(c * np.sqrt((n + m) / (n * m)))


def autocorrelation(x):
    """Normalized autocorrelation via FFT, lags ``0 .. n-1``."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    f = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(f * np.conj(f))[:n]
    return ac / ac[0] if ac[0] > 0 else np.zeros(n)


def effective_sample_size(x):
    """``n / (1 + 2 sum rho_k)`` summed until the first negative pair sum."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    rho = autocorrelation(x)
    s = 0.0
    # Geyer initial positive sequence on pairs (rho_{2k} + rho_{2k+1}), k >= 1
    for k in range(1, n // 2):
        pair = rho[2 * k - 1] + rho[2 * k]
        if pair <= 0:
            break
        s += pair
    return float(n / (1.0 + 2.0 * s))


def subsample(values, burn_in=0.2, stride=100):
    """Drop the first ``burn_in`` fraction, then keep every ``stride``-th value."""
    v = np.asarray(values)
    start = int(np.ceil(burn_in * len(v)))
    return v[start::stride]


def refinement_slope(dts, errors):
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    dts = np.asarray(dts, dtype=float)
    err = np.asarray(errors, dtype=float)
    if np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(dts), np.log(err), 1)[0])


def invariant_report(traj, invariants=None, energy="h0", sigma=None, tol=1e-12):
    """Drift of recorded invariants and the energy monotonicity verdict.

    Args:
        traj: a Trajectory with recorded diagnostics.
        invariants: names to report, default every diagnostic except energy.
        sigma: noise amplitude; when 0 the energy is checked for monotone
            decrease with tolerance ``tol * |h0(0)|``. Defaults to the value
            stored in the trajectory metadata.
    """
    diag = traj.diagnostics
    names = invariants if invariants is not None else [k for k in diag if k != energy]
    T = float(traj.times[-1] - traj.times[0]) if len(traj.times) > 1 else 0.0
    rep = {"invariants": {}}
    for name in names:
        v = np.asarray(diag[name], dtype=float)
        ref = abs(v[0]) if v[0] != 0 else 1.0
        drift = float(np.max(np.abs(v - v[0]))) / ref
        rep["invariants"][name] = {
            "max_rel_drift": drift,
            "drift_per_unit_time": drift / T if T > 0 else 0.0,
        }
    if len(traj.times) > 1:
        rep["dt"] = float(traj.times[1] - traj.times[0])
    sig = traj.metadata.get("sigma") if sigma is None else sigma
    if energy in diag and sig == 0:
        h = np.asarray(diag[energy], dtype=float)
        dh = np.diff(h)
        lim = tol * abs(h[0])
        rep["energy_monotone"] = bool(np.all(dh <= lim))
        rep["energy_max_increase"] = float(dh.max()) if dh.size else 0.0
        rep["energy_strictly_decreasing"] = bool(np.all(dh < 0))
    return rep
