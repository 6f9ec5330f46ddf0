"""Fixed-step schemes, trajectory driver and ensemble runner.

Schemes:

``heun``
    Stratonovich Heun predictor-corrector on the full field matrix.
``ito_euler``
    Euler-Maruyama on the Ito form, drift plus ``0.5 sum (J f_i) f_i d[S^i]``.
``coadjoint``
    so(3) only. Each step is a rotation ``exp(ad*_Z)`` of the momentum, with
    the generator ``Z`` averaged Heun-style, so ``|Pi|`` is kept to rounding.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .dynamics import LiePoissonSystem, RigidBodyEnergy
from .errors import CollisionError, InputError, NumericalError, UnsupportedError
from .noise import DrivingPath, brownian_path

SCHEMES = ("heun", "ito_euler", "coadjoint")
WORKERS_ENV = "LPL_WORKERS"


@dataclass
class Trajectory:
    """States on the path grid plus diagnostics recomputed from them."""

    times: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.times) - 1

    def columns(self, labels=None):
        """Column names and a 2-D table ``t, states..., diagnostics...``."""
        labels = labels or [f"x{i}" for i in range(self.states.shape[1])]
        names = ["t"] + list(labels) + list(self.diagnostics)
        cols = [self.times[:, None], self.states] + [np.asarray(v)[:, None] for v in self.diagnostics.values()]
        return names, np.hstack(cols)

    def to_csv(self, filename, labels=None):
        """Write the trajectory with 17 significant digits."""
        names, table = self.columns(labels)
        with open(filename, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in table:
                w.writerow([f"{v:.17g}" for v in row])


# ---------------------------------------------------------------------------
# single steps


def heun_step(fields, x, dS, project=None):
    """One Stratonovich Heun step.

    Args:
        fields: callable ``x -> F`` (dim, M+1) or an object with
            ``apply_fields(x, dS)``.
        x: current state.
        dS: increments, column 0 the clock.
        project: optional post-step projection.
    """
    apply = _applier(fields)
    k1 = apply(x, dS)
    k2 = apply(x + k1, dS)
    y = x + 0.5 * (k1 + k2)
    return project(y) if project is not None else y


def ito_euler_step(drift_ito, diffusions, x, dS):
    """One Euler-Maruyama step ``x + a(x) dt + sum_i f_i(x) dW^i``.

    Args:
        drift_ito: callable returning the Ito drift per unit time.
        diffusions: callable returning the (dim, M) diffusion matrix.
    """
    y = x + drift_ito(x) * dS[0]
    if len(dS) > 1:
        y = y + diffusions(x) @ dS[1:]
    return y


def _applier(fields):
    if hasattr(fields, "apply_fields"):
        return fields.apply_fields
    return lambda x, dS: fields(x) @ dS


def _ito_step(system, x, dS, qv):
    return x + system.apply_fields(x, dS) + system.ito_drift(x, qv)


# ---------------------------------------------------------------------------
# coadjoint scheme on so(3)


@numba.njit(cache=True)
def _rodrigues_apply(w, v):
    """Apply ``exp([w]_x)`` to ``v`` (rotation by |w| about w)."""
    th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    th = np.sqrt(th2)
    if th < 1e-8:
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    c0 = w[1] * v[2] - w[2] * v[1]
    c1 = w[2] * v[0] - w[0] * v[2]
    c2 = w[0] * v[1] - w[1] * v[0]
    d0 = w[1] * c2 - w[2] * c1
    d1 = w[2] * c0 - w[0] * c2
    d2 = w[0] * c1 - w[1] * c0
    out = np.empty(3)
    out[0] = v[0] + a * c0 + b * d0
    out[1] = v[1] + a * c1 + b * d1
    out[2] = v[2] + a * c2 + b * d2
    return out


@numba.njit(cache=True)
def _generator(c, ginv, inv_inertia, xi, sigma, theta, mu, dS):
    """Rotation vector ``Z = zeta(mu) dt + sigma sum xi_i dW^i``.

    ``zeta = grad h + theta sharp(ad*_{grad h} mu)``.
    """
    g = mu * inv_inertia
    A = np.zeros((3, 3))
    for k in range(3):
        for i in range(3):
            for j in range(3):
                A[j, i] += c[k, i, j] * mu[k]
    w = A @ g
    z = (g + theta * (ginv @ w)) * dS[0]
    for m in range(xi.shape[0]):
        z = z + sigma * dS[m + 1] * xi[m]
    return z


@numba.njit(cache=True)
def _axis(c, z):
    """Vector ``a`` with ``ad*_z v = a x v`` for the so(3) structure ``c``."""
    M = np.zeros((3, 3))  # M[j, k] = sum_i c[k, i, j] z_i
    for k in range(3):
        for i in range(3):
            for j in range(3):
                M[j, k] += c[k, i, j] * z[i]
    out = np.empty(3)
    out[0] = M[2, 1]
    out[1] = M[0, 2]
    out[2] = M[1, 0]
    return out


@numba.njit(cache=True)
def _coadjoint_step_kernel(c, ginv, inv_inertia, xi, sigma, theta, mu, dS):
    z1 = _generator(c, ginv, inv_inertia, xi, sigma, theta, mu, dS)
    pred = _rodrigues_apply(_axis(c, z1), mu)
    z2 = _generator(c, ginv, inv_inertia, xi, sigma, theta, pred, dS)
    return _rodrigues_apply(_axis(c, 0.5 * (z1 + z2)), mu)


@numba.njit(cache=True)
def _coadjoint_loop(c, ginv, inv_inertia, xi, sigma, theta, mu0, inc):
    n = inc.shape[0]
    out = np.empty((n + 1, 3))
    out[0] = mu0
    mu = mu0.copy()
    for s in range(n):
        mu = _coadjoint_step_kernel(c, ginv, inv_inertia, xi, sigma, theta, mu, inc[s])
        if not (np.isfinite(mu[0]) and np.isfinite(mu[1]) and np.isfinite(mu[2])):
            return out, s
        out[s + 1] = mu
    return out, -1


def _coadjoint_args(system):
    if not isinstance(system, LiePoissonSystem) or system.structure.dim != 3:
        raise UnsupportedError("the coadjoint scheme needs a Lie-Poisson system on so(3)")
    c = system.structure.structure_constants
    if not np.allclose(np.abs(c), np.abs(_eps3())):
        raise UnsupportedError("the coadjoint scheme needs the so(3) structure constants")
    energy = getattr(system.grad_h0, "__self__", None)
    if not isinstance(energy, RigidBodyEnergy):
        raise UnsupportedError("the coadjoint scheme supports the rigid-body energy only")
    return (np.ascontiguousarray(c), np.ascontiguousarray(system.structure.gamma_inv),
            1.0 / np.asarray(energy.inertia, dtype=float), np.ascontiguousarray(system.noise_dirs),
            float(system.sigma), float(system.theta))


def _eps3():
    e = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        e[k, i, j] = 1.0
        e[k, j, i] = -1.0
    return e


def coadjoint_step_so3(system, Pi, dS):
    """One orbit-preserving step for an so(3) rigid-body system."""
    args = _coadjoint_args(system)
    return _coadjoint_step_kernel(*args, np.asarray(Pi, dtype=float), np.asarray(dS, dtype=float))


def rodrigues(w, v):
    """Rotate ``v`` by the rotation vector ``w``."""
    return _rodrigues_apply(np.asarray(w, dtype=float), np.asarray(v, dtype=float))


# ---------------------------------------------------------------------------
# trajectories


def integrate_trajectory(system, scheme, path: DrivingPath, x0, diagnostics=True, metadata=None):
    """Run ``scheme`` over every step of ``path`` starting at ``x0``.

    Raises:
        NumericalError: non-finite state; carries ``step`` and ``partial``.
        CollisionError: from vortex systems, with ``step`` and ``partial`` set.
    """
    if scheme not in SCHEMES:
        raise InputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.shape != (system.dim,):
        raise InputError(f"initial state must have length {system.dim}, got shape {x0.shape}")
    if path.n_noise != system.n_noise:
        raise InputError(f"path has {path.n_noise} noise components, system needs {system.n_noise}")
    inc = np.ascontiguousarray(path.increments)
    n = path.n_steps
    meta = {"scheme": scheme, "seed": path.seed, "traj": path.traj, "level": path.level,
            "n_steps": n, **system.describe()}
    if metadata:
        meta.update(metadata)

    if scheme == "coadjoint":
        args = _coadjoint_args(system)
        states, bad = _coadjoint_loop(*args, x0, inc)
        if bad >= 0:
            partial = _finish(system, path.times[: bad + 1], states[: bad + 1], diagnostics, meta)
            raise NumericalError(f"non-finite state at step {bad}", step=bad, partial=partial)
        return _finish(system, path.times, states, diagnostics, meta)

    states = np.empty((n + 1, system.dim))
    states[0] = x0
    x = x0
    qv = path.qv_increments
    for s in range(n):
        try:
            # overflow is reported below as a NumericalError
            with np.errstate(over="ignore", invalid="ignore"):
                if scheme == "heun":
                    y = heun_step(system, x, inc[s], system.project)
                else:
                    y = system.project(_ito_step(system, x, inc[s], qv[s]))
        except CollisionError as err:
            err.step = s
            err.partial = _finish(system, path.times[: s + 1], states[: s + 1], diagnostics, meta)
            raise
        if not np.all(np.isfinite(y)):
            partial = _finish(system, path.times[: s + 1], states[: s + 1], diagnostics, meta)
            raise NumericalError(f"non-finite state at step {s}", step=s, partial=partial)
        states[s + 1] = y
        x = y
    return _finish(system, path.times, states, diagnostics, meta)


def _finish(system, times, states, diagnostics, meta):
    with np.errstate(over="ignore", invalid="ignore"):
        diag = system.diagnostics(states) if diagnostics else {}
    return Trajectory(np.array(times), states, diag, dict(meta))


def n_steps_for(t0, t1, dt):
    """Number of uniform steps of size ``dt`` covering ``[t0, t1]``."""
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise InputError(f"need t_final > t0, got {t0}, {t1}")
    r = (t1 - t0) / dt
    n = int(round(r))
    if n < 1 or abs(r - n) > 1e-9 * max(1.0, r):
        raise InputError(f"(t_final - t0) / dt = {r} is not a whole number of steps")
    return n


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleResult:
    """Ensemble statistics in trajectory-index order.

    Attributes:
        times: common time grid.
        mean, var: per-observable time series over successful trajectories.
        terminal: (n_ok, dim) terminal states, ordered by trajectory index.
        indices: trajectory indices that succeeded.
        failures: index -> error message for failed trajectories.
        trajectories: the full trajectories when requested.
    """

    times: np.ndarray
    mean: dict
    var: dict
    terminal: np.ndarray
    indices: list
    failures: dict
    trajectories: list = None


def worker_count(default=1):
    """Worker count from the ``LPL_WORKERS`` variable (``max`` = all CPUs)."""
    v = os.environ.get(WORKERS_ENV, "").strip().lower()
    if not v:
        return default
    if v == "max":
        return os.cpu_count() or 1
    try:
        n = int(v)
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer or 'max', got {v!r}") from None
    if n < 1:
        raise InputError(f"{WORKERS_ENV} must be positive, got {n}")
    return n


def _run_one(task):
    system, scheme, idx, base_seed, t0, t1, n_steps, x0 = task
    path = brownian_path(system.n_noise, t0, t1, n_steps, base_seed, traj=idx)
    try:
        return idx, integrate_trajectory(system, scheme, path, x0), None
    except (NumericalError, CollisionError) as err:
        return idx, None, f"{type(err).__name__}: {err}"


def run_ensemble(system, scheme, n_traj, base_seed, t_final, dt, x0, observables=None, t0=0.0,
                 workers=None, keep=False):
    """Independent trajectories keyed by ``(base_seed, index)``.

    Results do not depend on ``workers``: each trajectory draws from its own
    streams and the reductions run in index order.

    Args:
        x0: one initial state shared by all members, or an (n_traj, dim) array.
        observables: diagnostic names to summarize, default all.
        workers: process count; ``None`` reads ``LPL_WORKERS``.
        keep: also return every trajectory.
    """
    if int(n_traj) < 1:
        raise InputError(f"n_traj must be positive, got {n_traj}")
    n_traj = int(n_traj)
    n_steps = n_steps_for(t0, t_final, dt)
    x0 = np.asarray(x0, dtype=float)
    starts = np.broadcast_to(x0, (n_traj, system.dim)) if x0.ndim == 1 else x0
    if starts.shape != (n_traj, system.dim):
        raise InputError(f"x0 must have shape ({system.dim},) or ({n_traj}, {system.dim})")
    tasks = [(system, scheme, i, base_seed, t0, t_final, n_steps, np.array(starts[i])) for i in range(n_traj)]
    workers = worker_count() if workers is None else int(workers)
    if workers <= 1 or n_traj == 1:
        results = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_traj)) as ex:
            results = list(ex.map(_run_one, tasks))
    results.sort(key=lambda r: r[0])
    ok = [(i, tr) for i, tr, e in results if tr is not None]
    failures = {i: e for i, tr, e in results if tr is None}
    times = ok[0][1].times if ok else None
    names = observables if observables is not None else (list(ok[0][1].diagnostics) if ok else [])
    mean, var = {}, {}
    for name in names:
        stack = np.vstack([tr.diagnostics[name] for _, tr in ok]) if ok else np.zeros((0, 0))
        # fixed-order reduction over trajectory index
        s = np.zeros(stack.shape[1])
        for row in stack:
            s = s + row
        m = s / len(stack)
        s2 = np.zeros(stack.shape[1])
        for row in stack:
            s2 = s2 + (row - m) ** 2
        mean[name] = m
        var[name] = s2 / max(len(stack) - 1, 1)
    terminal = np.array([tr.states[-1] for _, tr in ok]).reshape(len(ok), system.dim)
    return EnsembleResult(times, mean, var, terminal, [i for i, _ in ok], failures,
                          [tr for _, tr in ok] if keep else None)


def write_json(obj, filename):
    """Write JSON with a stable key order."""
    with open(filename, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
