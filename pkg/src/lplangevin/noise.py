"""Discretized driving paths with counter-based random increments.

Every Gaussian draw is addressed by ``(seed, trajectory, component, level,
step)`` through a Philox counter generator, so any increment can be
regenerated in isolation and ensembles do not depend on worker scheduling.
Component 0 of a path is always the clock.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, UnsupportedError

CLOCK = "clock"
BROWNIAN = "brownian"
DATA = "data"

_MAX_TRAJ = 2**32
_MAX_COMPONENT = 2**24
_MAX_LEVEL = 2**8


def stream_key(seed, traj, component, level):
    """Two 64-bit Philox key words for one random stream."""
    if not (0 <= traj < _MAX_TRAJ):
        raise InputError(f"trajectory index out of range: {traj}")
    if not (0 <= component < _MAX_COMPONENT):
        raise InputError(f"component index out of range: {component}")
    if not (0 <= level < _MAX_LEVEL):
        raise InputError(f"refinement level out of range: {level}")
    k0 = int(seed) % 2**64
    k1 = (int(traj) << 32) | (int(component) << 8) | int(level)
    return np.array([k0, k1], dtype=np.uint64)


def standard_normals(seed, traj, component, level, n, start=0):
    """Standard normals for steps ``start .. start+n-1`` of one stream.

    Step ``s`` uses Philox block ``s``: its first two 64-bit words become two
    uniforms that are turned into one normal by Box-Muller.
    """
    if n == 0:
        return np.zeros(0)
    key = stream_key(seed, traj, component, level)
    bg = np.random.Philox(key=key, counter=np.array([start, 0, 0, 0], dtype=np.uint64))
    raw = bg.random_raw(4 * n).reshape(n, 4)
    scale = 2.0**-53
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * scale  # (0, 1]
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * scale  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class DrivingPath:
    """Increments of a driving semimartingale on a fixed grid.

    Attributes:
        times: grid ``t_0 < ... < t_N``.
        increments: array (N, M+1); column 0 is the clock.
        qv_increments: quadratic-variation increments, same shape.
        seed: base seed of the random streams.
        traj: trajectory index used in the stream keys.
        level: number of refinements applied to the base path.
        kinds: per-component kind, ``clock``, ``brownian`` or ``data``.
    """

    times: np.ndarray
    increments: np.ndarray
    qv_increments: np.ndarray
    seed: int = 0
    traj: int = 0
    level: int = 0
    kinds: tuple = ()

    @property
    def n_steps(self):
        return self.increments.shape[0]

    @property
    def n_noise(self):
        return self.increments.shape[1] - 1

    @property
    def dt(self):
        return np.diff(self.times)

    def levels(self):
        """Cumulative path values ``S(t_n)``, starting from zero."""
        out = np.zeros((self.n_steps + 1, self.increments.shape[1]))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


def brownian_path(n_noise, t0, t1, n_steps, seed, traj=0):
    """Clock plus ``n_noise`` independent Brownian components.

    Args:
        n_noise: number of Brownian components (the clock is extra).
        t0, t1: time interval.
        n_steps: number of uniform steps.
        seed: base seed.
        traj: trajectory index, distinct trajectories get independent streams.
    """
    if int(n_steps) < 1:
        raise InputError(f"n_steps must be positive, got {n_steps}")
    if n_noise < 0:
        raise InputError(f"n_noise must be nonnegative, got {n_noise}")
    if not t1 > t0:
        raise InputError(f"need t1 > t0, got t0={t0}, t1={t1}")
    n_steps = int(n_steps)
    times = t0 + (t1 - t0) * np.arange(n_steps + 1) / n_steps
    times[-1] = t1
    dt = np.diff(times)
    inc = np.empty((n_steps, n_noise + 1))
    inc[:, 0] = dt
    sq = np.sqrt(dt)
    for i in range(1, n_noise + 1):
        inc[:, i] = sq * standard_normals(seed, traj, i, 0, n_steps)
    qv = np.empty_like(inc)
    qv[:, 0] = 0.0
    qv[:, 1:] = dt[:, None]
    kinds = (CLOCK,) + (BROWNIAN,) * n_noise
    return DrivingPath(times, inc, qv, int(seed), int(traj), 0, kinds)


def refine(path: DrivingPath):
    """Halve every step by Brownian-bridge sampling of the midpoints.

    The two half increments of each coarse step sum to the coarse increment,
    so schemes run on ``path`` and ``refine(path)`` see the same Brownian path.
    """
    for k in path.kinds[1:]:
        if k != BROWNIAN:
            raise UnsupportedError(f"cannot refine a path with a {k!r} component")
    n = path.n_steps
    level = path.level + 1
    times = np.empty(2 * n + 1)
    times[0::2] = path.times
    times[1::2] = 0.5 * (path.times[:-1] + path.times[1:])
    dt = np.diff(times)
    inc = np.empty((2 * n, path.increments.shape[1]))
    inc[:, 0] = dt
    coarse_dt = np.diff(path.times)
    for i in range(1, path.increments.shape[1]):
        z = standard_normals(path.seed, path.traj, i, level, n)
        dw = path.increments[:, i]
        first = 0.5 * dw + 0.5 * np.sqrt(coarse_dt) * z
        inc[0::2, i] = first
        inc[1::2, i] = dw - first
    qv = np.empty_like(inc)
    qv[:, 0] = 0.0
    qv[:, 1:] = dt[:, None]
    return DrivingPath(times, inc, qv, path.seed, path.traj, level, path.kinds)


def clock_path(t0, t1, n_steps):
    """Path with the clock only (deterministic runs)."""
    return brownian_path(0, t0, t1, n_steps, 0)


def scaled_noise(path: DrivingPath, mask):
    """Copy of ``path`` with Brownian components multiplied by ``mask``."""
    mask = np.asarray(mask, dtype=float)
    inc = path.increments.copy()
    inc[:, 1:] *= mask
    qv = path.qv_increments.copy()
    qv[:, 1:] *= mask**2
    return replace(path, increments=inc, qv_increments=qv)


def save_path_csv(path: DrivingPath, filename):
    """Write ``t, S1..SM`` levels with 17 significant digits."""
    lv = path.levels()
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"S{i}" for i in range(1, lv.shape[1])])
        for t, row in zip(path.times, lv):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row[1:]])


def load_path_csv(filename):
    """Read a level table written by :func:`save_path_csv` or by hand.

    Loaded components are tagged ``data``; their quadratic variation is the
    realized one (squared increments).
    """
    with open(filename, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0].strip() != "t":
        raise InputError("first column of a path file must be 't'")
    arr = np.array([[float(v) for v in r] for r in body if r])
    if arr.shape[0] < 2:
        raise InputError("path file needs at least two rows")
    times = arr[:, 0]
    if np.any(np.diff(times) <= 0):
        raise InputError("path times must be strictly increasing")
    inc = np.diff(arr, axis=0)
    qv = inc**2
    qv[:, 0] = 0.0
    kinds = (CLOCK,) + (DATA,) * (arr.shape[1] - 1)
    return DrivingPath(times, inc, qv, 0, 0, 0, kinds)
