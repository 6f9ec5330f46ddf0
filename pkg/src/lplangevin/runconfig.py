"""Run configurations: validation, system assembly and output writing.

A configuration is a JSON object::

    {
      "system": "rigid_body",
      "parameters": {"inertia": [1, 2, 3], "x0": [1, 1, 1]},
      "noise": {"sigma": 0.5, "beta": 1.0, "seed": 7, "dt": 0.01, "t_final": 10},
      "scheme": "heun",
      "outputs": {"trajectory_csv": "trajectory.csv", "summary_json": "summary.json",
                  "ensemble": 1}
    }

:func:`normalize_config` fills every default explicitly so that the echo
stored in the metadata sidecar reproduces the run bitwise.
"""

import copy
import json
import os
from dataclasses import dataclass

import numpy as np

from . import algebra
from .diagnostics import invariant_report
from .dynamics import (LiePoissonSystem, HarmonicPotential, heavy_top_system, magnetic_particle_system,
                       rigid_body_system)
from .errors import CollisionError, ConfigError, InputError, NumericalError
from .integrate import SCHEMES, Trajectory, integrate_trajectory, n_steps_for, run_ensemble, write_json
from .noise import brownian_path
from .sphere import PointVortexSystem, octahedron_error, random_uniform_positions

__version__ = "0.1.0"

SYSTEMS = ("rigid_body", "heavy_top", "magnetic_particle", "point_vortex", "custom_lie_poisson")
OCTAHEDRON_TOL = 0.02

_DEFAULTS = {
    "rigid_body": {"inertia": [1.0, 2.0, 3.0], "x0": [1.0, 1.0, 1.0], "convention": "left",
                   "noise_dirs": None},
    "heavy_top": {"inertia": [1.0, 2.0, 3.0], "mgl": 1.0, "chi": [0.0, 0.0, 1.0],
                  "x0": [1.0, 0.5, 0.2, 0.0, 0.6, 0.8], "xi": None, "grad_gamma": None, "gamma": None,
                  "renormalize": False},
    "magnetic_particle": {"m": 1.0, "k": 1.0, "B": [0.0, 0.0, 0.0], "charge": 1.0, "n_particles": 1,
                          "x0": None},
    "point_vortex": {"R": 1.0, "strengths": [1.0] * 6, "positions": None, "initial_seed": 0, "ell_max": 3,
                     "collision_eps": None},
    "custom_lie_poisson": {"structure_constants": None, "gamma": None, "energy_matrix": None,
                           "noise_dirs": None, "x0": None},
}


@dataclass(frozen=True)
class QuadraticEnergy:
    """``h0(mu) = 0.5 mu.Q mu`` with gradient ``Q mu``."""

    Q: tuple

    def value(self, mu):
        Q = np.asarray(self.Q)
        mu = np.asarray(mu, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", mu, Q, mu)

    def grad(self, mu):
        return np.asarray(mu, dtype=float) @ np.asarray(self.Q).T


def _number(v, name, positive=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}", field=name)
    v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"{name} must be finite", field=name)
    if positive and not v > 0:
        raise ConfigError(f"{name} must be positive, got {v}", field=name)
    return v


def _vector(v, name, length=None):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of numbers", field=name) from None
    if length is not None and a.shape != (length,):
        raise ConfigError(f"{name} must have length {length}, got shape {a.shape}", field=name)
    return a


def load_config(filename):
    """Read a config file, or the config echoed inside a metadata sidecar."""
    try:
        with open(filename) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{filename} is not valid JSON: {err}", field="<file>") from None
    if isinstance(data, dict) and "config" in data and "code_version" in data:
        data = data["config"]
    return data


def normalize_config(cfg):
    """Validate ``cfg`` and return a copy with every default filled in.

    Raises:
        ConfigError: with ``field`` naming the offending entry.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    cfg = copy.deepcopy(cfg)
    unknown = set(cfg) - {"system", "parameters", "noise", "scheme", "outputs"}
    if unknown:
        k = sorted(unknown)[0]
        raise ConfigError(f"unknown top-level key {k!r}", field=k)
    system = cfg.get("system")
    if system not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}, got {system!r}", field="system")

    params = dict(_DEFAULTS[system])
    given = cfg.get("parameters", {}) or {}
    if not isinstance(given, dict):
        raise ConfigError("parameters must be an object", field="parameters")
    for k, v in given.items():
        if k not in params:
            raise ConfigError(f"unknown parameter {k!r} for {system}", field=f"parameters.{k}")
        params[k] = v

    noise = cfg.get("noise")
    if not isinstance(noise, dict):
        raise ConfigError("noise section is required", field="noise")
    for k in noise:
        if k not in ("sigma", "beta", "theta", "seed", "dt", "t_final", "t0"):
            raise ConfigError(f"unknown noise key {k!r}", field=f"noise.{k}")
    for k in ("dt", "t_final"):
        if k not in noise:
            raise ConfigError(f"noise.{k} is required", field=f"noise.{k}")
    n = {
        "sigma": _number(noise.get("sigma", 0.0), "noise.sigma"),
        "beta": _number(noise.get("beta"), "noise.beta", allow_none=True),
        "theta": _number(noise.get("theta"), "noise.theta", allow_none=True),
        "seed": noise.get("seed", 0),
        "dt": _number(noise["dt"], "noise.dt", positive=True),
        "t_final": _number(noise["t_final"], "noise.t_final", positive=True),
        "t0": _number(noise.get("t0", 0.0), "noise.t0"),
    }
    if n["beta"] is None and n["theta"] is None:
        raise ConfigError("give noise.beta or noise.theta", field="noise.beta")
    if n["sigma"] < 0:
        raise ConfigError("noise.sigma must be nonnegative", field="noise.sigma")
    if not isinstance(n["seed"], int) or isinstance(n["seed"], bool) or not 0 <= n["seed"] < 2**64:
        raise ConfigError("noise.seed must be an integer in [0, 2^64)", field="noise.seed")
    try:
        n_steps_for(n["t0"], n["t_final"], n["dt"])
    except InputError as err:
        raise ConfigError(str(err), field="noise.dt") from None

    scheme = cfg.get("scheme", "heun")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}", field="scheme")

    out = {"trajectory_csv": "trajectory.csv", "summary_json": "summary.json",
           "metadata_json": "metadata.json", "ensemble": 1, "ensemble_csv": "ensemble.csv", "stride": 1}
    for k, v in (cfg.get("outputs") or {}).items():
        if k not in out:
            raise ConfigError(f"unknown output key {k!r}", field=f"outputs.{k}")
        out[k] = v
    for k in ("ensemble", "stride"):
        if not isinstance(out[k], int) or isinstance(out[k], bool) or out[k] < 1:
            raise ConfigError(f"outputs.{k} must be a positive integer", field=f"outputs.{k}")
    for k in ("trajectory_csv", "summary_json", "metadata_json", "ensemble_csv"):
        v = out[k]
        optional = k in ("trajectory_csv", "ensemble_csv")
        if (v is None and not optional) or (v is not None and (not isinstance(v, str) or os.path.isabs(v))):
            raise ConfigError(f"outputs.{k} must be a relative file name", field=f"outputs.{k}")

    norm = {"system": system, "parameters": params, "noise": n, "scheme": scheme, "outputs": out}
    build_system(norm)  # surfaces parameter errors now
    return norm


def _wrap(field_name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except InputError as err:
        raise ConfigError(str(err), field=field_name) from None


def build_system(cfg):
    """Return ``(system, x0)`` for a normalized config."""
    p, nz, kind = cfg["parameters"], cfg["noise"], cfg["system"]
    sig, th, be = nz["sigma"], nz["theta"], nz["beta"]
    if kind == "rigid_body":
        dirs = None if p["noise_dirs"] is None else _vector(p["noise_dirs"], "parameters.noise_dirs")
        s = _wrap("parameters", rigid_body_system, _vector(p["inertia"], "parameters.inertia", 3), sig, th, be,
                  p["convention"], dirs)
        x0 = _vector(p["x0"], "parameters.x0", 3)
    elif kind == "heavy_top":
        x0 = _vector(p["x0"], "parameters.x0", 6)
        s = _wrap("parameters", heavy_top_system, _vector(p["inertia"], "parameters.inertia", 3),
                  _number(p["mgl"], "parameters.mgl"), _vector(p["chi"], "parameters.chi", 3), sig, th, be,
                  p["xi"], p["grad_gamma"], p["gamma"], bool(p["renormalize"]), float(np.linalg.norm(x0[3:6])))
    elif kind == "magnetic_particle":
        npart = p["n_particles"]
        if not isinstance(npart, int) or npart < 1:
            raise ConfigError("parameters.n_particles must be a positive integer", field="parameters.n_particles")
        k = _number(p["k"], "parameters.k")
        s = _wrap("parameters", magnetic_particle_system, _number(p["m"], "parameters.m", positive=True),
                  HarmonicPotential(k), _vector(p["B"], "parameters.B", 3), None,
                  _number(p["charge"], "parameters.charge"), sig, th, be, npart)
        x0 = np.zeros(s.dim) if p["x0"] is None else _vector(p["x0"], "parameters.x0", s.dim)
    elif kind == "point_vortex":
        g = _vector(p["strengths"], "parameters.strengths")
        if g.ndim != 1 or g.size < 1:
            raise ConfigError("parameters.strengths must be a nonempty list", field="parameters.strengths")
        R = _number(p["R"], "parameters.R", positive=True)
        s = _wrap("parameters", PointVortexSystem, R, tuple(g.tolist()), sig, th, be, int(p["ell_max"]),
                  p["collision_eps"])
        if p["positions"] is not None:
            x0 = _vector(p["positions"], "parameters.positions").ravel()
            if x0.shape != (s.dim,):
                raise ConfigError(f"parameters.positions must hold {g.size} points", field="parameters.positions")
        else:
            x0 = random_uniform_positions(g.size, R, int(p["initial_seed"])).ravel()
    else:
        for k in ("structure_constants", "gamma", "energy_matrix", "noise_dirs", "x0"):
            if p[k] is None:
                raise ConfigError(f"parameters.{k} is required for custom_lie_poisson", field=f"parameters.{k}")
        c = _vector(p["structure_constants"], "parameters.structure_constants")
        if c.ndim != 3:
            raise ConfigError("structure_constants must be a rank-3 array", field="parameters.structure_constants")
        d = c.shape[0]
        st = _wrap("parameters.structure_constants", algebra.LieStructure, d, c,
                   _vector(p["gamma"], "parameters.gamma"), (), "custom")
        Q = _vector(p["energy_matrix"], "parameters.energy_matrix")
        if Q.shape != (d, d):
            raise ConfigError(f"energy_matrix must be {d}x{d}", field="parameters.energy_matrix")
        e = QuadraticEnergy(tuple(map(tuple, Q.tolist())))
        s = _wrap("parameters.noise_dirs", LiePoissonSystem, st, e.grad,
                  _vector(p["noise_dirs"], "parameters.noise_dirs"), sig, th, be, e.value)
        x0 = _vector(p["x0"], "parameters.x0", d)
    return s, x0


# ---------------------------------------------------------------------------
# execution


def _summary(system, traj, cfg):
    rep = invariant_report(traj, sigma=cfg["noise"]["sigma"])
    out = {"status": "ok", "n_steps": traj.n_steps, "final_time": float(traj.times[-1]),
           "final_state": traj.states[-1].tolist(), "invariants": rep}
    if "h0" in traj.diagnostics:
        h = traj.diagnostics["h0"]
        out["energy"] = {"initial": float(h[0]), "final": float(h[-1]), "min": float(h.min()),
                         "max": float(h.max())}
    if cfg["system"] == "point_vortex" and cfg["noise"]["sigma"] == 0 and system.theta > 0:
        dh = np.diff(traj.diagnostics["h0"])
        err = octahedron_error(traj.states[-1], system.R)
        out["relaxation"] = {"h0_strictly_decreasing": bool(np.all(dh < 0)),
                          "h0_nonincreasing": bool(np.all(dh <= 1e-12 * abs(traj.diagnostics["h0"][0]))),
                          "octahedron_error": err, "octahedron_ok": bool(err <= OCTAHEDRON_TOL)}
    return out


def _write_traj(traj, system, filename, stride):
    if stride > 1:
        idx = np.arange(0, len(traj.times), stride)
        if idx[-1] != len(traj.times) - 1:
            idx = np.append(idx, len(traj.times) - 1)
        traj = Trajectory(traj.times[idx], traj.states[idx], {k: v[idx] for k, v in traj.diagnostics.items()},
                          traj.metadata)
    traj.to_csv(filename, system.state_labels())


def _member_name(name, i, n):
    if n == 1:
        return name
    stem, ext = os.path.splitext(name)
    return f"{stem}_{i:03d}{ext}"


def metadata_record(cfg, system):
    """Sidecar content; holds no paths, hosts or times so reruns compare bitwise."""
    n = cfg["outputs"]["ensemble"]
    return {"code_version": __version__, "config": cfg, "system": system.describe(),
            "scheme": cfg["scheme"], "scheme_origin": "discretization chosen by this library",
            "seeds": [{"seed": cfg["noise"]["seed"], "traj": i} for i in range(n)]}


def execute(cfg, out_dir, workers=None):
    """Run a normalized config, writing outputs into ``out_dir``.

    Returns:
        (exit_code, summary). Exit code 0 on success, 3 when any trajectory
        failed; partial outputs are then written and flagged in the summary.
    """
    os.makedirs(out_dir, exist_ok=True)
    system, x0 = build_system(cfg)
    nz, out = cfg["noise"], cfg["outputs"]
    n_steps = n_steps_for(nz["t0"], nz["t_final"], nz["dt"])
    n_traj = out["ensemble"]
    path_of = lambda name: os.path.join(out_dir, name)  # noqa: E731
    write_json(metadata_record(cfg, system), path_of(out["metadata_json"]))

    if n_traj == 1:
        path = brownian_path(system.n_noise, nz["t0"], nz["t_final"], n_steps, nz["seed"], traj=0)
        try:
            traj = integrate_trajectory(system, cfg["scheme"], path, x0)
        except (NumericalError, CollisionError) as err:
            summary = {"status": "failed", "partial": True, "error": f"{type(err).__name__}: {err}",
                       "step": err.step}
            if err.partial is not None and out["trajectory_csv"]:
                _write_traj(err.partial, system, path_of(out["trajectory_csv"]), out["stride"])
            write_json(summary, path_of(out["summary_json"]))
            return 3, summary
        if out["trajectory_csv"]:
            _write_traj(traj, system, path_of(out["trajectory_csv"]), out["stride"])
        summary = _summary(system, traj, cfg)
        write_json(summary, path_of(out["summary_json"]))
        return 0, summary

    res = run_ensemble(system, cfg["scheme"], n_traj, nz["seed"], nz["t_final"], nz["dt"], x0, t0=nz["t0"],
                       workers=workers, keep=True)
    members = []
    for i, traj in zip(res.indices, res.trajectories):
        if out["trajectory_csv"]:
            _write_traj(traj, system, path_of(_member_name(out["trajectory_csv"], i, n_traj)), out["stride"])
        members.append({"index": i, **_summary(system, traj, cfg)})
    ens = {"n": n_traj, "succeeded": res.indices, "failures": {str(k): v for k, v in res.failures.items()},
           "terminal_mean": res.terminal.mean(axis=0).tolist() if len(res.indices) else None,
           "observables": {k: {"mean_initial": float(m[0]), "mean_final": float(m[-1]),
                               "var_final": float(res.var[k][-1]),
                               "max_mean_rel_drift": float(np.max(np.abs(m - m[0])) / (abs(m[0]) or 1.0))}
                           for k, m in res.mean.items()}}
    if out["ensemble_csv"] and res.indices:
        names = ["t"] + [f"{k}_{w}" for k in res.mean for w in ("mean", "var")]
        table = np.column_stack([res.times] + [c for k in res.mean for c in (res.mean[k], res.var[k])])
        with open(path_of(out["ensemble_csv"]), "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in table:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    status = "ok" if not res.failures else "failed"
    summary = {"status": status, "partial": bool(res.failures), "ensemble": ens, "members": members}
    write_json(summary, path_of(out["summary_json"]))
    return (0 if not res.failures else 3), summary
