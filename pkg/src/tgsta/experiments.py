"""Sweeps reproducing the figure scenarios, plus the grid / time-step refinement study.

Every runner returns its rows and writes ``<name>.csv`` with a
``<name>.json`` metadata file next to it. Rows are computed as independent
trajectories, optionally on a thread pool, and always emitted in job order.
"""
from __future__ import annotations

import csv
import json
import math
import platform
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ansatz import Ansatz, gaussian_integrals, tf_integrals
from .config import RunConfig
from .dynamics import (Model, evolve_mf, evolve_orbitals, ground_orbitals, ground_state_mf,
                       time_step, SnapshotWriter)
from .errors import ConfigError, ConvergenceError, MonitorTrip
from .grid import make_grid
from .metrics import density_mf, density_overlap, density_tg, many_body_fidelity
from .ramps import RampSchedule, TrapSpec, make_ramp

SUMMARY_COLUMNS = ["t_f", "N", "gamma", "omegaf_sq", "ramp_kind", "ansatz",
                   "density_overlap", "fidelity", "density_overlap_mf",
                   "gram_error", "dt", "n_steps", "status"]

TOLERANCES = {
    "convergence_fig2_fidelity": 1e-4,
    "convergence_fig4_fidelity": 1e-3,
    "monitor_threshold": 1e-8,
}


class GroundStateCache:
    """Thread-safe memo of ground states keyed by (grid, N, omega^2, gamma)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._store = {}
        self._key_locks = {}

    def _get(self, key, build):
        with self._lock:
            if key in self._store:
                return self._store[key]
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            with self._lock:
                if key in self._store:
                    return self._store[key]
            value = build()
            with self._lock:
                self._store[key] = value
            return value

    def orbitals(self, grid, N, omega_sq, gamma):
        key = ("tg", grid.x_min, grid.x_max, grid.n_points, int(N), omega_sq, gamma)
        return self._get(key, lambda: ground_orbitals(grid, N, omega_sq, gamma))

    def mean_field(self, grid, N, omega_sq, gamma):
        key = ("mf", grid.x_min, grid.x_max, grid.n_points, float(N), omega_sq, gamma)
        return self._get(key, lambda: ground_state_mf(grid, N, omega_sq, gamma))


def ramp_label(name: str) -> str:
    key = name.lower()
    return {"ermakov": "sta", "g": "gaussian", "reference": "ref"}.get(key, key)


def build_ramp(name: str, trap: TrapSpec, N: float, config: RunConfig) -> RampSchedule:
    label = ramp_label(name)
    if label == "ref":
        return make_ramp("ref", trap, N=None if trap.gamma == 0 else N,
                         ansatz=config.reference_ansatz)
    return make_ramp(label, trap, N=N, ansatz=config.ansatz)


def _ansatz_column(schedule: RampSchedule) -> str:
    return schedule.integrals.ansatz.value if schedule.integrals is not None else ""


def run_trajectory(config: RunConfig, grid, cache: GroundStateCache, N: int, gamma: float,
                   t_f: float, ramp: str, models=("tg", "mf"), dt: dict | None = None,
                   snapshot_dir: Path | None = None) -> dict:
    """One ramp, one duration: evolve the requested models and score them against fresh targets."""
    row = {"t_f": t_f, "N": N, "gamma": gamma, "omegaf_sq": config.omegaf_sq,
           "ramp_kind": ramp_label(ramp), "ansatz": "", "density_overlap": math.nan,
           "fidelity": math.nan, "density_overlap_mf": math.nan, "gram_error": math.nan,
           "dt": math.nan, "n_steps": 0, "status": "ok"}
    dt = dt or {}
    try:
        trap = config.trap(t_f, gamma)
        schedule = build_ramp(ramp, trap, N, config)
        row["ansatz"] = _ansatz_column(schedule)
        if "tg" in models:
            start = cache.orbitals(grid, N, config.omega0_sq, gamma)
            target = cache.orbitals(grid, N, config.omegaf_sq, gamma)
            stats = {}
            snap = _snapshot(snapshot_dir, config, "tg", row, grid, schedule)
            final = evolve_orbitals(start, schedule, dt=dt.get("tg", config.dt), stats=stats,
                                    snapshot=snap, snapshot_every=config.snapshot_every)
            row["fidelity"] = many_body_fidelity(final, target)
            row["density_overlap"] = density_overlap(density_tg(final), density_tg(target))
            row["gram_error"] = final.gram_error()
            row["dt"], row["n_steps"] = stats["dt"], stats["n_steps"]
        if "mf" in models:
            start = cache.mean_field(grid, N, config.omega0_sq, gamma)
            target = cache.mean_field(grid, N, config.omegaf_sq, gamma)
            snap = _snapshot(snapshot_dir, config, "mf", row, grid, schedule)
            final = evolve_mf(start, schedule, dt=dt.get("mf", config.dt),
                              snapshot=snap, snapshot_every=config.snapshot_every)
            row["density_overlap_mf"] = density_overlap(density_mf(final), density_mf(target))
    except MonitorTrip as exc:
        row["status"] = f"monitor: {exc}"
    except ConvergenceError as exc:
        row["status"] = f"convergence: {exc}"
    except ConfigError as exc:
        row["status"] = f"config: {exc}"
    return row


def _snapshot(snapshot_dir, config, model, row, grid, schedule):
    if snapshot_dir is None or not config.snapshot_every:
        return None
    name = f"snap_{model}_{row['ramp_kind']}_N{row['N']}_g{row['gamma']:g}_tf{row['t_f']:.6g}.csv"
    meta = {"model": model, "schedule": schedule.kind.value, "ramp": row["ramp_kind"],
            "t_f": row["t_f"], "grid": f"{grid.x_min},{grid.x_max},{grid.n_points}",
            "dt": config.dt if config.dt else "policy"}
    return SnapshotWriter(Path(snapshot_dir) / name, grid, meta)


def run_jobs(jobs, threads: int = 1):
    """Evaluate zero-argument callables, returning results in job order."""
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def sweep(config: RunConfig, points, models, snapshot_dir=None) -> list[dict]:
    """points: iterable of (N, gamma, t_f, ramp)."""
    grid = config.make_grid()
    cache = GroundStateCache()
    jobs = [
        (lambda p=p: run_trajectory(config, grid, cache, p[0], p[1], p[2], p[3], models,
                                    snapshot_dir=snapshot_dir))
        for p in points
    ]
    return run_jobs(jobs, config.threads)


# ---------------------------------------------------------------- output

def write_rows(path: Path, rows: list[dict], columns: list[str] | None = None):
    columns = columns or list(rows[0].keys()) if rows else (columns or [])
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    return path


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_metadata(path: Path, config: RunConfig, name: str, rows: list[dict], extra=None):
    meta = {
        "scenario": config.scenario,
        "output": name,
        "config": config.to_dict(),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "tolerances": TOLERANCES,
        "rows": len(rows),
        "failures": sum(1 for r in rows if r.get("status", "ok") != "ok"),
    }
    meta.update(extra or {})
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def save(config: RunConfig, name: str, rows: list[dict], columns=None, extra=None) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_rows(out / f"{name}.csv", rows, columns)
    write_metadata(out / f"{name}.json", config, name, rows, extra)
    return csv_path


# ---------------------------------------------------------------- scenarios

def run_fig2(config: RunConfig, write: bool = True) -> list[dict]:
    if config.gamma != 0:
        raise ConfigError("fig2 is the harmonic scenario; set gamma = 0")
    points = [(config.N, 0.0, t, r) for t in config.t_f for r in config.ramps]
    rows = sweep(config, points, config.models)
    if write:
        save(config, "fig2", rows, SUMMARY_COLUMNS)
    return rows


def run_fig4(config: RunConfig, write: bool = True) -> list[dict]:
    gammas = config.gamma_values or [config.gamma]
    points = [(config.N, g, t, r) for g in gammas for t in config.t_f for r in config.ramps]
    rows = sweep(config, points, [m for m in config.models if m == "tg"] or ["tg"])
    if write:
        save(config, "fig4", rows, SUMMARY_COLUMNS)
    return rows


def run_fig5(config: RunConfig, write: bool = True) -> list[dict]:
    Ns = config.N_values or [config.N]
    points = [(n, config.gamma, t, r) for t in config.t_f for n in Ns for r in config.ramps]
    rows = sweep(config, points, ["tg"])
    if write:
        save(config, "fig5", rows, SUMMARY_COLUMNS)
    return rows


def run_custom(config: RunConfig, write: bool = True) -> list[dict]:
    Ns = config.N_values or [config.N]
    gammas = config.gamma_values or [config.gamma]
    points = [(n, g, t, r) for g in gammas for n in Ns for t in config.t_f for r in config.ramps]
    out = Path(config.out)
    snapshot_dir = None
    if config.snapshot_every:
        out.mkdir(parents=True, exist_ok=True)
        snapshot_dir = out
    rows = sweep(config, points, config.models, snapshot_dir=snapshot_dir)
    if write:
        save(config, "evolve", rows, SUMMARY_COLUMNS)
    return rows


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))), 1)[0])


def integral_table(Ns, gamma: float, ansatz) -> list[dict]:
    ansatz = Ansatz.parse(ansatz)
    fn = gaussian_integrals if ansatz is Ansatz.GAUSSIAN else tf_integrals
    rows = []
    for n in Ns:
        I = fn(n, gamma)
        rows.append({"ansatz": ansatz.value, "N": n, "gamma": gamma, "mu": I.mu,
                     "W": I.W, "F": I.F, "J": I.J, "K": I.K})
    return rows


def integral_slopes(rows: list[dict]) -> dict:
    Ns = [r["N"] for r in rows]
    return {name: loglog_slope(Ns, [r[name] for r in rows]) for name in ("W", "F", "J", "K")}


def run_fig3(config: RunConfig, write: bool = True) -> dict:
    Ns = config.N_values or list(range(2, 31))
    gammas = config.gamma_values or [0.0, 0.25, 0.5, 1.0]
    by_N = integral_table(Ns, config.gamma, "gaussian") + integral_table(Ns, config.gamma, "tf")
    by_gamma = []
    for g in gammas:
        by_gamma += integral_table([config.N], g, "tf")
    slopes = []
    for ansatz, gamma in (("gaussian", config.gamma), ("tf", config.gamma), ("tf", 0.0)):
        s = integral_slopes(integral_table(Ns, gamma, ansatz))
        slopes.append({"ansatz": Ansatz.parse(ansatz).value, "gamma": gamma,
                       "N_min": min(Ns), "N_max": max(Ns), **{f"slope_{k}": v for k, v in s.items()}})
    if write:
        save(config, "fig3_vs_N", by_N)
        save(config, "fig3_vs_gamma", by_gamma)
        save(config, "fig3_slopes", slopes)
    return {"by_N": by_N, "by_gamma": by_gamma, "slopes": slopes}


def run_convergence(config: RunConfig, write: bool = True, points=None) -> list[dict]:
    """Refinement study: each point is recomputed with n -> 2n and with dt -> dt/2.

    Default points are the harmonic STA at t_f = 1 (N = 10) and the
    Thomas-Fermi STA at gamma = 0.25, t_f = 1 (N = 30).
    """
    if points is None:
        points = [
            {"name": "fig2_sta", "N": 10, "gamma": 0.0, "t_f": 1.0, "ramp": "sta",
             "models": ("tg", "mf"), "tol": TOLERANCES["convergence_fig2_fidelity"]},
            {"name": "fig4_tf", "N": 30, "gamma": 0.25, "t_f": 1.0, "ramp": "tf",
             "models": ("tg",), "tol": TOLERANCES["convergence_fig4_fidelity"]},
        ]
    base_grid = config.make_grid()
    fine_grid = make_grid(base_grid.x_min, base_grid.x_max, 2 * base_grid.n_points)
    rows = []
    for pt in points:
        cache = GroundStateCache()
        trap = config.trap(pt["t_f"], pt["gamma"])
        schedule = build_ramp(pt["ramp"], trap, pt["N"], config)
        policy = {}
        if "tg" in pt["models"]:
            orb = cache.orbitals(base_grid, pt["N"], config.omega0_sq, pt["gamma"])
            policy["tg"] = time_step(schedule, base_grid, orb.values, Model.SINGLE_PARTICLE)
        if "mf" in pt["models"]:
            mf = cache.mean_field(base_grid, pt["N"], config.omega0_sq, pt["gamma"])
            policy["mf"] = time_step(schedule, base_grid, mf.values, Model.QUINTIC)
        base = run_trajectory(config, base_grid, cache, pt["N"], pt["gamma"], pt["t_f"],
                              pt["ramp"], pt["models"], dt=policy)
        half = run_trajectory(config, base_grid, cache, pt["N"], pt["gamma"], pt["t_f"],
                              pt["ramp"], pt["models"], dt={k: v / 2 for k, v in policy.items()})
        fine = run_trajectory(config, fine_grid, GroundStateCache(), pt["N"], pt["gamma"],
                              pt["t_f"], pt["ramp"], pt["models"])
        for quantity in ("fidelity", "density_overlap", "density_overlap_mf"):
            if quantity == "density_overlap_mf" and "mf" not in pt["models"]:
                continue
            d_dt = abs(half[quantity] - base[quantity])
            d_grid = abs(fine[quantity] - base[quantity])
            ok = bool(d_dt < pt["tol"] and d_grid < pt["tol"])
            rows.append({"point": pt["name"], "quantity": quantity, "base": base[quantity],
                         "dt_half": half[quantity], "grid_double": fine[quantity],
                         "delta_dt": d_dt, "delta_grid": d_grid, "tolerance": pt["tol"],
                         "pass": ok})
        # ramps are analytic in t and never see the grid
        again = build_ramp(pt["ramp"], trap, pt["N"], config)
        ts = np.linspace(0.0, pt["t_f"], 257)
        same = bool(np.array_equal(schedule.omega_sq(ts), again.omega_sq(ts)))
        rows.append({"point": pt["name"], "quantity": "ramp_omega_sq", "base": 0.0,
                     "dt_half": 0.0, "grid_double": 0.0, "delta_dt": 0.0, "delta_grid": 0.0,
                     "tolerance": 0.0, "pass": same})
    if write:
        save(config, "convergence", rows)
    return rows


SCENARIO_RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "custom": run_custom,
}
