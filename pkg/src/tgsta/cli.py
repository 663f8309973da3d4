"""Command-line entry point: ``tgsta <subcommand> [--config PATH] [--set KEY=VALUE ...]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .config import load_config
from .dynamics import ground_orbitals, ground_state_mf, orbital_energy, mf_energy
from .errors import ConfigError, ConvergenceError, MonitorTrip
from .grid import write_field_csv
from .metrics import count_maxima, density_mf, density_overlap, density_tg, tf_density
from .ramps import write_ramp_csv

log = logging.getLogger("tgsta")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_MONITOR = 0, 2, 3, 4

# preset used when --config is absent
DEFAULT_PRESET = {
    "ground": "fig1", "ramps": "fig1", "densities": "fig1", "evolve": None,
    "fig2": "fig2", "fig3": "fig3", "fig4": "fig4", "fig5": "fig5", "converge": "fig2",
}


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    if args.out is not None:
        out["out"] = args.out
    if args.threads is not None:
        out["threads"] = args.threads
    if args.dt is not None:
        out["dt"] = args.dt
    if args.grid is not None:
        out["grid"] = args.grid
    return out


def _config(args):
    path = args.config if args.config is not None else DEFAULT_PRESET[args.command]
    cfg = load_config(path, _overrides(args))
    if args.command == "evolve" and args.config is None:
        cfg.scenario = "custom"
    return cfg


def cmd_ground(cfg, args):
    grid = cfg.make_grid()
    omega_sq = cfg.omegaf_sq if args.final else cfg.omega0_sq
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mf = ground_state_mf(grid, cfg.N, omega_sq, cfg.gamma)
    orb = ground_orbitals(grid, cfg.N, omega_sq, cfg.gamma)
    common = {"N": cfg.N, "gamma": cfg.gamma, "omega_sq": omega_sq}
    write_field_csv(out / "ground_mf.csv", mf.field, {"model": "mf", **common})
    rho = density_tg(orb).values
    with (out / "ground_tg.csv").open("w") as fh:
        for key, val in {"model": "tg", **common}.items():
            fh.write(f"# {key}: {val}\n")
        fh.write("x,density\n")
        np.savetxt(fh, np.column_stack([grid.x, rho]), delimiter=",", fmt="%.17g")
    meta = {**common, "mf_energy": mf_energy(mf, omega_sq=omega_sq, gamma=cfg.gamma),
            "tg_energy": orbital_energy(orb, omega_sq, cfg.gamma),
            "orbital_energies": orb.energies, "grid": grid.to_dict(),
            "code_version": __version__}
    (out / "ground.json").write_text(json.dumps(meta, indent=2, default=experiments._json_default) + "\n")
    return [out / "ground_mf.csv", out / "ground_tg.csv"]


def cmd_ramps(cfg, args):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    gammas = cfg.gamma_values or [cfg.gamma]
    written, rows = [], []
    for g in gammas:
        for t in cfg.t_f:
            trap = cfg.trap(t, g)
            for name in cfg.ramps:
                try:
                    sched = experiments.build_ramp(name, trap, cfg.N, cfg)
                except ConfigError as exc:
                    log.warning("skipping ramp %s at gamma=%g: %s", name, g, exc)
                    continue
                label = experiments.ramp_label(name)
                path = out / f"ramp_{label}_g{g:g}_tf{t:g}.csv"
                write_ramp_csv(path, sched, args.samples)
                written.append(path)
                rows.append({"file": path.name, "ramp_kind": label, **sched.metadata(),
                             "min_omega_sq": float(np.min(sched.sample(args.samples)["omega_sq"]))})
    experiments.write_rows(out / "ramps.csv", rows) if rows else None
    experiments.write_metadata(out / "ramps.json", cfg, "ramps", rows)
    return written


def cmd_densities(cfg, args):
    grid = cfg.make_grid()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    gammas = cfg.gamma_values or [cfg.gamma]
    cols, names, summary = [grid.x], ["x"], []
    for g in gammas:
        rho_mf = density_mf(ground_state_mf(grid, cfg.N, cfg.omega0_sq, g))
        rho_tg = density_tg(ground_orbitals(grid, cfg.N, cfg.omega0_sq, g))
        rho_tf = tf_density(grid, cfg.N, cfg.omega0_sq, g)
        cols += [rho_mf.values, rho_tg.values, rho_tf.values]
        names += [f"rho_mf_g{g:g}", f"rho_tg_g{g:g}", f"rho_tf_g{g:g}"]
        summary.append({"gamma": g, "N": cfg.N, "overlap_mf_tg": density_overlap(rho_mf, rho_tg),
                        "overlap_tf_tg": density_overlap(rho_tf, rho_tg),
                        "maxima_tg": count_maxima(rho_tg), "maxima_mf": count_maxima(rho_mf)})
    path = out / "densities.csv"
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
               header=",".join(names), comments="")
    experiments.write_metadata(out / "densities.json", cfg, "densities", summary,
                               {"summary": summary})
    return [path]


def _runner(name):
    def run(cfg, args):
        result = experiments.SCENARIO_RUNNERS[name](cfg)
        return result
    return run


def cmd_converge(cfg, args):
    rows = experiments.run_convergence(cfg)
    return rows


COMMANDS = {
    "ground": (cmd_ground, "ground states (mean field and orbitals) in the initial or final trap"),
    "ramps": (cmd_ramps, "export omega^2(t) schedules for each t_f and ramp kind"),
    "densities": (cmd_densities, "MF, TG and Thomas-Fermi ground-state densities"),
    "evolve": (_runner("custom"), "evolve both models along the configured ramps"),
    "fig2": (_runner("fig2"), "harmonic STA vs reference ramp sweep over t_f"),
    "fig3": (_runner("fig3"), "ansatz integrals versus N and gamma with fitted slopes"),
    "fig4": (_runner("fig4"), "anharmonic TF / Gaussian / reference fidelity sweep over t_f"),
    "fig5": (_runner("fig5"), "fidelity versus N"),
    "converge": (cmd_converge, "grid and time-step refinement study"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgsta", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="YAML config file or preset name (fig1..fig5)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--dt", type=float, help="fixed time step (default: automatic)")
        p.add_argument("--grid", help="XMIN,XMAX,N")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key; repeatable")
        if name == "ground":
            p.add_argument("--final", action="store_true", help="use the final trap frequency")
        if name == "ramps":
            p.add_argument("--samples", type=int, default=1001, help="time samples per ramp")
    return parser


def _join_grid(argv):
    # "--grid -16,16,512" would otherwise be read as an unknown option
    argv = list(sys.argv[1:] if argv is None else argv)
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--grid" and i + 1 < len(argv):
            out.append(f"--grid={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_grid(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = _config(args)
        t0 = time.perf_counter()
        result = func(cfg, args)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except MonitorTrip as exc:
        print(f"resolution monitor tripped: {exc}", file=sys.stderr)
        return EXIT_MONITOR
    if args.command == "converge" and not all(r["pass"] for r in result):
        print("convergence study: some checks exceed tolerance", file=sys.stderr)
        for r in result:
            print(f"  {r['point']:10s} {r['quantity']:20s} "
                  f"ddt={r['delta_dt']:.2e} dgrid={r['delta_grid']:.2e} "
                  f"{'PASS' if r['pass'] else 'FAIL'}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"wrote results to {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
