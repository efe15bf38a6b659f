"""Command-line runner: config-driven computations with reproducible outputs.

Every run writes a manifest (the fully resolved configuration) next to its
result tables, and reruns with the same config and seed are byte-identical,
including under worker parallelism: cells are computed by index and
assembled in order, never as they complete.

Exit codes: 0 success, 2 configuration error (nothing written), 3 a solver
failed to converge (partial results are kept), 4 I/O failure.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .bands import classify, dispersion
from .config import ENV_PREFIX, RunConfig, load_config
from .errors import ConfigError, ConvergenceError
from .fockspace import ed_ground_state, ed_moment_set
from .gaussian import gaussian_moment_set, solve_gaussian
from .gp import build_problem, gp_moment_set, imaginary_time_ground_state, save_field
from .io import ensure_dir, write_csv, write_json
from .metrics import build_report
from .params import effective_coefficients

REPORT_COLUMNS = ("xi_x", "xi_dcz_min", "theta_dcz", "xi_uv_min", "theta_uv",
                  "rho_m1", "rho_0", "rho_p1")


def _report_for_point(cfg, params, seed):
    """One squeezing report at a parameter point, on the configured backend."""
    if cfg.backend == "ed":
        coeffs = effective_coefficients(params)
        state = ed_ground_state(coeffs, params.N)
        moments = ed_moment_set(state)
        extras = {"backend": "ed", "ground_energy": state.energy}
    elif cfg.backend == "gaussian":
        coeffs = effective_coefficients(params)
        sol = solve_gaussian(coeffs, params.N)
        moments = gaussian_moment_set(sol)
        extras = {"backend": "gaussian",
                  "energy_per_atom": sol.energy_per_atom,
                  "mode_frequencies": list(sol.frequencies)}
    elif cfg.backend == "gp":
        problem = build_problem(params, cfg.trap, cfg.interaction, cfg.grid)
        s = cfg.solver
        result = imaginary_time_ground_state(
            problem, dt=s["dt"], tol=s["tol"], max_steps=s["max_steps"],
            check_every=s["check_every"], seed=seed,
        )
        n_atoms = cfg.interaction.N if cfg.interaction is not None else params.N
        moments = gp_moment_set(result.field, n_atoms)
        extras = {"backend": "gp", "moment_method": "hartree_product",
                  "gp_energy_per_atom": result.energy, "gp_steps": result.n_steps}
        return build_report(moments, extras=extras), result
    else:
        raise ConfigError(f"backend {cfg.backend!r} cannot produce squeezing reports")
    return build_report(moments, extras=extras), None


def _sweep_cell(task):
    """Worker for one sweep cell; returns (index, row dict | error dict)."""
    cfg, index, value = task
    params = cfg.params.replace(**{cfg.sweep.name: value})
    try:
        report, _ = _report_for_point(cfg, params, seed=cfg.seed + index)
        return index, {"report": report.to_dict()}
    except (ConfigError, ConvergenceError) as exc:
        return index, {"error": f"{type(exc).__name__}: {exc}"}


def _classify_cell(task):
    cfg, index, v1, v2 = task
    params = cfg.params.replace(**{cfg.axis1.name: v1, cfg.axis2.name: v2})
    cell = classify(params, tol_deg=cfg.tol_deg, window=cfg.window, n_points=cfg.n_points)
    return index, (v1, v2, cell.n_minima, int(cell.degenerate), cell.E_min, cell.k_min)


def _map_ordered(worker, tasks, jobs):
    """Run tasks through the same worker inline or in processes; order by index."""
    if jobs <= 1:
        results = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, tasks))
    results.sort(key=lambda pair: pair[0])
    return [payload for _, payload in results]


def _write_manifest(cfg):
    manifest = cfg.resolved()
    manifest["version"] = __version__
    write_json(os.path.join(cfg.out, "manifest.json"), manifest)


def _run_dispersion(cfg):
    disp = dispersion(cfg.params, window=cfg.window, n_points=cfg.n_points)
    ensure_dir(cfg.out)
    _write_manifest(cfg)
    rows = [(float(k), float(e[0]), float(e[1]), float(e[2]))
            for k, e in zip(disp.k, disp.energies)]
    write_csv(os.path.join(cfg.out, "dispersion.csv"), ("k", "E1", "E2", "E3"), rows)
    write_json(os.path.join(cfg.out, "minima.json"), {
        "n_minima": disp.n_minima,
        "k_min": [float(v) for v in disp.minima_k],
        "E_min": [float(v) for v in disp.minima_E],
    })
    return 0


def _run_phase_diagram(cfg):
    tasks = []
    index = 0
    for v1 in cfg.axis1.values:
        for v2 in cfg.axis2.values:
            tasks.append((cfg, index, float(v1), float(v2)))
            index += 1
    rows = _map_ordered(_classify_cell, tasks, cfg.jobs)
    ensure_dir(cfg.out)
    _write_manifest(cfg)
    header = (cfg.axis1.name, cfg.axis2.name, "n_minima", "degenerate", "E_min", "k_min")
    write_csv(os.path.join(cfg.out, "phase_diagram.csv"), header, rows)
    return 0


def _run_eff_squeeze(cfg):
    if cfg.backend == "gp":
        raise ConfigError("eff-squeeze runs on the ed/gaussian backends; use gp-ground")
    report, _ = _report_for_point(cfg, cfg.params, seed=cfg.seed)
    ensure_dir(cfg.out)
    _write_manifest(cfg)
    write_json(os.path.join(cfg.out, "report.json"), report.to_dict())
    return 0


def _run_gp_ground(cfg):
    gp_cfg = RunConfig(**{**cfg.__dict__, "backend": "gp"})
    # build first: configuration problems must surface before anything is written
    build_problem(gp_cfg.params, gp_cfg.trap, gp_cfg.interaction, gp_cfg.grid)
    ensure_dir(cfg.out)
    _write_manifest(gp_cfg)
    try:
        report, result = _report_for_point(gp_cfg, gp_cfg.params, seed=gp_cfg.seed)
    except ConvergenceError as exc:
        write_json(os.path.join(cfg.out, "error.json"),
                   {"error": f"{type(exc).__name__}: {exc}"})
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    write_json(os.path.join(cfg.out, "report.json"), report.to_dict())
    save_field(result.field, os.path.join(cfg.out, "field.npz"),
               meta={"seed": gp_cfg.seed})
    trace_rows = [(int(s), float(e)) for s, e in result.energy_trace]
    write_csv(os.path.join(cfg.out, "energy_trace.csv"), ("step", "energy"), trace_rows)
    return 0


def _run_sweep(cfg):
    if cfg.command == "sweep" and cfg.backend == "gp":
        # surface grid/trap problems before creating any files
        build_problem(cfg.params, cfg.trap, cfg.interaction, cfg.grid)
    tasks = [(cfg, i, float(v)) for i, v in enumerate(cfg.sweep.values)]
    payloads = _map_ordered(_sweep_cell, tasks, cfg.jobs)
    ensure_dir(cfg.out)
    _write_manifest(cfg)
    rows, errors = [], {}
    for i, (value, payload) in enumerate(zip(cfg.sweep.values, payloads)):
        if "error" in payload:
            errors[str(i)] = payload["error"]
            rows.append((float(value),) + tuple(float("nan") for _ in REPORT_COLUMNS)
                        + ("failed",))
            continue
        rep = payload["report"]
        write_json(os.path.join(cfg.out, f"report_{i:03d}.json"), rep)
        rows.append((float(value),) + tuple(float(rep[c]) for c in REPORT_COLUMNS) + ("ok",))
    header = (cfg.sweep.name,) + REPORT_COLUMNS + ("status",)
    write_csv(os.path.join(cfg.out, "sweep.csv"), header, rows)
    if errors:
        write_json(os.path.join(cfg.out, "errors.json"), errors)
        for i in sorted(errors, key=int):
            print(f"sweep cell {i} failed: {errors[i]}", file=sys.stderr)
        return 3
    return 0


_RUNNERS = {
    "dispersion": _run_dispersion,
    "phase-diagram": _run_phase_diagram,
    "eff-squeeze": _run_eff_squeeze,
    "gp-ground": _run_gp_ground,
    "sweep": _run_sweep,
}


def run(cfg):
    """Execute a resolved RunConfig; returns the process exit code."""
    return _RUNNERS[cfg.command](cfg)


def emit_plot_data(input_path, out_dir=None):
    """Derive plot-friendly series files from a result table.

    Sweep tables produce one two-column file per metric; phase diagrams
    produce a matrix file of minima counts; dispersion tables produce one
    series per branch.  Returns the list of written paths.
    """
    if not os.path.isfile(input_path):
        raise OSError(f"no such result table: {input_path!r}")
    out_dir = out_dir or (os.path.dirname(os.path.abspath(input_path)) or ".")
    ensure_dir(out_dir)
    with open(input_path, "r", newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"{input_path!r} is empty")
    header = lines[0].split(",")
    body = [ln.split(",") for ln in lines[1:]]
    written = []

    def emit(name, hdr, rows):
        path = os.path.join(out_dir, name)
        write_csv(path, hdr, rows)
        written.append(path)

    if header[:2] == ["k", "E1"]:
        for j, branch in enumerate(("E1", "E2", "E3"), start=1):
            emit(f"series_band_{branch}.csv", ("k", branch),
                 [(float(r[0]), float(r[j])) for r in body])
    elif "n_minima" in header:
        i_min = header.index("n_minima")
        v1 = sorted({float(r[0]) for r in body})
        v2 = sorted({float(r[1]) for r in body})
        grid = {(float(r[0]), float(r[1])): int(r[i_min]) for r in body}
        rows = [(a,) + tuple(grid[(a, b)] for b in v2) for a in v1]
        hdr = (f"{header[0]}\\{header[1]}",) + tuple(f"{b:.17g}" for b in v2)
        emit("matrix_n_minima.csv", hdr, rows)
    elif len(header) > 1 and header[1] in REPORT_COLUMNS:
        status = header.index("status") if "status" in header else None
        for j, col in enumerate(header[1:], start=1):
            if col == "status":
                continue
            rows = [(float(r[0]), float(r[j])) for r in body
                    if status is None or r[status] == "ok"]
            emit(f"series_{col}.csv", (header[0], col), rows)
    else:
        raise ConfigError(f"unrecognized result table layout: {header}")
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="socsqueeze",
        description="Spin-1 SOC band structure, spin squeezing, and GP ground states",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    runp = sub.add_parser("run", help="execute a config-driven computation")
    runp.add_argument("--config", required=True, help="INI run configuration")
    runp.add_argument("--jobs", type=int, default=None,
                      help=f"worker processes (or {ENV_PREFIX}JOBS)")
    runp.add_argument("--out", default=None, help=f"output directory (or {ENV_PREFIX}OUT)")
    runp.add_argument("--seed", type=int, default=None, help=f"RNG seed (or {ENV_PREFIX}SEED)")
    runp.add_argument("--backend", default=None,
                      help=f"ed | gaussian | gp (or {ENV_PREFIX}BACKEND)")

    plotp = sub.add_parser("plot-data", help="emit plot series from a result table")
    plotp.add_argument("table", help="result CSV produced by a run")
    plotp.add_argument("--out", default=None, help="series output directory")

    args = parser.parse_args(argv)
    try:
        if args.subcommand == "run":
            overrides = {"jobs": args.jobs, "out": args.out,
                         "seed": args.seed, "backend": args.backend}
            cfg = load_config(args.config, overrides=overrides)
            return run(cfg)
        emit_plot_data(args.table, args.out)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
