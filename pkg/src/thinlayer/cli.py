"""Command line entry point: ``thinlayer run <config.json> --out <dir>``.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .analysis.convergence import Geometry, convergence_study, outer_l1
from .analysis.fit import estimate_effective_mobility
from .analysis.oracle import SteadyOracle, compare_with_oracle, solve_steady_oracle
from .config import RunConfig, parse_config
from .effective import run_effective
from .errors import ConfigError, SolverError, ThinLayerError
from .full import interface_records, run_full
from .fv import Trajectory
from .mesh import Region, build_effective_mesh, build_full_mesh
from .model import Case

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
REGION_NAMES = {int(Region.D1): "D1", int(Region.MEMBRANE): "membrane", int(Region.D3): "D3"}


def fmt(x: float) -> str:
    return "%.17g" % x


def to_json(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits (non-finite as null)."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{to_json(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return {None: "null", True: "true", False: "false"}[None if obj is None else bool(obj)]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj)) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _profile_lines(traj: Trajectory, names) -> list[str]:
    mesh = traj.mesh
    regions = [REGION_NAMES[int(r)] for r in mesh.regions]
    xs = [fmt(x) for x in mesh.centers]
    lines = ["time,x,population,phi,region"]
    for t, phi in zip(traj.times, traj.states):
        ts = fmt(t)
        for n, name in enumerate(names):
            row = phi[n]
            lines.extend(f"{ts},{xs[c]},{name},{fmt(row[c])},{regions[c]}" for c in range(mesh.n_cells))
    return lines


def _interface_lines(traj: Trajectory, names) -> list[str]:
    lines = ["time,population,flux,jump_phi,jump_stress"]
    for rec in interface_records(traj):
        ts = fmt(rec["time"])
        for n, name in enumerate(names):
            lines.append(
                f"{ts},{name},{fmt(rec['flux'][n])},{fmt(rec['jump_phi'][n])},{fmt(rec['jump_stress'][n])}"
            )
    return lines


def _trajectory_diagnostics(traj: Trajectory) -> dict:
    mesh = traj.mesh
    masses = []
    for t, phi in zip(traj.times, traj.states):
        entry = {"time": t, "total": analysis.total_mass(phi, mesh)}
        for region in Region:
            if mesh.mask(region).any():
                entry[REGION_NAMES[int(region)]] = analysis.total_mass(phi, mesh, region)
        masses.append(entry)
    out = {
        "masses": masses,
        "mass_balance_residual": analysis.mass_balance_residual(traj) if len(traj.states) > 1 else None,
        "dt": traj.dt_summary(),
        "max_total_volume_fraction": traj.max_total,
        "phi_max_exceeded_steps": traj.phi_max_exceeded,
    }
    if traj.steady is not None:
        out["steady"] = traj.steady
    return out


def _write(out: Path, name: str, text: str) -> None:
    with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def _full_mesh(cfg: RunConfig, eps: float | None = None):
    g = cfg.geometry
    return build_full_mesh(g.L, g.x_m, g.epsilon if eps is None else eps, g.n1, g.n2, g.n3)


def _eff_mesh(cfg: RunConfig):
    g = cfg.geometry
    return build_effective_mesh(g.L, g.x_m, g.n1, g.n3)


def _run(cfg: RunConfig, mesh, model=None, reference_times=None) -> Trajectory:
    tc = cfg.time
    model = model or cfg.model
    kw = dict(cfl=tc.cfl, dt_max=tc.dt_max, boundary=cfg.boundary, times=reference_times)
    if mesh.is_effective:
        return run_effective(model, mesh, cfg.initial_state(mesh), tc.t_end, cfg.partition, tc.output_every, **kw)
    return run_full(model, mesh, cfg.initial_state(mesh), tc.t_end, tc.output_every, **kw)


def _mode_results(cfg: RunConfig, threads: int):
    """Run the configured mode; returns ``(primary trajectory, extra files, mode diagnostics)``."""
    names = [p.name for p in cfg.model.populations]
    extra: dict[str, list[str]] = {}
    diag: dict = {}
    mode = cfg.mode
    if mode == "full":
        return _run(cfg, _full_mesh(cfg)), extra, diag
    if mode == "effective":
        return _run(cfg, _eff_mesh(cfg)), extra, diag
    if mode == "compare":
        full = _run(cfg, _full_mesh(cfg))
        eff = _run(cfg, _eff_mesh(cfg))
        extra["profiles_full.csv"] = _profile_lines(full, names)
        extra["interface_full.csv"] = _interface_lines(full, names)
        rows = []
        for t, pf, pe in zip(eff.times, full.states, eff.states):
            e1, e3 = outer_l1(pf, full.mesh, pe, eff.mesh)
            rows.append({"time": t, "L1_error_D1": e1, "L1_error_D3": e3, "L1_error_total": e1 + e3})
        diag["compare"] = {"epsilon": cfg.geometry.epsilon, "rows": rows, "full": _trajectory_diagnostics(full)}
        return eff, extra, diag
    if mode == "convergence":
        g = cfg.geometry
        table = convergence_study(
            cfg.model, Geometry(g.L, g.x_m, g.n1, g.n2, g.n3), cfg.initial_state, cfg.convergence.epsilons,
            cfg.time.t_end, cfg.partition, cfl=cfg.time.cfl, dt_max=cfg.time.dt_max, boundary=cfg.boundary,
            workers=threads,
        )
        diag["convergence"] = {"rows": table.to_dict(), "monotone": table.monotone().tolist()}
        return _run(cfg, _eff_mesh(cfg)), extra, diag
    if mode == "fit":
        f = cfg.fit
        ref_mesh = _full_mesh(cfg) if f.reference == "full" else _eff_mesh(cfg)
        reference = _run(cfg, ref_mesh)
        truth = cfg.model.mu_tilde()
        if f.start is not None:
            start = np.array(f.start)
        else:
            start = np.array([truth[n] if iv is None else math.sqrt(iv[0] * iv[1]) for n, iv in enumerate(f.intervals)])
        result = estimate_effective_mobility(
            reference, cfg.model.with_mu_tilde(start), f.intervals, cfg.partition, n_grid=f.n_grid, tol=f.tol,
            max_iter=f.max_iter, sweeps=f.sweeps, cfl=cfg.time.cfl, dt_max=cfg.time.dt_max, boundary=cfg.boundary,
        )
        report = result.to_dict()
        report["reference_mu_tilde"] = truth.tolist()
        report["relative_error"] = (np.abs(result.mu_tilde - truth) / truth).tolist()
        report["start"] = start.tolist()
        diag["fit"] = report
        fitted = _run(cfg, _eff_mesh(cfg), cfg.model.with_mu_tilde(result.mu_tilde), reference.times)
        return fitted, extra, diag
    # oracle
    pop, g = cfg.model.populations[0], cfg.geometry
    oracle = SteadyOracle(g.L, g.x_m, cfg.boundary.left[0], cfg.boundary.right[0],
                          pop.mu1, pop.mu3, pop.mu_tilde_13, pop.p_law.k)
    sol = solve_steady_oracle(oracle)
    rows, last = [], None
    for n in cfg.oracle.resolutions:
        last = compare_with_oracle(oracle, n, cfg.oracle.steady_tol, cfg.time.cfl, cfg.time.dt_max, cfg.oracle.t_max)
        rows.append({"n": n, "linf_error": last.linf_error, "steady": last.steady, "time": last.time,
                     "n_steps": last.n_steps})
    orders = [
        math.log(a["linf_error"] / b["linf_error"]) / math.log(b["n"] / a["n"])
        for a, b in zip(rows, rows[1:])
    ]
    diag["oracle"] = {
        "phi_minus": sol.phi_minus, "phi_plus": sol.phi_plus, "flux": sol.flux,
        "u_minus": sol.u_minus, "u_plus": sol.u_plus, "rows": rows, "orders": orders,
    }
    return last.trajectory, extra, diag


def execute(cfg: RunConfig, out_dir, threads: int = 1, seed: int | None = None) -> int:
    """Run ``cfg`` and write the output files into ``out_dir``; returns the exit code."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write(out, "config-echo.json", to_json(cfg.to_dict()))
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO

    names = [p.name for p in cfg.model.populations]
    diag: dict = {"mode": cfg.mode, "case": cfg.model.case.value, "status": "ok"}
    if cfg.model.case is Case.CASE3_MIXED:
        diag["formally_derived_only"] = True
    if seed is not None:
        diag["seed"] = seed
    code = EXIT_OK
    files: dict[str, list[str]] = {}
    try:
        traj, extra, mode_diag = _mode_results(cfg, threads)
        files["profiles.csv"] = _profile_lines(traj, names)
        files["interface.csv"] = _interface_lines(traj, names)
        files.update(extra)
        diag.update(_trajectory_diagnostics(traj))
        diag.update(mode_diag)
    except SolverError as exc:
        diag["status"] = "failed"
        diag["error"] = {"type": type(exc).__name__, "message": str(exc), "time": exc.time}
        if hasattr(exc, "epsilon"):
            diag["error"]["epsilon"] = exc.epsilon
        print(f"solver failure: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    except ThinLayerError as exc:
        diag["status"] = "failed"
        diag["error"] = {"type": type(exc).__name__, "message": str(exc), "time": None}
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG if isinstance(exc, (ConfigError, ValueError)) else EXIT_SOLVER
    try:
        for name, lines in files.items():
            _write(out, name, "\n".join(lines))
        _write(out, "diagnostics.json", to_json(diag))
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thinlayer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a JSON configuration")
    run.add_argument("config", help="path to the JSON config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threads", type=int, default=1, help="worker processes for sweep modes")
    run.add_argument("--seed", type=int, default=None, help="recorded only; solver paths are deterministic")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(Path(args.config))
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for path, msg in exc.problems:
            print(f"  {path or '<root>'}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    return execute(cfg, args.out, threads=args.threads, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
