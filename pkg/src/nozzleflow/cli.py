"""Command-line entry point: nozzleflow <command> <config> [--out DIR].

Exit codes: 0 all gates pass, 1 config error, 2 admissibility, 3 numeric
failure, 4 a verification gate failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from nozzleflow import __version__
from nozzleflow.config import RunConfig, parse_config, resolve_path
from nozzleflow.entropy import (Window, dissipation_integral, entropy_residual, pair_family,
                                random_bumps)
from nozzleflow.errors import NozzleError
from nozzleflow.fields import Grid
from nozzleflow.gas import GasModel
from nozzleflow.geometry import (Constant, ExpMonotone, LavalBump, check_admissible, derive_a,
                                 expmonotone_with_a0_l1, laval_with_a0_l1, load_tabulated)
from nozzleflow.initial import InitialSpec
from nozzleflow.maxprinciple import run_corpus
from nozzleflow.monitor import build_controls
from nozzleflow.solver import MollifierSpec, SnapshotCSVWriter, SolverConfig, mollify_initial, run
from nozzleflow.sweep import SweepConfig, epsilon_sweep

COMMANDS = ("check-geometry", "run", "entropy-audit", "max-principle", "sweep")
REPORT_KEYS = ("config", "invariant_region", "entropy_residuals", "dissipation",
               "max_principle", "sweep", "verdict")
EXIT_VERIFY = 4


# -- config -> objects -----------------------------------------------------------

def make_gas(cfg: RunConfig) -> GasModel:
    if cfg.mode == "isothermal":
        return GasModel.isothermal()
    return GasModel.isentropic(cfg.gamma)


def make_geometry(cfg: RunConfig):
    geo = cfg["geometry"]
    domain = (geo["x_min"], geo["x_max"])
    kw = {"a0_scale": cfg["controls"]["a0_scale"]}
    kind, target = geo["kind"], geo["a0_l1_target"]
    if target is not None:
        if kind == "laval":
            return laval_with_a0_l1(target, domain, a_inf=geo["a_inf"], width=geo["width"], **kw)
        if kind == "expmonotone":
            return expmonotone_with_a0_l1(target, domain, x0=geo["x0"], width=geo["width"], **kw)
        raise NozzleError(f"a0_l1_target is not supported for geometry kind {kind!r}")
    if kind == "constant":
        spec = Constant(geo["area"])
    elif kind == "expmonotone":
        spec = ExpMonotone(geo["kappa"], geo["x0"], geo["width"])
    elif kind == "laval":
        spec = LavalBump(geo["a_inf"], geo["depth"], geo["width"])
    else:
        spec = load_tabulated(resolve_path(cfg, geo["file"]))
    return derive_a(spec, domain, **kw)


def make_initial(cfg: RunConfig):
    params = dict(cfg["initial"])
    preset = params.pop("preset")
    if params["file"]:
        params["file"] = str(resolve_path(cfg, params["file"]))
    return InitialSpec(preset, params)


def make_solver_config(cfg: RunConfig, **over) -> SolverConfig:
    s = cfg["solver"]
    kw = dict(epsilon=s["epsilon"], t_end=cfg["run"]["t_end"], delta=s["delta"], cfl=s["cfl"],
              diff_safety=s["diff_safety"], snapshot_stride=s["snapshot_stride"],
              snapshot_dt=s["snapshot_dt"], bc=s["bc"])
    kw.update(over)
    return SolverConfig(**kw)


def _grid(cfg: RunConfig) -> Grid:
    geo = cfg["geometry"]
    return Grid(geo["x_min"], geo["x_max"], cfg["solver"]["n_cells"])


def simulate(cfg: RunConfig, geom, g, scfg: SolverConfig, on_snapshot=None, writer_path=None):
    """Mollify the configured data, build controls and run; returns (trace, controls)."""
    grid = _grid(cfg)
    area = geom.area if cfg["initial"]["area_weighted"] else None
    raw = make_initial(cfg).build(grid, area)
    init = mollify_initial(raw, MollifierSpec(cfg["solver"]["mollifier_width"]), g, scfg, grid.dx)
    ctl = cfg["controls"]
    controls = build_controls(geom, g, init, scfg.epsilon, grid, margin_abs=ctl["c0_margin"],
                              override=ctl["admissibility_override"])
    if writer_path is not None:
        with SnapshotCSVWriter(writer_path, g, grid, controls) as writer:
            trace = run(init, g, geom, controls, scfg, grid,
                        override=ctl["admissibility_override"], on_snapshot=writer)
    else:
        trace = run(init, g, geom, controls, scfg, grid, override=ctl["admissibility_override"])
    return trace, controls


def _invariant_region(trace, controls) -> dict:
    return {"pass": bool(trace.passed), "tol": trace.meta["tol"],
            "ceiling": controls.ceiling, "controls": controls.to_dict(),
            "reports": [r.to_dict() for r in trace.reports]}


# -- commands ---------------------------------------------------------------------

def cmd_check_geometry(cfg: RunConfig, out: Path, report: dict) -> int:
    rep = check_admissible(make_geometry(cfg), make_gas(cfg))
    report["admissibility"] = rep.to_dict()
    report["verdict"] = "admissible" if rep.admissible else "inadmissible"
    return 0 if rep.admissible else 2


def cmd_run(cfg: RunConfig, out: Path, report: dict) -> int:
    g, geom = make_gas(cfg), make_geometry(cfg)
    csv_path = out / "snapshots.csv" if "csv" in _formats(cfg) else None
    trace, controls = simulate(cfg, geom, g, make_solver_config(cfg), writer_path=csv_path)
    report["admissibility"] = check_admissible(geom, g).to_dict()
    report["run"] = _run_meta(trace)
    report["invariant_region"] = _invariant_region(trace, controls)
    report["verdict"] = "pass" if trace.passed else "monitor-violation"
    return 0 if trace.passed else EXIT_VERIFY


def cmd_entropy_audit(cfg: RunConfig, out: Path, report: dict) -> int:
    g, geom = make_gas(cfg), make_geometry(cfg)
    ent = cfg["entropy"]
    t_end = cfg["run"]["t_end"]
    snap = cfg["solver"]["snapshot_dt"] or t_end / 200.0
    scfg = make_solver_config(cfg, snapshot_dt=snap)
    trace, controls = simulate(cfg, geom, g, scfg)

    lo, hi = geom.domain
    mx, mt = ent["margin"] * (hi - lo), ent["margin"] * t_end
    K = Window(lo + mx, hi - mx, mt, t_end - mt)
    rng = np.random.default_rng(cfg["run"]["seed"])
    bumps = random_bumps(rng, K, ent["n_bumps"], (ent["rx_min"], ent["rx_max"]),
                         (ent["rt_min"], ent["rt_max"]))
    family = ent["family"]
    if g.is_isothermal and family == "mechanical":
        pair = pair_family("mechanical", g)
    else:
        pair = pair_family(family, g, xi=ent["xi"])
    values = entropy_residual(trace, pair, g, geom, bumps)
    scale = 10.0 * (scfg.epsilon + trace.grid.dx)
    rows = []
    for bmp, r in zip(bumps, values):
        tol = scale * bmp.c1_norm
        rows.append({"xc": bmp.xc, "tc": bmp.tc, "rx": bmp.rx, "rt": bmp.rt,
                     "residual": r, "tol": tol, "pass": bool(r >= -tol)})
    diss = dissipation_integral(trace, g, K, scfg.epsilon, ent["xi"] if g.is_isothermal else None)

    report["run"] = _run_meta(trace)
    report["invariant_region"] = _invariant_region(trace, controls)
    report["entropy_residuals"] = {"family": family, "tol_model": "10 (eps + dx) ||phi||_C1",
                                   "window": vars(K), "values": rows}
    report["dissipation"] = {"window": vars(K), "values": {repr(scfg.epsilon): diss}}
    ok = all(r["pass"] for r in rows)
    report["verdict"] = "pass" if ok else "entropy-violation"
    return 0 if ok else EXIT_VERIFY


def cmd_max_principle(cfg: RunConfig, out: Path, report: dict) -> int:
    results = run_corpus(resolve_path(cfg, cfg["max_principle"]["corpus"]))
    report["max_principle"] = [r.to_dict() for r in results]
    ok = all(r.ok for r in results)
    report["verdict"] = "pass" if ok else "unexpected-outcome"
    return 0 if ok else EXIT_VERIFY


def cmd_sweep(cfg: RunConfig, out: Path, report: dict) -> int:
    g, geom = make_gas(cfg), make_geometry(cfg)
    sw = cfg["sweep"]
    ini = make_initial(cfg)
    area = geom.area if cfg["initial"]["area_weighted"] else None
    scfg = SweepConfig(gas=g, geometry=geom, initial=lambda grid: ini.build(grid, area),
                       t_end=cfg["run"]["t_end"], epsilons=sw["epsilons"],
                       cells_per_epsilon=sw["cells_per_epsilon"],
                       n_cells=cfg["solver"]["n_cells"] if sw["fixed_grid"] else None,
                       margin=sw["margin"], snapshot_dt=cfg["solver"]["snapshot_dt"],
                       xi=cfg["entropy"]["xi"] if g.is_isothermal else None)
    rep = epsilon_sweep(scfg)
    report["sweep"] = rep.to_dict()
    report["dissipation"] = {"window": vars(scfg.window),
                             "values": {repr(e): d for e, d in zip(rep.epsilons, rep.dissipation)}}
    report["verdict"] = rep.verdict
    return 0 if rep.converging else EXIT_VERIFY


HANDLERS = {
    "check-geometry": cmd_check_geometry,
    "run": cmd_run,
    "entropy-audit": cmd_entropy_audit,
    "max-principle": cmd_max_principle,
    "sweep": cmd_sweep,
}


# -- plumbing ---------------------------------------------------------------------

def _formats(cfg: RunConfig) -> set:
    return {f.strip() for f in cfg["outputs"]["formats"].split(",") if f.strip()}


def _run_meta(trace) -> dict:
    keep = ("epsilon", "delta", "t_end", "dx", "tol", "padding_factor", "steps", "dt_max",
            "warnings")
    return {k: trace.meta.get(k) for k in keep}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_report(report: dict, path: Path):
    path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nozzleflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nozzleflow {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (overrides [outputs] directory)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except NozzleError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return exc.exit_code

    out = args.out if args.out is not None else Path(cfg["outputs"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.effective").write_text(cfg.to_text())

    report = {k: None for k in REPORT_KEYS}
    report.update(version=__version__, command=args.command, config=cfg.to_dict(),
                  warnings=list(cfg.warnings))
    try:
        code = HANDLERS[args.command](cfg, out, report)
    except NozzleError as exc:
        code = exc.exit_code
        report["verdict"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    if "json" in _formats(cfg):
        write_report(report, out / f"{args.command.replace('-', '_')}.json")
    print(f"{args.command}: {report['verdict']} (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
