"""Vanishing-viscosity study: Riemann data through a Laval nozzle at
decreasing epsilon; prints L1/L2 Cauchy distances, contraction ratios,
window sup-bounds and dissipation, and writes the report as JSON.

    NOZZLE_THREADS=4 python3 scripts/sweep_study.py --out out/sweep_study.json
"""
import argparse
import json
from pathlib import Path

from nozzleflow.gas import GasModel
from nozzleflow.geometry import laval_with_a0_l1
from nozzleflow.initial import riemann_step
from nozzleflow.sweep import SweepConfig, epsilon_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=5.0 / 3.0)
    ap.add_argument("--a0-l1", type=float, default=0.2)
    ap.add_argument("--left", type=float, nargs=2, default=[100.0, 0.0], metavar=("RHO", "M"))
    ap.add_argument("--right", type=float, nargs=2, default=[10.0, 0.0], metavar=("RHO", "M"))
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("out/sweep_study.json"))
    args = ap.parse_args()

    g = GasModel.isentropic(args.gamma)
    geom = laval_with_a0_l1(args.a0_l1, (-8.0, 8.0))
    cfg = SweepConfig(g, geom, lambda grid: riemann_step(grid, tuple(args.left),
                                                         tuple(args.right), 0.0),
                      t_end=args.t_end, epsilons=args.epsilons, workers=args.workers)
    rep = epsilon_sweep(cfg)
    print(f"{'eps':>8} {'max w':>10} {'-min z':>10} {'dissipation':>12}")
    for e, b, d in zip(rep.epsilons, rep.bounds, rep.dissipation):
        print(f"{e:8.4g} {b['max_w']:10.5f} {b['neg_min_z']:10.5f} {d:12.4f}")
    print("L1 distances:", ", ".join(f"{v:.4f}" for v in rep.distances_l1))
    print("L2 distances:", ", ".join(f"{v:.4f}" for v in rep.distances_l2))
    print("ratios:", ", ".join(f"{v:.3f}" for v in rep.ratios), "->", rep.verdict)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
