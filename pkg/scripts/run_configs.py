"""Run every shipped CLI scenario and tabulate verdicts and exit codes.

    python3 scripts/run_configs.py --out out/configs
"""
import argparse
import io
import time
from contextlib import redirect_stdout
from pathlib import Path

from nozzleflow.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = [
    ("check-geometry", "constant.cfg"),
    ("run", "laval_gamma53.cfg"),
    ("run", "isothermal_expansion.cfg"),
    ("max-principle", "max_principle.cfg"),
    ("entropy-audit", "entropy_audit.cfg"),
    ("sweep", "sweep.cfg"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/configs"))
    args = ap.parse_args()
    failures = 0
    for command, name in SCENARIOS:
        out = args.out / Path(name).stem
        t0 = time.perf_counter()
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = cli_main([command, str(ROOT / "configs" / name), "--out", str(out)])
        failures += code != 0
        print(f"{command:15s} {name:26s} exit {code}  {time.perf_counter() - t0:6.1f}s  "
              f"{buf.getvalue().strip()}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
