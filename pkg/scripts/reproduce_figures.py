"""Regenerate the driven-TLA comparison study from scratch.

Runs the exact enlarged-system reference and the trajectory ensembles
(perturbative orders 0-2 coherent, 0-1 quadrature, and the first-order
post-Markovian closure) at the study parameters gamma = kappa = 1, chi = 5,
delta = 3 from |e>, differences everything against the reference, and --
when the figures tool is built (cd frontend && npm install && npm run
build) -- renders the four figures:

  fig1  Bloch components of the reference solution
  fig2  L1 error of the coherent hierarchy, orders 0/1/2
  fig3  L1 error of the quadrature hierarchy, orders 0/1
  fig4  L1 error of the post-Markovian closure, both unravellings

Full statistics (--ntraj 10000) take ~15 minutes on a laptop; --fast drops
to a smoke-test scale that finishes in under a minute.
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent


def cli(*args: str) -> None:
    cmd = [sys.executable, "-m", "nmsse.cli", *args]
    print("+", " ".join(cmd[2:]), flush=True)
    subprocess.run(cmd, check=True, cwd=ROOT)


def time_avg_l1(path: Path) -> float:
    """Grid mean of |dx|+|dy|+|dz|, same metric as nmsse.compare."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return float(np.abs(data[:, 1:4]).sum(axis=1).mean())


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "out",
                    help="output directory (default: out/)")
    ap.add_argument("--ntraj", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=20240521)
    ap.add_argument("--fast", action="store_true",
                    help="smoke scale: 256 trajectories, coarse grid, t<=4")
    ap.add_argument("--skip-figures", action="store_true",
                    help="stop after the CSVs, do not invoke the figures tool")
    args = ap.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    common = ["--seed", str(args.seed)]
    if args.fast:
        args.ntraj = min(args.ntraj, 256)
        common += ["--t-final", "4.0", "--dt", "5e-3", "--record-stride", "40"]

    ref = out / "reference.csv"
    cli("run-enlarged", *common, "-o", str(ref))

    diffs: dict[str, Path] = {}
    runs = [("c0", "coherent", "0"), ("c1", "coherent", "1"),
            ("c2", "coherent", "2"), ("q0", "quadrature", "0"),
            ("q1", "quadrature", "1")]
    for tag, unravelling, order in runs:
        curve = out / f"sse_{tag}.csv"
        cli("run-sse", *common, "--unravelling", unravelling, "--order", order,
            "--ntraj", str(args.ntraj), "-o", str(curve))
        diffs[tag] = out / f"diff_{tag}.csv"
        cli("compare", str(curve), str(ref), "-o", str(diffs[tag]))

    for tag, unravelling in [("yc", "coherent"), ("yq", "quadrature")]:
        curve = out / f"ydgs_{tag}.csv"
        cli("run-postmarkovian", *common, "--unravelling", unravelling,
            "--ntraj", str(args.ntraj), "-o", str(curve))
        diffs[tag] = out / f"diff_{tag}.csv"
        cli("compare", str(curve), str(ref), "-o", str(diffs[tag]))

    print("\ntime-averaged L1 error vs reference:")
    for tag in ("c0", "c1", "c2", "q0", "q1", "yc", "yq"):
        print(f"  {tag}: {time_avg_l1(diffs[tag]):.4f}")

    if args.skip_figures:
        return 0
    figures = ROOT / "frontend" / "dist" / "cli.js"
    node = shutil.which("node")
    if node is None or not figures.exists():
        print("\nfigures tool not built; skipping rendering "
              "(cd frontend && npm install && npm run build)")
        return 0
    figure_inputs = {
        1: [ref],
        2: [diffs["c0"], diffs["c1"], diffs["c2"]],
        3: [diffs["q0"], diffs["q1"]],
        4: [diffs["yc"], diffs["yq"]],
    }
    for fid, inputs in figure_inputs.items():
        target = out / f"fig{fid}.svg"
        subprocess.run([node, str(figures), str(fid),
                        *(str(p) for p in inputs), "-o", str(target)],
                       check=True)
        print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
