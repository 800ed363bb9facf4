"""Run the catalog experiments through the CLI and keep every report.

    python scripts/run_experiments.py [--out reports] [--seed 7]

Writes one JSON report per command (and a CSV for each reconstruction plot)
and prints a verdict line for each.
"""

import argparse
from pathlib import Path

from sodelie.cli import main as cli

RUNS = [
    ("closure-ks2", ["closure", "--entry", "ks2"]),
    ("closure-ks3", ["closure", "--entry", "ks3"]),
    ("closure-oscillator-gl2", ["closure", "--entry", "oscillator", "--extra"]),
    ("lie-check-dmp", ["lie-check", "--entry", "dmp"]),
    ("lie-check-tv2", ["lie-check", "--entry", "tv2"]),
    ("min-m-ks2", ["min-m", "--entry", "ks2"]),
    ("min-m-ks3", ["min-m", "--entry", "ks3"]),
    ("verify-mp", ["verify-sr", "--entry", "mp", "--trials", "20"]),
    ("verify-ks2", ["verify-sr", "--entry", "ks2", "--trials", "20"]),
    ("verify-ks3", ["verify-sr", "--entry", "ks3", "--trials", "20"]),
    ("verify-free-row1", ["verify-sr", "--entry", "free", "--rule", "row1"]),
    ("verify-tv2-partial", ["verify-sr", "--entry", "tv2", "--rule", "row2-partial"]),
    ("verify-t2v-row3", ["verify-sr", "--entry", "t2v", "--rule", "row3"]),
    ("verify-t2-difference", ["verify-sr", "--entry", "t2", "--rule", "difference"]),
    ("conserve-mp", ["conserve", "--entry", "mp"]),
    ("conserve-dmp", ["conserve", "--entry", "dmp"]),
    ("conserve-ks2", ["conserve", "--entry", "ks2"]),
    ("conserve-ks3", ["conserve", "--entry", "ks3"]),
    ("char-mp", ["char-residual", "--entry", "mp"]),
    ("char-ks2", ["char-residual", "--entry", "ks2"]),
    ("xl-mp", ["xl-check", "--entry", "mp"]),
]

PLOTS = ["mp", "ks2", "ks3"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="reports")
    ap.add_argument("--seed", default="7")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS:
        code = cli([*argv, "--seed", args.seed, "-o", str(out / f"{name}.json")])
        print(f"{name:28s} exit {code}")
    for entry in PLOTS:
        code = cli(["emit-plot", "--entry", entry, "--seed", args.seed, "--format", "csv",
                    "-o", str(out / f"plot-{entry}.csv")])
        print(f"{'plot-' + entry:28s} exit {code}")


if __name__ == "__main__":
    main()
