"""Threshold scan over lattice sizes and physical error rates.

    python scripts/run_threshold.py --d-list 5,7,9,11 --p-list 0.001,0.002,0.003,0.004,0.005

Writes a CSV whose trailing comment lines give the crossing of each pair of
neighbouring sizes and their median.
"""

import argparse
from pathlib import Path

from baconsched.experiment import ExperimentConfig, results_csv, threshold_scan


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d-list", default="5,7,9,11")
    ap.add_argument("--p-list", default="0.001,0.002,0.003,0.004,0.005")
    ap.add_argument("--schedule", choices=("modified", "standard"), default="modified")
    ap.add_argument("--max-shots", type=int, default=10**5)
    ap.add_argument("--max-errors", type=int, default=10**5)
    ap.add_argument("--seed", type=int, default=10)
    ap.add_argument("--workers", type=int)
    ap.add_argument("-o", "--out", default="results/threshold.csv")
    args = ap.parse_args()

    ds = [int(x) for x in args.d_list.split(",")]
    ps = [float(x) for x in args.p_list.split(",")]
    base = ExperimentConfig(
        d=ds[0], max_shots=args.max_shots, max_errors=args.max_errors, seed=args.seed, schedule=args.schedule
    )
    scan = threshold_scan(ds, ps, base, args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(results_csv(scan.results, scan.crossings, base))
    for a, b, p in scan.crossings:
        print(f"crossing d={a},{b}: {'none in range' if p is None else f'{p:.4g}'}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
