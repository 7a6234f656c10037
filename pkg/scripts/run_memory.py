"""Logical error rate per round against lattice size at fixed p.

    python scripts/run_memory.py --d-list 5,9,13 --p 0.001 -o results/memory.csv

Runs the modified and the standard schedule and writes one CSV per schedule
(``<out>`` with ``_modified`` / ``_standard`` suffixes).
"""

import argparse
from pathlib import Path

from baconsched.experiment import ExperimentConfig, results_csv, run_memory_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d-list", default="5,9,13")
    ap.add_argument("--p", type=float, default=0.001)
    ap.add_argument("--basis", choices=("X", "Z"), default="X")
    ap.add_argument("--max-shots", type=int, default=10**6)
    ap.add_argument("--max-errors", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--schedules", default="modified,standard")
    ap.add_argument("-o", "--out", default="results/memory.csv")
    args = ap.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for schedule in args.schedules.split(","):
        results = []
        for d in (int(x) for x in args.d_list.split(",")):
            cfg = ExperimentConfig(
                d=d,
                basis=args.basis,
                p=args.p,
                max_shots=args.max_shots,
                max_errors=args.max_errors,
                seed=args.seed,
                schedule=schedule,
            )
            r = run_memory_experiment(cfg, args.workers)
            print(f"{schedule} d={d}: {r.logical_errors}/{r.shots} p_round={r.p_round:.3e} ({r.wall_time:.1f}s)")
            results.append(r)
        path = out.with_name(f"{out.stem}_{schedule}{out.suffix}")
        path.write_text(results_csv(results))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
