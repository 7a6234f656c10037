"""Steady-state detector census of the modified schedule for several sizes.

    python scripts/census.py --d-list 5,9,13,17
"""

import argparse
import time

from baconsched.schedule import modified_schedule
from baconsched.tracker import detector_census


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d-list", default="5,9,13,17")
    ap.add_argument("--cycles", type=int, default=4)
    ap.add_argument("--boundary-seeds", action="store_true")
    args = ap.parse_args()
    for d in (int(x) for x in args.d_list.split(",")):
        start = time.perf_counter()
        rep = detector_census(modified_schedule(d, boundary_seeds=args.boundary_seeds), args.cycles)
        print(f"d={d} ({time.perf_counter() - start:.2f}s)")
        print(rep)


if __name__ == "__main__":
    main()
