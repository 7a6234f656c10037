"""Plot CSV output of ``baconsched memory`` / ``threshold`` runs.

    python scripts/plot_results.py results/memory_modified.csv results/memory_standard.csv -o memory.png
    python scripts/plot_results.py results/threshold.csv --x p -o threshold.png

With ``--x d`` (default) each file is one curve of p_round against d; with
``--x p`` each lattice size in each file is one curve against p. Shaded bands
are the per-round Wilson intervals. Needs matplotlib (``pip install .[plot]``).
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(lines)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+", type=Path)
    ap.add_argument("--x", choices=("d", "p"), default="d")
    ap.add_argument("-o", "--out", default="plot.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for path in args.csv:
        rows = read_rows(path)
        if args.x == "d":
            groups = {path.stem: rows}
        else:
            groups = {}
            for r in rows:
                groups.setdefault(f"{path.stem} d={int(r['d'])}", []).append(r)
        for label, rs in groups.items():
            rs = sorted(rs, key=lambda r: r[args.x])
            keep = [r for r in rs if r["p_round"] > 0]
            x = [r[args.x] for r in keep]
            ax.plot(x, [r["p_round"] for r in keep], "o-", label=label)
            ax.fill_between(x, [r["ci_lo"] for r in keep], [r["ci_hi"] for r in keep], alpha=0.25)
    ax.set_yscale("log")
    if args.x == "p":
        ax.set_xscale("log")
        ax.set_xlabel("physical error rate p")
    else:
        ax.set_xlabel("lattice size d")
    ax.set_ylabel("logical error rate per round")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
