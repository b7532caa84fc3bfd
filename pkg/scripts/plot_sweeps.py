"""Plot the sweep CSVs written by run_sweeps.py, one PNG per config family."""

import argparse
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from rop.experiments import read_csv  # noqa: E402

# family prefix -> (x label, file name)
FAMILIES = {
    "peak": ("P_pk", "peak.png"),
    "average": ("P_av", "average.png"),
    "outage_peak": ("outage budget", "outage_peak.png"),
    "outage_average": ("P_av", "outage_average.png"),
}


def family_of(stem: str) -> str:
    return max((f for f in FAMILIES if stem.startswith(f + "_")), key=len)


def main(results: Path, out: Path):
    groups = defaultdict(list)
    for csv_path in sorted(results.glob("*.csv")):
        groups[family_of(csv_path.stem)].append(csv_path)
    out.mkdir(parents=True, exist_ok=True)
    for family, paths in groups.items():
        xlabel, name = FAMILIES[family]
        plt.figure(figsize=(5, 3.5))
        for p in paths:
            rows = read_csv(p)
            plt.plot([r["x"] for r in rows], [r["capacity_bits"] for r in rows], marker="o",
                     ms=3, label=p.stem[len(family) + 1:])
        plt.xlabel(xlabel)
        plt.ylabel("ergodic capacity (bits/channel use)")
        plt.legend(fontsize=8)
        plt.tight_layout()
        plt.savefig(out / name, dpi=150)
        plt.close()


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--results", type=Path, default=Path("results"))
    ap.add_argument("--out", type=Path, default=Path("results/plots"))
    a = ap.parse_args()
    main(a.results, a.out)
