"""Run every sweep in configs/ and write one CSV per config.

    python scripts/run_sweeps.py --out-dir results [--n 10000] [--threads 2]
"""

import argparse
import sys
import time
from pathlib import Path

from rop.cli import main as rop_main

ROOT = Path(__file__).resolve().parent.parent


def run_all(config_dir: Path, out_dir: Path, n=None, seed=None, threads=None) -> int:
    configs = sorted(config_dir.glob("*.toml"))
    if not configs:
        print(f"no .toml files in {config_dir}", file=sys.stderr)
        return 1
    for cfg in configs:
        argv = ["sweep", "--config", str(cfg), "--out", str(out_dir / (cfg.stem + ".csv"))]
        if n is not None:
            argv += ["--n", str(n)]
        if seed is not None:
            argv += ["--seed", str(seed)]
        if threads is not None:
            argv += ["--threads", str(threads)]
        t0 = time.perf_counter()
        code = rop_main(argv)
        print(f"{cfg.name}: {time.perf_counter() - t0:.1f} s")
        if code:
            return code
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config-dir", type=Path, default=ROOT / "configs")
    ap.add_argument("--out-dir", type=Path, default=ROOT / "results")
    ap.add_argument("--n", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    a = ap.parse_args()
    sys.exit(run_all(a.config_dir, a.out_dir, a.n, a.seed, a.threads))
