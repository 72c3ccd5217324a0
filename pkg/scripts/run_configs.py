"""Run a set of experiment configs and write their figures.

    python scripts/run_configs.py configs/desk            # every YAML in the folder
    python scripts/run_configs.py configs/paper/thermal.yaml --workers 2
"""
import argparse
import logging
import time
from pathlib import Path

from heraldkit.orchestrator import load_config, run_experiment
from heraldkit.plots import emit_plots


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("paths", nargs="+", type=Path)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    configs = []
    for p in args.paths:
        configs += sorted(p.glob("*.yaml")) if p.is_dir() else [p]
    for path in configs:
        t0 = time.perf_counter()
        mf = run_experiment(load_config(path), workers=args.workers)
        status = "ok" if mf.ok else "FAILED"
        print(f"{path.name:<24} {status:<6} {mf.n_computed}/{len(mf.jobs)} computed  "
              f"{time.perf_counter() - t0:8.1f} s  -> {mf.output}")
        if mf.ok:
            for fig in emit_plots(mf):
                print(f"    {fig}")


if __name__ == "__main__":
    main()
