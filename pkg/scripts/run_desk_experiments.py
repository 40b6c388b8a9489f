#!/usr/bin/env python3
"""Run the desk-scale recovery sweep and emit every CSV the plots consume.

Writes trials.csv, table1.csv, phase.csv, scatter.csv, and manifest.json into
the output directory. With plotkit installed, also renders phase.png and
scatter.png. The default configuration matches the acceptance ensemble
(210 systems, m=10); pass --config to override.
"""

import argparse
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

from sparse_lds import experiments


DEFAULT_CONFIG = {
    "seed": 2026,
    "n_list": [6, 8, 10],
    "m": 10,
    "p_range": [1, 10],
    "s_range": [1, 3],
    "trials_per_system": 10,
    "systems_per_cell": 7,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="JSON config file (default: built-in desk scale)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--skip-scatter", action="store_true", help="skip the full-mode sweep")
    args = parser.parse_args()

    raw = json.loads(Path(args.config).read_text()) if args.config else DEFAULT_CONFIG
    cfg = experiments.ExperimentConfig.from_json(raw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print(f"running {len(cfg.cells())} cells with {args.threads} workers ...")
    stats = experiments.table1(cfg, args.threads)
    experiments.write_trials_csv(stats.trials, out / "trials.csv")
    experiments.write_table1_csv(stats, out / "table1.csv")
    print("table1 summary (imperfect/total by classification pair):")
    for key, (bad, total) in (stats.table1 or {}).items():
        print(f"  sufficient={key[0]:>5}  necessary={key[1]:>5}  {bad}/{total}")

    phase = experiments.phase_grid(cfg, args.threads)
    experiments.write_phase_csv(phase, out / "phase.csv")

    if not args.skip_scatter:
        print("computing exact constants for the scatter sweep (slowest step) ...")
        sc = experiments.scatter(cfg, args.threads)
        experiments.write_scatter_csv(sc, out / "scatter.csv")

    experiments.write_manifest(cfg, "desk-experiments", out / "manifest.json")

    plotkit = shutil.which("plotkit")
    if plotkit:
        subprocess.run(
            [plotkit, "phase", "--in", str(out / "phase.csv"), "--out", str(out / "phase.png")],
            check=True,
        )
        if not args.skip_scatter:
            subprocess.run(
                [plotkit, "scatter", "--in", str(out / "scatter.csv"), "--out", str(out / "scatter.png")],
                check=True,
            )
        print(f"figures rendered into {out}/")
    else:
        print("plotkit not installed; CSVs written, figures skipped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
