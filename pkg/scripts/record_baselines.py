#!/usr/bin/env python3
"""Record iteration baselines for the benchmark suites.

Solves every graph of the chosen suites with default parameters and writes
the observed iteration counts and WDA to tests/benchmarks/baselines.json.
The convergence tests allow later runs at most two iterations more.

Usage:
    python -m scripts.record_baselines --suite small --suite desk
"""

import argparse
import json
import logging
from pathlib import Path

from src.harness import SUITES, run_bench

logger = logging.getLogger(__name__)

BASELINES_PATH = Path(__file__).parent.parent / "tests" / "benchmarks" / "baselines.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--suite", action="append", choices=sorted(SUITES),
                        help="Suite to record (repeatable, default: small)")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    data = json.loads(BASELINES_PATH.read_text()) if BASELINES_PATH.exists() else {}
    suites = data.setdefault("suites", {})

    for suite in args.suite or ["small"]:
        entries = {}
        for row in run_bench(suite):
            if not row["wda"]:
                logger.warning(f"{row['graph']}: no WDA recorded, skipping")
                continue
            entries[row["graph"]] = {
                "iterations": int(row["iters"]),
                "wda": round(float(row["wda"]), 2),
            }
        suites[suite] = entries
        logger.info(f"Recorded {len(entries)} graphs for suite {suite}")

    BASELINES_PATH.write_text(json.dumps(data, indent=2) + "\n")
    print(f"✓ Wrote {BASELINES_PATH}")


if __name__ == "__main__":
    main()
