#!/usr/bin/env python
"""
Compare band-edge sub-bands of the Harper spectrum with the Landau-level
expansion at flux 1/q for a few q.

Usage:
  uv run python dev/landau_edges.py [levels] [q ...]
"""

import sys
from pathlib import Path

import pandas as pd

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from harper_spectral import RationalFlux, landau_edge_check  # noqa: E402


def main() -> None:
    levels = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    denominators = [int(q) for q in sys.argv[2:]] or [100, 200, 400]
    rows = []
    for q in denominators:
        flux = RationalFlux(1, q)
        try:
            edges = landau_edge_check(flux, num_levels=levels)
        except ValueError as exc:
            print(f"Skipping flux {flux}: {exc}")
            continue
        for r in edges:
            rows.append(
                {
                    "q": q,
                    "gamma": flux.gamma,
                    "level": r.level,
                    "sign": r.sign,
                    "measured": r.measured,
                    "predicted": r.predicted,
                    "deviation": r.deviation,
                    "separated": r.separated,
                }
            )
    if not rows:
        sys.exit(1)
    print(pd.DataFrame(rows).to_string(index=False))


if __name__ == "__main__":
    main()
