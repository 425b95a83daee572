#!/usr/bin/env python
"""
Print C(N, A), the scaled variance and the gap to 1/48 for one N.

Usage:
  uv run python dev/print_distribution.py <N> [enumerate|dp|spectral]
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from asymptotics import LIMIT_VARIANCE  # noqa: E402
from errors import AreaWalksError  # noqa: E402
from exact_dp import dp_counts, moments  # noqa: E402
from harper_spectral import invert_counts  # noqa: E402
from walk_core import enumerate_counts  # noqa: E402

ENGINES = {"enumerate": enumerate_counts, "dp": dp_counts, "spectral": invert_counts}


def main() -> None:
    if len(sys.argv) < 2:
        print("Usage: uv run python dev/print_distribution.py <N> [enumerate|dp|spectral]")
        sys.exit(1)
    n = int(sys.argv[1])
    engine = sys.argv[2] if len(sys.argv) > 2 else "dp"
    if engine not in ENGINES:
        print(f"Unknown engine '{engine}'; use one of {', '.join(ENGINES)}.")
        sys.exit(1)
    try:
        dist = ENGINES[engine](n)
    except (AreaWalksError, ValueError) as exc:
        print(f"Failed to compute N={n} with {engine}: {exc}")
        sys.exit(1)

    payload = dist.to_dict()
    if n:
        scaled = float(moments(dist, 2)) / n**2
        payload["scaled_variance"] = scaled
        payload["gap_to_limit"] = LIMIT_VARIANCE - scaled
    print(json.dumps(payload, ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
