"""
Exact dynamic programming over (x, y, doubled shoelace sum) states.

Layer k holds the number of k-step prefixes ending at each state. States that
cannot reach the origin in the remaining N - k steps are zeroed, so every
surviving prefix extends to a closed walk and no cell ever exceeds Omega_N.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, Optional

import numpy as np

from asymptotics import omega_exact
from distribution import AreaDistribution
from errors import BudgetExceededError, ConsistencyError
from walk_core import max_area

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = int(os.getenv("AREA_WALKS_MAX_CELLS") or "2000000")
# int64 cells are exact while Omega_N stays below this; beyond it the table holds Python ints.
INT64_SAFE_TOTAL = 2**62


def _shift_add(dest: np.ndarray, src: np.ndarray, shift: int) -> None:
    """dest[..., i + shift] += src[..., i] along the area axis."""
    width = dest.shape[-1]
    if shift >= 0:
        dest[..., shift:] += src[..., : width - shift]
    else:
        dest[..., : width + shift] += src[..., -shift:]


def table_shape(N: int) -> tuple:
    """Dense layer shape: x and y in [-N/2, N/2], doubled area in [-N^2/4, N^2/4]."""
    radius = N // 2
    # |2A'| <= sum_j min(j, N - j) = N^2/4 for prefixes that can still close.
    half_width = N * N // 4
    return (2 * radius + 1, 2 * radius + 1, 2 * half_width + 1)


def dp_counts(N: int, threads: int = 1, max_cells: Optional[int] = None) -> AreaDistribution:
    """Exact C(N, A) for all areas by layered transfer over lattice states."""
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}).")
    shape = table_shape(N)
    cells = shape[0] * shape[1] * shape[2]
    budget = DEFAULT_MAX_CELLS if max_cells is None else max_cells
    if cells > budget:
        raise BudgetExceededError(
            f"DP table for N={N} needs {cells} cells per layer, over the budget of {budget} "
            "(raise AREA_WALKS_MAX_CELLS to allow it)."
        )
    dtype = np.int64 if omega_exact(N) < INT64_SAFE_TOTAL else object
    radius = N // 2
    half_width = N * N // 4
    ys = np.arange(-radius, radius + 1)

    prev = np.zeros(shape, dtype=dtype)
    prev[radius, radius, half_width] = 1
    logger.info("DP for N=%d: layer shape %s, dtype %s", N, shape, np.dtype(dtype).name)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for k in range(1, N + 1):
            reach = min(k, N - k)
            prev_reach = min(k - 1, N - k + 1)
            nxt = np.zeros(shape, dtype=dtype)

            def advance_row(ix: int) -> None:
                # Each task writes only nxt[ix].
                x = ix - radius
                row = nxt[ix]
                src = prev[ix]
                _shift_add(row[1:], src[:-1], x)  # +y step adds x
                _shift_add(row[:-1], src[1:], -x)  # -y step subtracts x
                for iy in range(radius - prev_reach, radius + prev_reach + 1):
                    y = iy - radius
                    if ix >= 1:
                        _shift_add(row[iy], prev[ix - 1, iy], -y)  # +x step subtracts y
                    if ix + 1 < shape[0]:
                        _shift_add(row[iy], prev[ix + 1, iy], y)  # -x step adds y
                row[np.abs(ys) + abs(x) > reach] = 0

            rows = range(radius - reach, radius + reach + 1)
            if pool is not None:
                list(pool.map(advance_row, rows))
            else:
                for ix in rows:
                    advance_row(ix)
            prev = nxt
            logger.debug("DP layer %d/%d done", k, N)
    finally:
        if pool is not None:
            pool.shutdown()

    final = prev[radius, radius]
    counts: Dict[int, int] = {}
    for index in np.flatnonzero(final):
        twice = int(index) - half_width
        if twice % 2:
            raise ConsistencyError(f"Closed walks with odd doubled area {twice} at N={N}.")
        counts[twice // 2] = int(final[index])
    dist = AreaDistribution(N=N, counts=counts)
    check_distribution(dist)
    return dist


def check_distribution(d: AreaDistribution) -> None:
    """Raise ConsistencyError unless total, symmetry and support bound all hold."""
    expected = omega_exact(d.N)
    if d.total != expected:
        raise ConsistencyError(f"N={d.N}: total {d.total} differs from binomial(N, N/2)^2 = {expected}.")
    for area, count in d.counts.items():
        if d.count(-area) != count:
            raise ConsistencyError(f"N={d.N}: C({area}) = {count} but C({-area}) = {d.count(-area)}.")
    bound = max_area(d.N)
    outside = [a for a in d.counts if abs(a) > bound]
    if outside:
        raise ConsistencyError(f"N={d.N}: areas {outside} exceed the isoperimetric bound {bound}.")


def moments(d: AreaDistribution, k: int) -> Fraction:
    """Exact k-th moment sum_A A^k C(N, A) / Omega_N."""
    if k not in (1, 2, 3, 4):
        raise ValueError(f"Moment order must be 1, 2, 3 or 4 (got {k}).")
    return Fraction(sum(a**k * c for a, c in d.counts.items()), d.total)
