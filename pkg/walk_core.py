"""
Closed lattice walks, their algebraic area, and the brute-force oracle.

The oracle enumerates all 4^N walks: every walk is split into a prefix of
N/2 steps and a suffix of the remaining steps, both tabulated once, and the
prefix table is swept in blocks against the full suffix table.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Tuple

import numpy as np

from distribution import AreaDistribution
from errors import BudgetExceededError, ConsistencyError

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 14
# Prefix x suffix pairs evaluated per block; bounds the temporaries to a few tens of MB.
BLOCK_PAIRS = 1 << 21

SignedArea = int


class Step(Enum):
    PLUS_X = (1, 0)
    MINUS_X = (-1, 0)
    PLUS_Y = (0, 1)
    MINUS_Y = (0, -1)

    @property
    def dx(self) -> int:
        return self.value[0]

    @property
    def dy(self) -> int:
        return self.value[1]

    def __neg__(self) -> "Step":
        return Step((-self.dx, -self.dy))

    def rotated(self) -> "Step":
        """Quarter turn counterclockwise."""
        return Step((-self.dy, self.dx))

    def reflected(self) -> "Step":
        """Mirror image under x -> -x."""
        return Step((-self.dx, self.dy))


_LETTERS = {"R": Step.PLUS_X, "L": Step.MINUS_X, "U": Step.PLUS_Y, "D": Step.MINUS_Y}
# Array order of the four steps used by the vectorized tables.
_DX = np.array([s.dx for s in Step], dtype=np.int64)
_DY = np.array([s.dy for s in Step], dtype=np.int64)


@dataclass(frozen=True)
class Walk:
    steps: Tuple[Step, ...] = ()

    @classmethod
    def from_string(cls, letters: str) -> "Walk":
        """Build a walk from R/L/U/D letters, e.g. "RULD" is the counterclockwise unit square."""
        try:
            return cls(tuple(_LETTERS[ch] for ch in letters.upper()))
        except KeyError as exc:
            raise ValueError(f"Unknown step letter {exc.args[0]!r}; use R, L, U or D.") from None

    @property
    def N(self) -> int:
        return len(self.steps)

    def positions(self) -> Iterator[Tuple[int, int]]:
        """Positions p_0 = origin, p_1, ..., p_N."""
        x = y = 0
        yield x, y
        for s in self.steps:
            x += s.dx
            y += s.dy
            yield x, y

    @property
    def end(self) -> Tuple[int, int]:
        return (sum(s.dx for s in self.steps), sum(s.dy for s in self.steps))

    @property
    def is_closed(self) -> bool:
        return self.end == (0, 0)

    def reverse(self) -> "Walk":
        """Traverse the same loop backwards."""
        return Walk(tuple(-s for s in reversed(self.steps)))

    def rotate(self) -> "Walk":
        return Walk(tuple(s.rotated() for s in self.steps))

    def reflect(self) -> "Walk":
        return Walk(tuple(s.reflected() for s in self.steps))


def _require_even(N: int) -> None:
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}); closed walks need even length.")


def algebraic_area(w: Walk) -> SignedArea:
    """Shoelace area sum_k (p_{k-1} ^ s_k) / 2 of a closed walk, in plaquettes."""
    _require_even(w.N)
    if not w.is_closed:
        raise ValueError(f"Walk of length {w.N} ends at {w.end}, not at the origin.")
    twice = 0
    for (x, y), s in zip(w.positions(), w.steps):
        twice += x * s.dy - y * s.dx
    # Exact: the shoelace sum of a closed lattice loop is even.
    if twice % 2:
        raise ConsistencyError(f"Odd shoelace sum {twice} for a closed walk.")
    return twice // 2


def max_area(N: int) -> int:
    """Isoperimetric bound floor(N/4) * ceil(N/4) on |A| for closed walks of length N."""
    _require_even(N)
    return (N // 4) * ((N + 3) // 4)


def _walk_table(m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """End points and doubled shoelace sums of all 4^m walks from the origin."""
    x = np.zeros(1, dtype=np.int64)
    y = np.zeros(1, dtype=np.int64)
    twice = np.zeros(1, dtype=np.int64)
    for _ in range(m):
        n = x.size
        sx = np.tile(_DX, n)
        sy = np.tile(_DY, n)
        x0 = np.repeat(x, 4)
        y0 = np.repeat(y, 4)
        twice = np.repeat(twice, 4) + x0 * sy - y0 * sx
        x = x0 + sx
        y = y0 + sy
    return x, y, twice


def _count_block(prefix: Tuple[np.ndarray, ...], suffix: Tuple[np.ndarray, ...], bound: int) -> np.ndarray:
    px, py, pa = (arr[:, None] for arr in prefix)
    sx, sy, sa = (arr[None, :] for arr in suffix)
    closed = (px + sx == 0) & (py + sy == 0)
    # Suffix sum measured from its own start, plus the prefix end point crossed with the suffix displacement.
    twice = (pa + sa + px * sy - py * sx)[closed]
    if np.any(twice % 2):
        raise ConsistencyError("Odd shoelace sum found for a closed walk.")
    areas = twice // 2
    if areas.size and np.max(np.abs(areas)) > bound:
        raise ConsistencyError(
            f"Closed walk with |A| = {int(np.max(np.abs(areas)))} exceeds the isoperimetric bound {bound}."
        )
    return np.bincount(areas + bound, minlength=2 * bound + 1)


def enumerate_counts(N: int, threads: int = 1) -> AreaDistribution:
    """Exact C(N, A) by visiting every one of the 4^N walks."""
    _require_even(N)
    if N > ENUMERATION_LIMIT:
        raise BudgetExceededError(
            f"Brute-force enumeration is limited to N <= {ENUMERATION_LIMIT} (got {N}); use the DP engine."
        )
    bound = max_area(N)
    prefix = _walk_table(N // 2)
    suffix = _walk_table(N - N // 2)
    block = max(1, BLOCK_PAIRS // suffix[0].size)
    starts: List[int] = list(range(0, prefix[0].size, block))
    logger.info("Enumerating 4^%d walks in %d blocks on %d thread(s)", N, len(starts), threads)

    def run(start: int) -> np.ndarray:
        part = tuple(arr[start : start + block] for arr in prefix)
        return _count_block(part, suffix, bound)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run, starts))
    else:
        partials = [run(start) for start in starts]
    # Integer sums in block order: identical for any partitioning.
    hist = np.sum(partials, axis=0)
    counts: Dict[int, int] = {a - bound: int(c) for a, c in enumerate(hist) if c}
    return AreaDistribution(N=N, counts=counts)
