import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union


@dataclass
class AreaDistribution:
    """Exact number of closed N-step walks per algebraic area."""

    N: int
    counts: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # Canonical form: sorted by area, zero entries dropped, Python ints only.
        self.counts = {int(a): int(c) for a, c in sorted(self.counts.items()) if int(c) != 0}

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def areas(self) -> List[int]:
        return list(self.counts)

    def count(self, area: int) -> int:
        return self.counts.get(area, 0)

    def probabilities(self) -> Dict[int, Fraction]:
        total = self.total
        return {a: Fraction(c, total) for a, c in self.counts.items()}

    def to_dict(self) -> Dict[str, Any]:
        # Decimal strings: counts leave the 64-bit range near N = 34.
        return {
            "N": self.N,
            "total": str(self.total),
            "counts": [[a, str(c)] for a, c in self.counts.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["area", "count"], lineterminator="\n")
        writer.writeheader()
        for a, c in self.counts.items():
            writer.writerow({"area": a, "count": str(c)})
        return buf.getvalue()

    def serialize(self, fmt: str = "csv") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"Unknown format: {fmt}")

    @classmethod
    def from_json(cls, text: str) -> "AreaDistribution":
        data = json.loads(text)
        dist = cls(N=int(data["N"]), counts={int(a): int(c) for a, c in data["counts"]})
        if dist.total != int(data["total"]):
            raise ValueError(f"Stored total {data['total']} does not match the counts ({dist.total}).")
        return dist

    @classmethod
    def from_csv(cls, text: str, N: int) -> "AreaDistribution":
        reader = csv.DictReader(io.StringIO(text))
        return cls(N=N, counts={int(row["area"]): int(row["count"]) for row in reader})


def write_distribution(dist: AreaDistribution, path: Optional[Union[str, Path]], fmt: str = "csv") -> str:
    """Serialize a distribution and write it to `path` (LF endings); returns the text."""
    text = dist.serialize(fmt)
    if path is not None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text
