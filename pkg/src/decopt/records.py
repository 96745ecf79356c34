"""Per-iteration metrics and exact communication accounting.

Every algorithm in the package emits the same trajectory schema, one
IterateRecord per completed iteration, and counts transmitted scalars with
the same convention: a communication round sends each payload vector across
every directed edge (self-links are free), so a round carrying k d-vectors
per agent costs k * d * 2|E| scalars, exactly, as integers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["IterateRecord", "CommLedger", "write_trajectory_csv", "read_trajectory_csv"]

CSV_COLUMNS = (
    "iter",
    "comm_rounds_cum",
    "scalars_cum",
    "objective",
    "suboptimality",
    "consensus_err",
    "kkt_residual",
    "wall_ms",
)


@dataclass
class IterateRecord:
    iter: int
    comm_rounds_cum: int
    scalars_cum: int
    objective: float
    suboptimality: float  # NaN when no reference objective is available
    consensus_err: float
    kkt_residual: float  # NaN unless explicitly computed
    wall_ms: float


@dataclass
class CommLedger:
    """Integer-exact transmission counts, totalled and per iteration."""

    rounds_total: int = 0
    scalars_total: int = 0
    per_iteration: list = field(default_factory=list)
    _open_rounds: int = field(default=0, repr=False)
    _open_scalars: int = field(default=0, repr=False)

    def add_round(self, scalars: int) -> None:
        if scalars < 0 or scalars != int(scalars):
            raise ValueError(f"scalar count must be a nonnegative integer, got {scalars}")
        self.rounds_total += 1
        self.scalars_total += int(scalars)
        self._open_rounds += 1
        self._open_scalars += int(scalars)

    def close_iteration(self) -> None:
        """Seal the rounds since the last close as one iteration's breakdown."""
        self.per_iteration.append((self._open_rounds, self._open_scalars))
        self._open_rounds = 0
        self._open_scalars = 0


def write_trajectory_csv(path: str | Path, records: list[IterateRecord]) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.iter,
                    rec.comm_rounds_cum,
                    rec.scalars_cum,
                    repr(rec.objective),
                    repr(rec.suboptimality),
                    repr(rec.consensus_err),
                    repr(rec.kkt_residual),
                    repr(rec.wall_ms),
                ]
            )


def read_trajectory_csv(path: str | Path) -> list[IterateRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for row in reader:
            records.append(
                IterateRecord(
                    iter=int(row[0]),
                    comm_rounds_cum=int(row[1]),
                    scalars_cum=int(row[2]),
                    objective=float(row[3]),
                    suboptimality=float(row[4]),
                    consensus_err=float(row[5]),
                    kkt_residual=float(row[6]),
                    wall_ms=float(row[7]),
                )
            )
    return records
