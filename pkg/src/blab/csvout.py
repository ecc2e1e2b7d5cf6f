"""CSV result rows.

All tabular outputs share one schema: run_id, timestamp, metric, index,
value. Timestamps are simulation times. Floats are written with repr, so
they round-trip exactly; non-finite values are written as the literal
string "degenerate". Writers stream row by row and never buffer the full
table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


@dataclass
class ResultRow:
    run_id: str
    timestamp: float
    metric: str
    index: object = None        # shell number, sample id, or None
    value: float = 0.0


HEADER = ("run_id", "timestamp", "metric", "index", "value")


def _fmt(x) -> str:
    if isinstance(x, float):
        if not math.isfinite(x):
            return "degenerate"
        return repr(x)
    return str(x)


class CsvWriter:
    """Streaming writer; one instance owns one output file."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(HEADER)

    def write(self, row: ResultRow) -> None:
        self._writer.writerow((
            row.run_id,
            _fmt(float(row.timestamp)),
            row.metric,
            "" if row.index is None else str(row.index),
            _fmt(float(row.value)),
        ))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_csv(rows, path) -> None:
    """Stream an iterable of ResultRows to path (header always written)."""
    with CsvWriter(path) as out:
        for row in rows:
            out.write(row)
