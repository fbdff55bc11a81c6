"""CSV ingestion and the JSON/CSV/TSV writers used by the command line."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from fisherseg.scan import ReturnSeries
from fisherseg.segmenter import log_returns

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

Column = Union[int, str, None]


class IngestError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class InputSpec:
    """Where the data lives and how to read it.

    ``value_col``/``label_col`` are 0-based indices or header names. Defaults:
    the last column holds values, the first column holds labels when the
    file has at least two columns. Pass ``label_col=""`` for no labels.
    """

    path: Union[str, Path]
    format: str = "price"
    value_col: Column = None
    label_col: Column = None

    def __post_init__(self):
        if self.format not in ("price", "return"):
            raise ValueError(f"format must be 'price' or 'return', got {self.format!r}")


@dataclass
class Ingested:
    series: ReturnSeries
    prices: Optional[np.ndarray]
    price_labels: Optional[list]


def parse_number(text: str) -> Optional[float]:
    text = text.strip()
    if not _NUMBER.match(text):
        return None
    return float(text)


def _resolve(col: Column, header: Optional[list], width: int, what: str) -> int:
    if isinstance(col, str) and col.lstrip("-").isdigit():
        col = int(col)
    if isinstance(col, int):
        idx = col if col >= 0 else width + col
        if not 0 <= idx < width:
            raise IngestError(f"{what} column {col} out of range for {width} columns")
        return idx
    if header is None:
        raise IngestError(f"{what} column {col!r} given by name but the file has no header")
    names = [h.strip() for h in header]
    if col not in names:
        raise IngestError(f"{what} column {col!r} not in header {names}")
    return names.index(col)


def ingest(source: InputSpec) -> Ingested:
    """Read the value (and optional label) column; prices become log returns."""
    rows = []
    with open(source.path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not any(cells):
                continue
            rows.append((lineno, cells))
    if not rows:
        raise IngestError("no data rows")

    width = len(rows[0][1])
    value_col = source.value_col if source.value_col is not None else width - 1
    if source.label_col is None:
        label_col = 0 if width >= 2 else None
    else:
        label_col = source.label_col if source.label_col != "" else None

    header = None
    # named columns imply a header; otherwise a non-numeric value cell marks one
    if isinstance(value_col, str) and not value_col.lstrip("-").isdigit():
        header = rows.pop(0)[1]
    else:
        idx = _resolve(value_col, None, width, "value")
        if parse_number(rows[0][1][idx]) is None:
            header = rows.pop(0)[1]
    if not rows:
        raise IngestError("no data rows after the header")

    vi = _resolve(value_col, header, width, "value")
    li = None if label_col is None else _resolve(label_col, header, width, "label")

    values, labels = [], []
    for lineno, cells in rows:
        if len(cells) <= max(vi, li if li is not None else 0):
            raise IngestError(f"expected at least {max(vi, li or 0) + 1} columns", lineno)
        v = parse_number(cells[vi])
        if v is None or not math.isfinite(v):
            raise IngestError(f"cannot parse {cells[vi]!r} as a number", lineno)
        if source.format == "price" and v <= 0:
            raise IngestError(f"price must be positive, got {cells[vi]!r}", lineno)
        values.append(v)
        if li is not None:
            labels.append(cells[li])

    labels = labels if li is not None else None
    if source.format == "price":
        if len(values) < 2:
            raise IngestError("price input needs at least two rows")
        prices = np.array(values)
        return Ingested(log_returns(prices, labels), prices, labels)
    return Ingested(ReturnSeries(values, labels), None, None)


def fmt_p(p: float) -> str:
    """p-values: scientific notation, 6 significant digits."""
    return f"{p:.5e}"


def fmt_float(x: Optional[float]) -> str:
    if x is None:
        return ""
    return repr(float(x))


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_json(path: Path):
    with open(path) as fh:
        return json.load(fh)


def write_tsv(path: Path, rows) -> None:
    with open(path, "w") as fh:
        for a, b in rows:
            fh.write(f"{a}\t{b}\n")


def write_csv(path: Path, header: list[str], rows, preamble: Optional[list[str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        for line in preamble or ():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_tsv(path: Path) -> list[tuple[str, str]]:
    with open(path) as fh:
        return [tuple(line.rstrip("\n").split("\t")) for line in fh if line.strip()]
