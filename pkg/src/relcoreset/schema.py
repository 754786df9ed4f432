"""Relational instances: tables, feature partitions, loading from disk.

An instance is an ordered list of tables.  Features with the same name in
several tables are join keys; every feature is a real-valued column.  The
feature order of the joined design matrix is table order, then column order
within each table, with features already seen in an earlier table skipped
(the disjointified blocks).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


class LoadError(ValueError):
    """Raised when an input file cannot be turned into a valid table."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = path or "<memory>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Table:
    name: str
    feature_names: tuple[str, ...]
    data: np.ndarray  # (rows, len(feature_names)) float64

    def __post_init__(self):
        if len(set(self.feature_names)) != len(self.feature_names):
            raise LoadError(f"table {self.name!r} has duplicate feature names", path=None)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.feature_names):
            raise ValueError(f"table {self.name!r}: data shape {self.data.shape} does not match features")
        if self.data.shape[0] == 0:
            raise LoadError(f"table {self.name!r} is empty", path=None)
        self.data.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, feature: str) -> np.ndarray:
        return self.data[:, self.feature_names.index(feature)]

    def take_rows(self, idx: np.ndarray) -> "Table":
        return Table(self.name, self.feature_names, np.ascontiguousarray(self.data[idx]))


def table_from_arrays(name: str, feature_names, data) -> Table:
    data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    return Table(name, tuple(feature_names), data)


def table_from_csv(path: str, name: str | None = None, features=None) -> Table:
    """Read one table; header row names the features.

    Raises LoadError with the offending file and line for malformed rows,
    non-numeric or non-finite cells, duplicate headers, and empty tables.
    """
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise LoadError(str(exc), path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError("file has no header row", path=path, line=1) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise LoadError(f"duplicate feature names in header: {dupes}", path=path, line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise LoadError(f"expected {len(header)} fields, got {len(row)}", path=path, line=lineno)
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                raise LoadError("non-numeric cell", path=path, line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise LoadError("non-finite value", path=path, line=lineno)
            rows.append(vals)
    if not rows:
        raise LoadError("table has no data rows", path=path, line=1)
    data = np.array(rows, dtype=np.float64)
    if features is not None:
        features = list(features)
        missing = [f for f in features if f not in header]
        if missing:
            raise LoadError(f"features not in header: {missing}", path=path, line=1)
        cols = [header.index(f) for f in features]
        data = np.ascontiguousarray(data[:, cols])
        header = features
    return Table(name, tuple(header), data)


@dataclass(frozen=True)
class FeaturePartition:
    """Feature bookkeeping for an ordered list of tables.

    ``disjoint[i]`` holds table i's features minus everything claimed by
    earlier tables; ``full`` is their concatenation and fixes the column
    order of joined points.  ``block_slices[i]`` locates block i inside a
    full-order point; ``block_cols[i]`` are the matching column indices
    inside table i itself.
    """

    per_table: tuple[tuple[str, ...], ...]
    disjoint: tuple[tuple[str, ...], ...]
    full: tuple[str, ...]
    block_slices: tuple[slice, ...]
    block_cols: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.full)

    @property
    def n_tables(self) -> int:
        return len(self.per_table)

    def full_index(self, feature: str) -> int:
        return self.full.index(feature)

    def block_width(self, i: int) -> int:
        return len(self.disjoint[i])

    def key_features(self) -> tuple[str, ...]:
        seen: dict[str, int] = {}
        for names in self.per_table:
            for f in names:
                seen[f] = seen.get(f, 0) + 1
        return tuple(f for f in self.full if seen[f] > 1)


def build_partition(tables: list[Table]) -> FeaturePartition:
    per_table = tuple(t.feature_names for t in tables)
    taken: set[str] = set()
    disjoint = []
    slices = []
    cols = []
    pos = 0
    for t in tables:
        block = tuple(f for f in t.feature_names if f not in taken)
        taken.update(block)
        disjoint.append(block)
        slices.append(slice(pos, pos + len(block)))
        cols.append(tuple(t.feature_names.index(f) for f in block))
        pos += len(block)
    full = tuple(f for block in disjoint for f in block)
    return FeaturePartition(per_table, tuple(disjoint), full, tuple(slices), tuple(cols))


def parse_join_spec(path: str) -> list[dict]:
    """Parse a join spec file: {"tables": [{"name", "path", "features"?}, ...]}."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise LoadError(str(exc), path=path) from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc
    if not isinstance(doc, dict) or "tables" not in doc or not isinstance(doc["tables"], list):
        raise LoadError('spec must be an object with a "tables" list', path=path)
    if not doc["tables"]:
        raise LoadError("spec lists no tables", path=path)
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for i, entry in enumerate(doc["tables"]):
        if not isinstance(entry, dict) or "path" not in entry:
            raise LoadError(f'tables[{i}] must be an object with a "path"', path=path)
        tpath = entry["path"]
        if not os.path.isabs(tpath):
            tpath = os.path.join(base, tpath)
        entries.append(
            {
                "name": entry.get("name") or os.path.splitext(os.path.basename(tpath))[0],
                "path": tpath,
                "features": entry.get("features"),
            }
        )
    names = [e["name"] for e in entries]
    if len(set(names)) != len(names):
        raise LoadError("duplicate table names in spec", path=path)
    return entries


def load_tables(spec_path: str) -> tuple[list[Table], FeaturePartition]:
    """Load an instance from a join spec file; table order follows the spec."""
    entries = parse_join_spec(spec_path)
    tables = [table_from_csv(e["path"], name=e["name"], features=e["features"]) for e in entries]
    return tables, build_partition(tables)
