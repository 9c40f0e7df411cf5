"""Attribute-value tables: ingestion, projection, scaling and splitting.

A table is a universe of objects described by condition and decision
attributes. Cells are floats or ``None`` (the missing marker, written
``?`` in CSV). After discretization the same shape holds granule labels
(1 = highest value band) instead of raw numbers.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError

MISSING_TOKEN = "?"

ROLES = ("condition", "decision")
SCALES = ("linear", "log10")

# Columns spanning more than this many decades default to log10 before
# quantization; a raw-scale quantizer would collapse the small values.
LOG_SCALE_DECADES = 3.0


@dataclass(frozen=True)
class AttributeSpec:
    """Name, role and value scale of one table column."""

    name: str
    role: str
    scale: str = "linear"
    units: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise UsageError(f"attribute {self.name!r}: role must be one of {ROLES}")
        if self.scale not in SCALES:
            raise UsageError(f"attribute {self.name!r}: scale must be one of {SCALES}")


@dataclass(frozen=True)
class DecisionTable:
    """Objects x attributes matrix with stable object ids.

    Rows are tuples of ``float | None``; ``object_ids`` stay attached to
    their rows under projection and splitting. Tables built from external
    data should come through :func:`load_table`, which additionally
    requires at least one condition and one decision attribute.
    """

    specs: tuple[AttributeSpec, ...]
    rows: tuple[tuple, ...]
    object_ids: tuple[int, ...] = ()

    def __post_init__(self):
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise DataError("duplicate attribute names in schema")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.specs):
                raise DataError(f"row {i} has {len(row)} cells, expected {len(self.specs)}")
        if not self.object_ids:
            object.__setattr__(self, "object_ids", tuple(range(len(self.rows))))
        elif len(self.object_ids) != len(self.rows):
            raise DataError("object_ids length does not match row count")
        if len(set(self.object_ids)) != len(self.object_ids):
            raise DataError("object ids must be unique")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    @property
    def condition_names(self) -> list[str]:
        return [s.name for s in self.specs if s.role == "condition"]

    @property
    def decision_names(self) -> list[str]:
        return [s.name for s in self.specs if s.role == "decision"]

    def spec(self, name: str) -> AttributeSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise UsageError(f"unknown attribute {name!r}")

    def col_index(self, name: str) -> int:
        for i, s in enumerate(self.specs):
            if s.name == name:
                return i
        raise UsageError(f"unknown attribute {name!r}")

    def column(self, name: str) -> list:
        j = self.col_index(name)
        return [row[j] for row in self.rows]

    def value(self, object_id: int, name: str):
        i = self.object_ids.index(object_id)
        return self.rows[i][self.col_index(name)]

    def _clone(self, specs, rows, object_ids) -> "DecisionTable":
        return DecisionTable(specs=specs, rows=rows, object_ids=object_ids)

    def project(self, names: list[str]) -> "DecisionTable":
        """Keep only the named columns; object ids are preserved."""
        idx = [self.col_index(n) for n in names]
        specs = tuple(self.specs[j] for j in idx)
        rows = tuple(tuple(row[j] for j in idx) for row in self.rows)
        return self._clone(specs, rows, self.object_ids)

    def subset(self, ids: list[int]) -> "DecisionTable":
        """Rows for the given object ids, in the table's stored order."""
        keep = set(ids)
        pairs = [(oid, row) for oid, row in zip(self.object_ids, self.rows) if oid in keep]
        return self._clone(
            self.specs,
            tuple(row for _, row in pairs),
            tuple(oid for oid, _ in pairs),
        )


@dataclass(frozen=True)
class GranularTable(DecisionTable):
    """A table whose cells are granule labels (ints >= 1) or missing.

    ``discretizers`` records, per attribute, the quantizer that produced
    the labels so raw observations can be mapped into the same vocabulary.
    """

    discretizers: dict = field(default_factory=dict)

    def __post_init__(self):
        super().__post_init__()
        for i, row in enumerate(self.rows):
            for s, v in zip(self.specs, row):
                if v is None:
                    continue
                if not isinstance(v, (int, np.integer)) or v < 1:
                    raise DataError(
                        f"row {i}, attribute {s.name!r}: granule label must be a positive int"
                    )
                d = self.discretizers.get(s.name)
                if d is not None and v > d.granules:
                    raise DataError(
                        f"row {i}, attribute {s.name!r}: label {v} exceeds granule count {d.granules}"
                    )

    def _clone(self, specs, rows, object_ids) -> "GranularTable":
        kept = {s.name for s in specs}
        discs = {k: v for k, v in self.discretizers.items() if k in kept}
        return GranularTable(specs=specs, rows=rows, object_ids=object_ids, discretizers=discs)


def load_table(csv_text: str, schema: list[AttributeSpec]) -> DecisionTable:
    """Parse a CSV body (one header row) against an explicit schema.

    Cells are decimal or scientific-notation numbers; the literal ``?``
    marks a missing value. Object id = 0-based row index.
    """
    schema = list(schema)
    if not any(s.role == "condition" for s in schema):
        raise DataError("schema needs at least one condition attribute")
    if not any(s.role == "decision" for s in schema):
        raise DataError("schema needs at least one decision attribute")
    lines = [ln for ln in csv_text.splitlines() if ln.strip() != ""]
    if not lines:
        raise DataError("empty CSV: missing header row")
    header = [h.strip() for h in lines[0].split(",")]
    by_name = {s.name: s for s in schema}
    for h in header:
        if h not in by_name:
            raise DataError(f"unknown column {h!r} in header")
    if set(header) != set(by_name):
        missing = sorted(set(by_name) - set(header))
        raise DataError(f"header is missing columns: {missing}")

    # Cells are stored in schema order regardless of file column order.
    order = [header.index(s.name) for s in schema]
    rows = []
    for ln_no, ln in enumerate(lines[1:], start=1):
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(header):
            raise DataError(f"row {ln_no - 1}: expected {len(header)} cells, got {len(cells)}")
        parsed = []
        for j in order:
            cell = cells[j]
            if cell == MISSING_TOKEN:
                parsed.append(None)
                continue
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(
                    f"row {ln_no - 1}, column {header[j]!r}: cannot parse {cell!r} as a number"
                ) from None
        rows.append(tuple(parsed))
    return DecisionTable(specs=tuple(schema), rows=tuple(rows))


def to_csv(table: DecisionTable) -> str:
    """Serialize back to the ingestion format (12 significant digits)."""
    buf = io.StringIO()
    buf.write(",".join(table.names) + "\n")
    for row in table.rows:
        cells = []
        for v in row:
            if v is None:
                cells.append(MISSING_TOKEN)
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(f"{v:.12g}")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def load_schema(json_text: str) -> list[AttributeSpec]:
    """Read a schema file: a JSON array of {name, role, scale, units}."""
    try:
        records = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise DataError(f"schema is not valid JSON: {exc}") from None
    if not isinstance(records, list):
        raise DataError("schema must be a JSON array of attribute records")
    specs = []
    for rec in records:
        if "name" not in rec or "role" not in rec:
            raise DataError("schema record needs at least 'name' and 'role'")
        specs.append(
            AttributeSpec(
                name=rec["name"],
                role=rec["role"],
                scale=rec.get("scale", "linear"),
                units=rec.get("units", ""),
            )
        )
    return specs


def dump_schema(specs: list[AttributeSpec]) -> str:
    records = [
        {"name": s.name, "role": s.role, "scale": s.scale, "units": s.units} for s in specs
    ]
    return json.dumps(records, indent=2) + "\n"


def split_random(
    table: DecisionTable, train_fraction: float, seed: int
) -> tuple[DecisionTable, DecisionTable]:
    """Disjoint train/test partition of the object ids.

    |train| = round(fraction * |U|) with a floor of 1; the same seed
    always produces the same split.
    """
    if len(table) == 0:
        raise DataError("cannot split an empty table")
    if not 0.0 < train_fraction <= 1.0:
        raise UsageError("train_fraction must be in (0, 1]")
    n = len(table)
    n_train = max(1, int(math.floor(train_fraction * n + 0.5)))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train_ids = sorted(table.object_ids[i] for i in perm[:n_train])
    test_ids = sorted(table.object_ids[i] for i in perm[n_train:])
    return table.subset(train_ids), table.subset(test_ids)


def scale_minmax(values: list) -> tuple[list, tuple[float, float]]:
    """Map values to [0, 1]; a constant column maps to all 0.5.

    Missing entries are ignored for the min/max and passed through.
    """
    present = [v for v in values if v is not None]
    if not present:
        raise DataError("cannot scale a column with no present values")
    lo, hi = min(present), max(present)
    if hi == lo:
        return [None if v is None else 0.5 for v in values], (lo, hi)
    span = hi - lo
    return [None if v is None else (v - lo) / span for v in values], (lo, hi)


def transform_scale(values: list, scale: str) -> list:
    """Apply an attribute's value scale (identity or log10) cell-wise."""
    if scale == "linear":
        return list(values)
    if scale == "log10":
        out = []
        for v in values:
            if v is None:
                out.append(None)
            elif v <= 0:
                raise DataError(f"log10 scale requires strictly positive values, got {v}")
            else:
                out.append(math.log10(v))
        return out
    raise UsageError(f"unknown scale {scale!r}")


def inverse_scale(value: float, scale: str) -> float:
    if scale == "linear":
        return value
    if scale == "log10":
        return 10.0**value
    raise UsageError(f"unknown scale {scale!r}")


def infer_scale(values: list) -> str:
    """Pick log10 for strictly positive columns spanning > 3 decades."""
    present = [v for v in values if v is not None]
    if not present or min(present) <= 0:
        return "linear"
    lo, hi = min(present), max(present)
    if lo == hi:
        return "linear"
    return "log10" if math.log10(hi / lo) > LOG_SCALE_DECADES else "linear"


def scaled_matrix(table: DecisionTable, names: list[str] | None = None) -> np.ndarray:
    """Rows as a float matrix, scale-transformed then min-max'd per column.

    Missing cells become NaN. This is the conditioning applied before any
    distance computation on mixed-unit attributes.
    """
    names = names if names is not None else table.names
    cols = []
    for name in names:
        spec = table.spec(name)
        scaled, _ = scale_minmax(transform_scale(table.column(name), spec.scale))
        cols.append([math.nan if v is None else v for v in scaled])
    return np.array(cols, dtype=float).T
