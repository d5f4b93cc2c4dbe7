"""CSV ingestion with listwise deletion."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import EncodingPlan, PredictorSpec, RawTable
from .errors import ValidationError

MISSING = frozenset({"", "NA", "N/A", "NaN", "nan", "."})


def _to_float(text: str) -> float | None:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def load_csv(path: str | Path, config) -> RawTable:
    """Read the outcome and predictor columns named by ``config`` (anything
    with ``outcome`` and ``predictors`` attributes, normally a
    :class:`~riskreg.config.RunConfig`) from a UTF-8 CSV with a header row.

    Rows missing any used value are dropped and counted in
    ``RawTable.n_dropped``.  Predictors with ``kind=None`` are typed from
    their values: numeric 0/1 columns become binary, other numeric columns
    continuous, anything else categorical.  Error messages name the
    offending cell by 1-based data row (the header is row 0) and column.
    """
    outcome, predictors = config.outcome, tuple(config.predictors)
    if not outcome:
        raise ValidationError("no outcome column configured", module="cli_reporting")
    if outcome in {p.name for p in predictors}:
        raise ValidationError(f"outcome {outcome!r} is also listed as a predictor", module="cli_reporting")
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot open {path}: {exc.strerror}", module="cli_reporting") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path} is empty; a header row is required", module="cli_reporting") from None
        except (UnicodeDecodeError, csv.Error) as exc:
            raise ValidationError(f"{path}: unreadable header ({exc})", module="cli_reporting") from exc
        header = [h.strip() for h in header]
        used = [outcome] + [p.name for p in predictors]
        missing = [c for c in used if c not in header]
        if missing:
            raise ValidationError(f"column(s) not found in {path}: {', '.join(missing)}", module="cli_reporting")
        pos = {c: header.index(c) for c in used}
        raw: dict[str, list[str]] = {c: [] for c in used}
        rownums: list[int] = []
        dropped = 0
        try:
            for rownum, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ValidationError(f"row {rownum} has {len(row)} fields, header has {len(header)}",
                                          module="cli_reporting")
                cells = {c: row[pos[c]].strip() for c in used}
                if any(v in MISSING for v in cells.values()):
                    dropped += 1
                    continue
                for c, v in cells.items():
                    raw[c].append(v)
                rownums.append(rownum)
        except (UnicodeDecodeError, csv.Error) as exc:
            raise ValidationError(f"{path}: malformed CSV ({exc})", module="cli_reporting") from exc
    if not rownums:
        raise ValidationError(f"{path}: no complete rows", module="cli_reporting")

    columns: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    y = np.empty(len(rownums))
    for i, v in enumerate(raw[outcome]):
        f = _to_float(v)
        if f not in (0.0, 1.0):
            raise ValidationError(f"outcome {outcome!r} must be coded 0/1; got {v!r} at row {rownums[i]}",
                                  module="cli_reporting")
        y[i] = f
    columns[outcome] = y
    kinds[outcome] = "binary"

    for spec in predictors:
        vals = raw[spec.name]
        kind = spec.kind
        if kind is None:
            nums = [_to_float(v) for v in vals]
            if any(f is None for f in nums):
                kind = "categorical"
            elif all(f in (0.0, 1.0) for f in nums):
                kind = "binary"
            else:
                kind = "continuous"
        if kind == "categorical":
            columns[spec.name] = np.array(vals, dtype=str)
        else:
            arr = np.empty(len(vals))
            for i, v in enumerate(vals):
                f = _to_float(v)
                if f is None:
                    raise ValidationError(f"unparseable numeric value {v!r} at row {rownums[i]}, column {spec.name!r}",
                                          module="cli_reporting")
                if kind == "binary" and f not in (0.0, 1.0):
                    raise ValidationError(f"binary column {spec.name!r} has value {v!r} at row {rownums[i]}",
                                          module="cli_reporting")
                arr[i] = f
            columns[spec.name] = arr
        kinds[spec.name] = kind
    return RawTable(columns, kinds, dropped)


def plan_for(table: RawTable, config) -> EncodingPlan:
    """Encoding plan for ``config`` with each predictor kind taken from ``table``."""
    specs = tuple(PredictorSpec(p.name, table.kinds[p.name], p.reference) for p in config.predictors)
    return EncodingPlan(config.outcome, specs)
