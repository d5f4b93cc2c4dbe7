"""Analysis report document and forest-plot data.

The report is a single JSON document with no timestamps, so that the same
input and configuration always produce the same bytes.  Floats are written
with Python's shortest round-trip representation; non-finite values become
the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import RiskRegError, ValidationError

FOREST_HEADER = ("term", "measure", "estimate", "lower", "upper", "method")


def _num(v):
    """JSON-safe scalar."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def jsonable(obj):
    """Recursively convert numpy values and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (float, int, np.floating, np.integer, np.bool_)) and not isinstance(obj, bool):
        return _num(obj)
    return obj


@dataclass
class TermResult:
    """One design column: coefficient, effect measure and optional interval.

    ``lower``/``upper`` are on the effect scale, ``coef_lower``/``coef_upper``
    on the coefficient scale; all four are ``None`` without a bootstrap.
    ``se`` is the sandwich standard error of unpenalized fits.
    """

    term: str
    coef: float
    estimate: float
    lower: float | None = None
    upper: float | None = None
    coef_lower: float | None = None
    coef_upper: float | None = None
    se: float | None = None


@dataclass
class AnalysisReport:
    command: str
    family: str
    measure: str
    measure_label: str
    method: str
    n: int
    n_dropped: int
    intercept: float
    terms: list[TermResult]
    lam: float | None = None
    alpha: float | None = None
    convergence: dict = field(default_factory=dict)
    cv: dict | None = None
    bootstrap: dict | None = None
    diagnostics: dict | None = None
    config: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [t.term for t in self.terms]
        if len(set(names)) != len(names):
            raise ValidationError("report lists a term twice", module="cli_reporting")

    def to_dict(self) -> dict:
        return jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def error_document(exc: BaseException) -> dict:
    """Machine-readable error block for a failed command."""
    if isinstance(exc, RiskRegError):
        return {"error": {"type": type(exc).__name__, "module": exc.module, "message": str(exc),
                          "hint": exc.hint, "exit_code": exc.exit_code}}
    # anything else reaching the CLI is an I/O problem with a configured path
    return {"error": {"type": type(exc).__name__, "module": "cli_reporting", "message": str(exc),
                      "hint": None, "exit_code": 2}}


def _cell(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def emit_forest_data(report: AnalysisReport, path: str | Path) -> Path:
    """Tab-separated forest-plot rows, one per design term, in design order.

    Estimates and limits are on the effect scale (RR, RD or OR); limits are
    empty when no bootstrap was run.
    """
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(FOREST_HEADER)
            for t in report.terms:
                w.writerow([t.term, report.measure, _cell(t.estimate), _cell(t.lower), _cell(t.upper),
                            report.method])
    except OSError as exc:
        raise ValidationError(f"cannot write forest data to {path}: {exc.strerror}", module="cli_reporting") from exc
    return path


def read_forest_data(path: str | Path) -> list[dict]:
    """Parse a file written by :func:`emit_forest_data`; empty limits become ``None``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or tuple(rows[0]) != FOREST_HEADER:
        raise ValidationError(f"{path} is not forest data", module="cli_reporting")
    out = []
    for r in rows[1:]:
        rec = dict(zip(FOREST_HEADER, r))
        for k in ("estimate", "lower", "upper"):
            rec[k] = float(rec[k]) if rec[k] else None
        out.append(rec)
    return out
