"""Small- and sparse-data diagnostics: EPV, VIF, zero-cell separation, fitted range."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DesignMatrix, Term
from .families import get_family

VIF_R2_LIMIT = 1.0 - 1e-10

# 2x2 cell labels, keyed by (indicator value, outcome)
_CELLS = {
    (1, 1): "indicator=1,event",
    (1, 0): "indicator=1,no event",
    (0, 1): "indicator=0,event",
    (0, 0): "indicator=0,no event",
}


def epv(event_count: int, p: int) -> float:
    """Outcome events per design column."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return event_count / p


def format_epv(event_count: int, p: int) -> str:
    """EPV as printed in reports, three significant digits, e.g. ``'1.24 (26/21)'``."""
    return f"{epv(event_count, p):.3g} ({event_count}/{p})"


def vif(X) -> np.ndarray:
    """Variance inflation factor of every column.

    Each column is regressed by least squares on the others plus an
    intercept; ``R^2 >= 1 - 1e-10`` is reported as ``inf``.
    """
    if isinstance(X, DesignMatrix):
        X = X.X
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    out = np.empty(p)
    for j in range(p):
        target = X[:, j]
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        tss = np.sum((target - target.mean()) ** 2)
        r2 = 1.0 - resid @ resid / tss if tss > 0 else 1.0
        out[j] = np.inf if r2 >= VIF_R2_LIMIT else 1.0 / (1.0 - r2)
    return out


@dataclass(frozen=True)
class SeparatedTerm:
    term: str
    column: int
    zero_cells: tuple[str, ...]
    table: tuple[tuple[int, int], tuple[int, int]]


def separation_scan(X, y=None, terms: tuple[Term, ...] | None = None) -> list[SeparatedTerm]:
    """Flag indicator columns whose 2x2 cross-tabulation with ``y`` has an empty cell.

    Only two-valued columns are scanned (the larger value plays the role of
    1); when ``terms`` is given, only binary and dummy terms are considered.
    """
    if isinstance(X, DesignMatrix):
        terms = X.terms if terms is None else terms
        X, y = X.X, X.y
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    flagged = []
    for j in range(X.shape[1]):
        if terms is not None and not terms[j].is_indicator:
            continue
        levels = np.unique(X[:, j])
        if levels.size != 2:
            continue
        ind = X[:, j] == levels[1]
        ev = y == 1
        table = (
            (int(np.sum(ind & ev)), int(np.sum(ind & ~ev))),
            (int(np.sum(~ind & ev)), int(np.sum(~ind & ~ev))),
        )
        zero = tuple(
            _CELLS[(a, b)] for a, row in zip((1, 0), table) for b, c in zip((1, 0), row) if c == 0
        )
        if zero:
            name = terms[j].name if terms is not None else f"x{j + 1}"
            flagged.append(SeparatedTerm(name, j, zero, table))
    return flagged


def fitted_range_report(fit, family=None) -> int:
    """Rows whose fitted risk is impossible: ``mu > 1`` (Poisson) or outside
    ``[0, 1]`` (least squares).  Always 0 for the logistic model.

    Takes a :class:`~riskreg.quasi.FitResult`, or fitted means plus a family.
    """
    if family is None:
        mu, family = fit.mu, fit.family
    else:
        mu = fit
    fam = get_family(family)
    mu = np.asarray(mu, dtype=float)
    if fam.measure == "RR":
        return int(np.sum(mu > 1.0))
    if fam.measure == "RD":
        return int(np.sum((mu < 0.0) | (mu > 1.0)))
    return 0


@dataclass
class DiagnosticsReport:
    n: int
    events: int
    p: int
    epv: float
    vif: dict[str, float]
    separated: list[SeparatedTerm] = field(default_factory=list)
    fitted_out_of_range: int | None = None

    @property
    def epv_text(self) -> str:
        return format_epv(self.events, self.p)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "events": self.events,
            "p": self.p,
            "epv": self.epv,
            "epv_text": self.epv_text,
            "vif": {k: (v if np.isfinite(v) else "inf") for k, v in self.vif.items()},
            "max_vif": (max(self.vif.values()) if np.all(np.isfinite(list(self.vif.values()))) else "inf")
            if self.vif else None,
            "separated": [
                {"term": s.term, "zero_cells": list(s.zero_cells), "table": [list(r) for r in s.table]}
                for s in self.separated
            ],
            "fitted_out_of_range": self.fitted_out_of_range,
        }


def diagnose(dm: DesignMatrix, mu=None, family=None) -> DiagnosticsReport:
    events = int(dm.y.sum())
    v = vif(dm.X) if dm.p >= 2 else np.ones(dm.p)
    out_of_range = fitted_range_report(mu, family) if mu is not None and family is not None else None
    return DiagnosticsReport(dm.n, events, dm.p, epv(events, dm.p), dict(zip(dm.names, map(float, v))),
                             separation_scan(dm), out_of_range)
