"""Cohort tables, dummy encoding and predictor standardization.

A :class:`RawTable` holds typed columns as read from disk.  :func:`encode`
turns it into a numeric :class:`DesignMatrix` following an
:class:`EncodingPlan`; :func:`standardize` and :func:`destandardize` move
coefficients between the standardized scale the solvers work on and the
original scale that gets reported.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import ValidationError

ColumnKind = Literal["continuous", "binary", "categorical"]
_KINDS = ("continuous", "binary", "categorical")


@dataclass(frozen=True)
class RawTable:
    """Typed columns of equal length.

    Continuous and binary columns are float arrays; categorical columns are
    arrays of strings.
    """

    columns: Mapping[str, np.ndarray]
    kinds: Mapping[str, ColumnKind]
    n_dropped: int = 0

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValidationError(f"columns have unequal lengths {sorted(lengths)}", module="data_model")
        for name, kind in self.kinds.items():
            if name not in self.columns:
                raise ValidationError(f"kind given for unknown column {name!r}", module="data_model")
            if kind not in _KINDS:
                raise ValidationError(f"column {name!r}: unknown kind {kind!r}", module="data_model")
            if kind == "binary":
                vals = np.unique(self.columns[name])
                if not np.all(np.isin(vals, (0.0, 1.0))):
                    raise ValidationError(f"binary column {name!r} has values other than 0/1", module="data_model")

    @property
    def n(self) -> int:
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def take(self, rows: np.ndarray) -> RawTable:
        """Row subset (or resample) of the table."""
        rows = np.asarray(rows, dtype=np.intp)
        return RawTable({k: v[rows] for k, v in self.columns.items()}, self.kinds, self.n_dropped)

    @classmethod
    def from_arrays(cls, data: Mapping[str, Sequence], kinds: Mapping[str, ColumnKind] | None = None) -> RawTable:
        """Build a table, inferring ``categorical`` for string columns and
        ``binary`` for numeric columns holding only 0/1."""
        kinds = dict(kinds or {})
        cols: dict[str, np.ndarray] = {}
        for name, values in data.items():
            arr = np.asarray(values)
            kind = kinds.get(name)
            if kind is None:
                if arr.dtype.kind in "USO":
                    kind = "categorical"
                elif np.all(np.isin(arr, (0, 1))):
                    kind = "binary"
                else:
                    kind = "continuous"
                kinds[name] = kind
            cols[name] = arr.astype(str) if kind == "categorical" else arr.astype(float)
        return cls(cols, kinds)


@dataclass(frozen=True)
class PredictorSpec:
    name: str
    kind: ColumnKind = "continuous"
    reference: str | None = None


@dataclass(frozen=True)
class EncodingPlan:
    outcome: str
    predictors: tuple[PredictorSpec, ...]

    @classmethod
    def simple(cls, outcome: str, predictors: Sequence[str | PredictorSpec], table: RawTable | None = None) -> EncodingPlan:
        """Plan from column names, taking each kind from ``table`` when given."""
        specs = []
        for p in predictors:
            if isinstance(p, PredictorSpec):
                specs.append(p)
            else:
                kind = table.kinds.get(p, "continuous") if table is not None else "continuous"
                specs.append(PredictorSpec(p, kind))
        return cls(outcome, tuple(specs))


@dataclass(frozen=True)
class Term:
    """Provenance of one design-matrix column."""

    name: str
    source: str
    kind: ColumnKind
    level: str | None = None
    reference: str | None = None

    @property
    def is_indicator(self) -> bool:
        return self.kind in ("binary", "categorical")


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    terms: tuple[Term, ...]

    def __post_init__(self):
        n, p = self.X.shape
        if p < 1:
            raise ValidationError("design matrix has no columns", module="data_model")
        if len(self.y) != n or len(self.terms) != p:
            raise ValidationError("design matrix dimensions disagree", module="data_model")
        names = self.names
        if len(set(names)) != len(names):
            dup = [k for k, c in Counter(names).items() if c > 1]
            raise ValidationError(f"duplicate column names {dup}", module="data_model")

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.terms]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, rows: np.ndarray) -> DesignMatrix:
        rows = np.asarray(rows, dtype=np.intp)
        return DesignMatrix(self.X[rows], self.y[rows], self.terms)


def default_reference(values: np.ndarray) -> str:
    """Most frequent level; ties go to the first level in sorted order."""
    counts = Counter(values.tolist())
    return min(counts, key=lambda lev: (-counts[lev], lev))


def _check_outcome(y: np.ndarray, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError(f"outcome {name!r} must be coded 0/1", module="data_model")
    if y.min() == y.max():
        raise ValidationError(f"outcome {name!r} has a single class", module="data_model")
    return y


def encode(table: RawTable, plan: EncodingPlan) -> DesignMatrix:
    """Dummy-code ``table`` according to ``plan``.

    A categorical predictor with ``k`` observed levels contributes ``k - 1``
    indicator columns named ``"var[level]"``; the reference level is dropped.
    Continuous and binary predictors pass through unchanged.
    """
    if plan.outcome not in table.columns:
        raise ValidationError(f"unknown outcome column {plan.outcome!r}", module="data_model")
    y = _check_outcome(table.columns[plan.outcome], plan.outcome)

    cols: list[np.ndarray] = []
    terms: list[Term] = []
    for spec in plan.predictors:
        if spec.name not in table.columns:
            raise ValidationError(f"unknown column {spec.name!r}", module="data_model")
        values = table.columns[spec.name]
        if spec.kind == "categorical":
            values = values.astype(str)
            levels = sorted(set(values.tolist()))
            if len(levels) < 2:
                raise ValidationError(f"categorical {spec.name!r} has a single level", module="data_model")
            ref = spec.reference if spec.reference is not None else default_reference(values)
            if ref not in levels:
                raise ValidationError(
                    f"reference level {ref!r} not observed in {spec.name!r}", module="data_model"
                )
            for lev in levels:
                if lev == ref:
                    continue
                cols.append((values == lev).astype(float))
                terms.append(Term(f"{spec.name}[{lev}]", spec.name, "categorical", lev, ref))
        elif spec.kind in ("continuous", "binary"):
            arr = np.asarray(values, dtype=float)
            if spec.kind == "binary" and not np.all(np.isin(arr, (0.0, 1.0))):
                raise ValidationError(f"binary column {spec.name!r} has values other than 0/1", module="data_model")
            cols.append(arr)
            terms.append(Term(spec.name, spec.name, spec.kind))
        else:
            raise ValidationError(f"column {spec.name!r}: unknown kind {spec.kind!r}", module="data_model")
    if not cols:
        raise ValidationError("plan has no predictors", module="data_model")
    return DesignMatrix(np.column_stack(cols), y, tuple(terms))


@dataclass(frozen=True)
class Standardizer:
    """Per-column centring and scaling; scale is the population SD (ddof=0)."""

    mean: np.ndarray
    scale: np.ndarray
    names: tuple[str, ...] = field(default=())

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean


def constant_columns(X: np.ndarray) -> np.ndarray:
    """Indices of columns whose values are all identical."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return np.arange(X.shape[1])
    return np.flatnonzero(np.ptp(X, axis=0) == 0)


def standardize(dm: DesignMatrix | np.ndarray, names: Sequence[str] | None = None) -> tuple[np.ndarray, Standardizer]:
    """Centre each column to mean 0 and scale to population variance 1.

    Raises :class:`ValidationError` naming the first constant column.
    """
    if isinstance(dm, DesignMatrix):
        X, names = dm.X, dm.names
    else:
        X = np.asarray(dm, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(X.shape[1]))
    const = constant_columns(X)
    if const.size:
        raise ValidationError(f"constant column {names[const[0]]!r}", module="data_model")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    std = Standardizer(mean, scale, names)
    return std.transform(X), std


def destandardize(beta_std: np.ndarray, std: Standardizer) -> np.ndarray:
    """Map ``(intercept, slopes)`` fitted on standardized predictors back to
    the original predictor scale.  The linear predictor is unchanged."""
    beta_std = np.asarray(beta_std, dtype=float)
    if beta_std.shape[-1] != len(std.mean) + 1:
        raise ValidationError(
            f"coefficient length {beta_std.shape[-1]} does not match {len(std.mean)} columns + intercept",
            module="data_model",
        )
    slopes = beta_std[..., 1:] / std.scale
    intercept = beta_std[..., 0] - slopes @ std.mean
    return np.concatenate([np.asarray(intercept)[..., None], slopes], axis=-1)


def standardize_coef(beta: np.ndarray, std: Standardizer) -> np.ndarray:
    """Inverse of :func:`destandardize`."""
    beta = np.asarray(beta, dtype=float)
    slopes = beta[..., 1:] * std.scale
    intercept = beta[..., 0] + beta[..., 1:] @ std.mean
    return np.concatenate([np.asarray(intercept)[..., None], slopes], axis=-1)


def with_intercept(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.ones(X.shape[0]), X])
