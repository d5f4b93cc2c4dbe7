"""One-call estimation: quasi-ML or penalized fit of an encoded design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DesignMatrix
from .errors import ValidationError
from .families import Family, get_family
from .quasi import INTERCEPT, FitResult, fit_irls
from .selection import FoldAssignment, TunedFit, fit_tuned

PENALTIES = ("none", "ridge", "lasso", "elastic-net")


@dataclass(frozen=True)
class Penalty:
    """Penalty choice with ``alpha``/``lam`` either fixed or ``"cv"``.

    Ridge forces ``alpha=0`` and lasso ``alpha=1``; ``none`` ignores both.
    """

    kind: str = "none"
    alpha: float | str = "cv"
    lam: float | str = "cv"

    def __post_init__(self):
        if self.kind not in PENALTIES:
            raise ValidationError(f"unknown penalty {self.kind!r}; expected one of {PENALTIES}", module="cli_reporting")
        if self.kind == "ridge":
            object.__setattr__(self, "alpha", 0.0)
        elif self.kind == "lasso":
            object.__setattr__(self, "alpha", 1.0)
        if self.alpha != "cv":
            a = float(self.alpha)
            if not 0.0 <= a <= 1.0:
                raise ValidationError(f"alpha must lie in [0, 1], got {a}", module="cli_reporting")
            object.__setattr__(self, "alpha", a)
        if self.lam != "cv":
            lam = float(self.lam)
            if lam < 0:
                raise ValidationError(f"lambda must be >= 0, got {lam}", module="cli_reporting")
            object.__setattr__(self, "lam", lam)

    @property
    def penalized(self) -> bool:
        return self.kind != "none"

    def method(self, fam: Family) -> str:
        if self.penalized:
            return self.kind
        return "ML" if fam.measure == "OR" else "quasi-ML"


@dataclass
class ModelFit:
    names: tuple[str, ...]
    coef: np.ndarray
    family: Family
    penalty: Penalty
    lam: float | None = None
    alpha: float | None = None
    quasi: FitResult | None = field(default=None, repr=False)
    tuned: TunedFit | None = field(default=None, repr=False)

    @property
    def method(self) -> str:
        return self.penalty.method(self.family)

    @property
    def effect(self) -> np.ndarray:
        return self.family.effect(self.coef)

    def linear_predictor(self, X) -> np.ndarray:
        return self.coef[0] + np.asarray(X, dtype=float) @ self.coef[1:]


def fit_model(dm: DesignMatrix | tuple, fam: Family | str, penalty: Penalty, *, k: int = 10, seed=0,
              stratify: bool = False, rule: str = "min", alpha_grid=None, drop_constant: bool = False,
              folds: FoldAssignment | None = None, names=None) -> ModelFit:
    """Fit ``dm`` (a :class:`DesignMatrix` or an ``(X, y)`` pair)."""
    fam = get_family(fam)
    if isinstance(dm, DesignMatrix):
        X, y, names = dm.X, dm.y, dm.names
    else:
        X, y = dm
        names = names or [f"x{j + 1}" for j in range(np.shape(X)[1])]
    names = (INTERCEPT, *names)
    if not penalty.penalized:
        fit = fit_irls(X, y, fam, names=names[1:])
        return ModelFit(names, fit.coef, fam, penalty, quasi=fit)
    tf = fit_tuned(X, y, fam, penalty.alpha, penalty.lam, k=k, seed=seed, stratify=stratify, rule=rule,
                   alpha_grid=alpha_grid, drop_constant=drop_constant, folds=folds)
    return ModelFit(names, tf.coef, fam, penalty, tf.lam, tf.alpha, tuned=tf)
