"""Synthetic cohorts with a known risk model, for coverage and recovery checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RawTable
from .errors import ValidationError
from .families import Family, get_family


@dataclass(frozen=True)
class SimPredictor:
    """One generated predictor: ``Bernoulli(prob)`` or ``Normal(mean, sd)``."""

    name: str
    coef: float
    dist: str = "bernoulli"
    prob: float = 0.5
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.dist not in ("bernoulli", "normal"):
            raise ValidationError(f"unknown predictor distribution {self.dist!r}", module="cli_reporting")
        if self.dist == "bernoulli" and not 0.0 < self.prob < 1.0:
            raise ValidationError("Bernoulli probability must lie in (0, 1)", module="cli_reporting")
        if self.dist == "normal" and self.sd <= 0:
            raise ValidationError("normal sd must be positive", module="cli_reporting")


@dataclass(frozen=True)
class CohortModel:
    family: Family | str
    intercept: float
    predictors: tuple[SimPredictor, ...] = ()
    outcome: str = "y"


def simulate_cohort(n: int, model: CohortModel, seed: int = 0) -> RawTable:
    """Draw ``n`` rows from ``model``; the outcome is ``Bernoulli(mu(eta))``.

    The truth must be a valid risk model at every generated row: ``exp(eta)``
    for log link and ``eta`` for identity link must lie strictly inside
    ``(0, 1)``.
    """
    if n < 1:
        raise ValidationError("n must be positive", module="cli_reporting")
    fam = get_family(model.family)
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    eta = np.full(n, float(model.intercept))
    for sp in model.predictors:
        if sp.dist == "bernoulli":
            x = (rng.random(n) < sp.prob).astype(float)
            kinds[sp.name] = "binary"
        else:
            x = rng.normal(sp.mean, sp.sd, n)
            kinds[sp.name] = "continuous"
        cols[sp.name] = x
        eta += sp.coef * x
    with np.errstate(over="ignore"):
        mu = fam.mean(eta)
    bad = np.flatnonzero(~((mu > 0.0) & (mu < 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"true risk {mu[i]:.6g} outside (0, 1) at generated row {i}",
                              module="cli_reporting", hint="the model is not a valid risk model")
    cols[model.outcome] = (rng.random(n) < mu).astype(float)
    kinds[model.outcome] = "binary"
    return RawTable(cols, kinds)
