"""Mean/variance models for binary outcomes.

``poisson-log``      modified Poisson regression, coefficients are log risk ratios
``gaussian-identity`` modified least squares, coefficients are risk differences
``binomial-logit``   logistic regression, kept for odds-ratio comparisons
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError

# Linear predictors are clipped to [-ETA_CAP, ETA_CAP] inside the iterative
# solvers for the exp/logistic means.
ETA_CAP = 30.0


def _expit(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(eta, dtype=float)))


@dataclass(frozen=True)
class Family:
    name: str
    code: int
    mean: Callable[[np.ndarray], np.ndarray]
    dmu_deta: Callable[[np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]
    link: Callable[[np.ndarray], np.ndarray]
    measure: str
    measure_label: str
    # Gaussian nuisance variance; it scales the quasi-log-likelihood but not its maximizer.
    sigma2: float = 1.0

    @property
    def capped(self) -> bool:
        return self.code != GAUSSIAN_IDENTITY.code

    def effect(self, coef):
        """Coefficient -> effect-measure scale."""
        coef = np.asarray(coef, dtype=float)
        return coef if self.measure == "RD" else np.exp(coef)

    def loglik(self, y: np.ndarray, eta: np.ndarray) -> float:
        """Quasi-log-likelihood up to constants that do not depend on beta."""
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.code == 0:
            return float(-0.5 * np.sum((y - eta) ** 2) / self.sigma2)
        if self.code == 1:
            return float(np.sum(y * eta - np.exp(eta)))
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)))

    def __repr__(self):
        return f"Family({self.name!r})"


GAUSSIAN_IDENTITY = Family(
    name="gaussian-identity",
    code=0,
    mean=lambda eta: np.asarray(eta, dtype=float),
    dmu_deta=lambda eta: np.ones_like(np.asarray(eta, dtype=float)),
    variance=lambda mu: np.ones_like(np.asarray(mu, dtype=float)),
    link=lambda mu: np.asarray(mu, dtype=float),
    measure="RD",
    measure_label="risk difference",
)

POISSON_LOG = Family(
    name="poisson-log",
    code=1,
    mean=lambda eta: np.exp(eta),
    dmu_deta=lambda eta: np.exp(eta),
    variance=lambda mu: np.asarray(mu, dtype=float),
    link=lambda mu: np.log(mu),
    measure="RR",
    measure_label="risk ratio",
)

BINOMIAL_LOGIT = Family(
    name="binomial-logit",
    code=2,
    mean=_expit,
    dmu_deta=lambda eta: _expit(eta) * (1.0 - _expit(eta)),
    variance=lambda mu: np.asarray(mu, dtype=float) * (1.0 - np.asarray(mu, dtype=float)),
    link=lambda mu: np.log(mu) - np.log1p(-np.asarray(mu, dtype=float)),
    measure="OR",
    measure_label="odds ratio",
)

FAMILIES = {f.name: f for f in (POISSON_LOG, GAUSSIAN_IDENTITY, BINOMIAL_LOGIT)}
_ALIASES = {
    "poisson": POISSON_LOG,
    "gaussian": GAUSSIAN_IDENTITY,
    "binomial": BINOMIAL_LOGIT,
    "logistic": BINOMIAL_LOGIT,
}


def get_family(family: str | Family) -> Family:
    if isinstance(family, Family):
        return family
    key = str(family).lower()
    if key in FAMILIES:
        return FAMILIES[key]
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValidationError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}", module="quasi_glm")
