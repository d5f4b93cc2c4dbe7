"""Unpenalized quasi-likelihood fitting with sandwich covariance.

The quasi-score for a binary outcome under a mean model ``mu(eta)`` with
working variance ``v(mu)`` is

    U(beta) = sum_i D_i' v(mu_i)^-1 (y_i - mu_i),   D_i = dmu_i/dbeta.

Its root is found by iteratively reweighted least squares on standardized
predictors; the reported covariance is the sandwich ``A^-1 B A^-1``, which
stays valid although the Poisson/Gaussian variance functions are wrong for
0/1 data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DesignMatrix, Standardizer, destandardize, standardize, with_intercept
from .errors import ConvergenceError, NumericalError, SingularMatrixError, ValidationError
from .families import ETA_CAP, Family, get_family

INTERCEPT = "(Intercept)"


def _eta_mu(beta, X, fam: Family, cap: bool):
    eta = X @ beta
    if cap and fam.capped:
        eta = np.clip(eta, -ETA_CAP, ETA_CAP)
    with np.errstate(over="ignore"):
        mu = fam.mean(eta)
    return eta, mu


def quasi_score(beta, X, y, fam: Family | str) -> np.ndarray:
    """Quasi-score ``U(beta)``; ``X`` must already contain the intercept column."""
    fam = get_family(fam)
    beta = np.asarray(beta, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape != (len(y), len(beta)):
        raise ValidationError(f"dimension mismatch: X {X.shape}, y {len(y)}, beta {len(beta)}", module="quasi_glm")
    eta = X @ beta
    with np.errstate(over="ignore"):
        mu = fam.mean(eta)
        d = fam.dmu_deta(eta)
    bad = np.flatnonzero(~np.isfinite(mu) | ~np.isfinite(d))
    if bad.size:
        raise NumericalError(f"non-finite mean at row {bad[0]}", module="quasi_glm")
    return X.T @ (d / fam.variance(mu) * (y - mu))


def sandwich_cov(beta, X, y, fam: Family | str) -> np.ndarray:
    """Robust covariance ``A^-1 B A^-1`` with ``X`` including the intercept.

    ``A = sum D'V^-1 D`` and ``B = sum D'V^-1 (y-mu)^2 V^-1 D``.
    """
    fam = get_family(fam)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    mu = fam.mean(eta)
    d = fam.dmu_deta(eta)
    v = fam.variance(mu)
    A = (X * (d * d / v)[:, None]).T @ X
    u = X * (d / v * (y - mu))[:, None]
    B = u.T @ u
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("bread matrix A is singular", module="quasi_glm") from exc
    cov = Ainv @ B @ Ainv
    return 0.5 * (cov + cov.T)


@dataclass
class FitResult:
    coef: np.ndarray
    coef_std: np.ndarray
    mu: np.ndarray
    n_iter: int
    converged: bool
    cov: np.ndarray | None
    family: Family
    names: tuple[str, ...]
    standardizer: Standardizer | None = None
    method: str = "quasi-ML"

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def wald_ci(self, level: float = 0.95) -> np.ndarray:
        """Wald interval on the coefficient scale from the sandwich SE."""
        from statistics import NormalDist

        z = NormalDist().inv_cdf(0.5 + level / 2)
        return np.column_stack([self.coef - z * self.se, self.coef + z * self.se])


def _as_design(X, names):
    if isinstance(X, DesignMatrix):
        return X.X, X.y, tuple(X.names)
    return X, None, names


def fit_irls(X, y=None, fam: Family | str = "poisson-log", *, max_iter: int = 100, tol: float = 1e-8,
             names=None, strict: bool = True) -> FitResult:
    """Quasi-ML fit by IRLS.

    ``X`` holds predictors without an intercept (an ``n x 0`` array, or
    ``None``, fits the intercept-only model).  Predictors are standardized for
    the iterations; coefficients are reported on both scales.  Convergence is
    declared when the largest coefficient change drops below ``tol``.  If the
    solver runs out of iterations, or the linear predictor sits on the
    overflow cap at the end, a :class:`ConvergenceError` with a
    "possible separation" hint is raised (``strict=False`` returns the last
    iterate flagged ``converged=False`` instead).
    """
    fam = get_family(fam)
    X, y_dm, names = _as_design(X, names)
    y = np.asarray(y if y is not None else y_dm, dtype=float)
    n = len(y)
    X = np.zeros((n, 0)) if X is None else np.asarray(X, dtype=float).reshape(n, -1)
    p = X.shape[1]
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(p))

    Xs, std = standardize(X, names)
    Z = with_intercept(Xs)
    ybar = y.mean()
    if fam.code != 0 and not 0 < ybar < (1 if fam.code == 2 else np.inf):
        raise ValidationError("outcome has a single class", module="quasi_glm")

    beta = np.zeros(p + 1)
    beta[0] = fam.link(ybar)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta, mu = _eta_mu(beta, Z, fam, cap=True)
        d = fam.dmu_deta(eta)
        w = d * d / fam.variance(mu)
        z = eta + (y - mu) / d
        G = (Z * w[:, None]).T @ Z
        try:
            new = np.linalg.solve(G, (Z * w[:, None]).T @ z)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"weighted Gram matrix singular at iteration {it}", module="quasi_glm",
                                      hint="collinear predictors or possible separation") from exc
        step = np.max(np.abs(new - beta))
        beta = new
        if fam.code == 0:
            # identity link, constant variance: one weighted least-squares step is exact
            converged = True
            break
        if step < tol:
            converged = True
            break

    eta = Z @ beta
    on_cap = fam.capped and bool(np.any(np.abs(eta) >= ETA_CAP))
    if on_cap:
        converged = False
    with np.errstate(over="ignore"):
        mu = fam.mean(np.clip(eta, -ETA_CAP, ETA_CAP) if fam.capped else eta)
    coef = destandardize(beta, std)

    cov = None
    if converged:
        cov = sandwich_cov(coef, with_intercept(X), y, fam)
    result = FitResult(coef, beta, mu, it, converged, cov, fam, (INTERCEPT, *names), std,
                       method="ML" if fam.code == 2 else "quasi-ML")
    if not converged and strict:
        why = "linear predictor reached the overflow cap" if on_cap else f"no convergence in {max_iter} iterations"
        raise ConvergenceError(f"{fam.name} quasi-ML fit failed: {why}", module="quasi_glm",
                               hint="possible separation", result=result)
    return result


@dataclass(frozen=True)
class EffectEstimate:
    term: str
    label: str
    coef: float
    estimate: float


def effect_measures(fit: FitResult) -> list[EffectEstimate]:
    """Per-term effect estimates; the intercept is labelled ``baseline``."""
    out = []
    for j, (name, b) in enumerate(zip(fit.names, fit.coef)):
        label = "baseline" if j == 0 else fit.family.measure_label
        out.append(EffectEstimate(name, label, float(b), float(fit.family.effect(b))))
    return out
