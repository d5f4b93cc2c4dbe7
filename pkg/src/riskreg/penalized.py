"""Ridge / lasso / elastic-net fits of the quasi-log-likelihoods.

Poisson and least-squares log-likelihoods serve as quasi-log-likelihoods for
binary data; penalizing them gives regularized quasi-ML estimates of log risk
ratios and risk differences.  Predictors are expected on the standardized
scale (see :func:`riskreg.data.standardize`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _cd
from .data import Standardizer, destandardize, with_intercept
from .errors import ConvergenceError, NumericalError, ValidationError
from .families import Family, get_family

TOL_INNER = 1e-9
TOL_OUTER = 1e-7
MAX_OUTER = 100
MAX_SWEEPS = 100_000
KKT_TOL = 1e-4
ALPHA_FLOOR = 1e-3


@dataclass(frozen=True)
class PenaltySpec:
    """``lam * ((1 - alpha)/2 * ||b||^2 + alpha * ||b||_1)`` on the slopes."""

    lam: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}", module="regularized_path")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}", module="regularized_path")

    def penalty_factor(self, p: int) -> np.ndarray:
        """0 for the intercept, 1 for each slope."""
        pf = np.ones(p + 1)
        pf[0] = 0.0
        return pf

    def value(self, beta) -> float:
        b = np.asarray(beta, dtype=float)[1:]
        return self.lam * ((1 - self.alpha) / 2 * float(b @ b) + self.alpha * float(np.abs(b).sum()))


def soft_threshold(z: float, gamma: float) -> float:
    """``sign(z) * max(|z| - gamma, 0)``."""
    if gamma < 0:
        raise ValidationError("threshold must be non-negative", module="regularized_path")
    return float(np.sign(z) * max(abs(z) - gamma, 0.0))


def _prep(Xstd, y):
    X = np.ascontiguousarray(Xstd, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.ascontiguousarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}", module="regularized_path")
    return X, y


def penalized_objective(beta, Xstd, y, fam: Family | str, pen: PenaltySpec) -> float:
    """``-(1/n) loglik(beta) + penalty``, with the Gaussian loglik taken at
    ``sigma^2 = 1`` and without its additive constant."""
    fam = get_family(fam)
    X, y = _prep(Xstd, y)
    beta = np.asarray(beta, dtype=float)
    if beta.shape[0] != X.shape[1] + 1:
        raise ValidationError("coefficient length does not match design", module="regularized_path")
    eta = beta[0] + X @ beta[1:]
    with np.errstate(over="ignore"):
        ll = fam.loglik(y, eta)
    if not np.isfinite(ll):
        raise NumericalError("non-finite quasi-log-likelihood", module="regularized_path")
    return -ll / len(y) + pen.value(beta)


def loss_gradient(beta, Xstd, y, fam: Family | str) -> np.ndarray:
    """Gradient of ``-(1/n) loglik`` (intercept first)."""
    fam = get_family(fam)
    X, y = _prep(Xstd, y)
    Z = with_intercept(X)
    eta = Z @ np.asarray(beta, dtype=float)
    mu = fam.mean(eta)
    d = fam.dmu_deta(eta)
    return -(Z.T @ (d / fam.variance(mu) * (y - mu))) / len(y)


@dataclass
class CDFit:
    coef: np.ndarray
    converged: bool
    n_outer: int
    n_sweeps: int
    history: np.ndarray = field(repr=False)


def cd_fit(Xstd, y, fam: Family | str, pen: PenaltySpec, warm=None, *, tol_inner: float = TOL_INNER,
           tol_outer: float = TOL_OUTER, max_outer: int = MAX_OUTER, max_sweeps: int = MAX_SWEEPS,
           full: bool = False):
    """Coordinate-descent minimizer of :func:`penalized_objective`.

    Returns the coefficient vector ``[intercept, slopes]`` on the scale of
    ``Xstd``, or a :class:`CDFit` with the objective history when ``full``.
    Gaussian history is recorded per sweep, IRLS families per outer step.
    """
    fam = get_family(fam)
    X, y = _prep(Xstd, y)
    p = X.shape[1]
    gnull, ybar = _cd.null_gradient(X, y)
    if fam.code != 0 and not 0.0 < ybar < (1.0 if fam.code == 2 else np.inf):
        raise ValidationError("outcome has a single class", module="regularized_path")
    beta = np.zeros(p + 1)
    if warm is None:
        beta[0] = _cd.link_mean(fam.code, ybar)
    else:
        beta[:] = np.asarray(warm, dtype=float)
    hist = np.zeros(2 * max_outer + 2 if fam.code else 10_000) if full else np.zeros(0)
    ok, n_outer, sweeps, nhist = _cd.solve(X, y, fam.code, float(pen.lam), float(pen.alpha), beta,
                                            tol_inner, tol_outer, max_outer, max_sweeps, hist, gnull, ybar)
    if not ok:
        raise ConvergenceError(f"coordinate descent hit its iteration cap at lambda={pen.lam:.6g}",
                               module="regularized_path", hint="possible separation")
    if full:
        return CDFit(beta, ok, n_outer, sweeps, hist[:nhist].copy())
    return beta


def lambda_max(Xstd, y, alpha: float) -> float:
    X, y = _prep(Xstd, y)
    g = np.abs(X.T @ (y - y.mean())) / len(y)
    return float(g.max()) / max(alpha, ALPHA_FLOOR)


def lambda_sequence(Xstd, y, fam: Family | str | None = None, alpha: float = 1.0, K: int = 100,
                    eps: float | None = None) -> np.ndarray:
    """Log-spaced decreasing sequence from ``lambda_max`` to ``eps * lambda_max``.

    ``lambda_max`` is the smallest penalty that zeroes every slope (for
    ``alpha >= 0.001``; ridge uses ``alpha = 0.001`` as a surrogate).
    ``eps`` defaults to 1e-4 when ``n > p`` and 1e-2 otherwise.
    """
    X, y = _prep(Xstd, y)
    n, p = X.shape
    lmax = lambda_max(X, y, alpha)
    if lmax <= 0:
        raise NumericalError("lambda_max is 0: outcome is orthogonal to every predictor; fit unpenalized",
                             module="regularized_path")
    if eps is None:
        eps = 1e-4 if n > p else 1e-2
    if K == 1:
        return np.array([lmax])
    return np.exp(np.linspace(np.log(lmax), np.log(eps * lmax), K))


@dataclass
class PathResult:
    lambdas: np.ndarray
    coef_std: np.ndarray
    converged: np.ndarray
    alpha: float
    standardizer: Standardizer | None = None

    @property
    def coef(self) -> np.ndarray | None:
        """Coefficients on the original predictor scale."""
        if self.standardizer is None:
            return None
        return destandardize(self.coef_std, self.standardizer)

    @property
    def nonzero(self) -> np.ndarray:
        return np.count_nonzero(self.coef_std[:, 1:], axis=1)


def fit_path(Xstd, y, fam: Family | str, alpha: float, lambdas=None, *, standardizer: Standardizer | None = None,
             strict: bool = True) -> PathResult:
    """Solve along a decreasing ``lambdas``, warm-starting each fit from the previous one."""
    fam = get_family(fam)
    X, y = _prep(Xstd, y)
    PenaltySpec(0.0, alpha)
    if lambdas is None:
        lambdas = lambda_sequence(X, y, fam, alpha)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0):
        raise ValidationError("lambda sequence must be strictly decreasing", module="regularized_path")
    coefs, conv = _cd.path(X, y, fam.code, float(alpha), lambdas, TOL_INNER, TOL_OUTER, MAX_OUTER, MAX_SWEEPS)
    if strict and not conv.all():
        k = int(np.flatnonzero(~conv)[0])
        raise ConvergenceError(f"path fit failed at lambda index {k} (lambda={lambdas[k]:.6g})",
                               module="regularized_path", hint="possible separation")
    return PathResult(lambdas, coefs, conv, float(alpha), standardizer)


def kkt_check(beta, Xstd, y, fam: Family | str, pen: PenaltySpec, tol: float = KKT_TOL) -> list[tuple[int, float]]:
    """Subgradient optimality violations as ``(column, magnitude)``.

    Column 0 is the intercept, which must have zero gradient.
    """
    beta = np.asarray(beta, dtype=float)
    g = loss_gradient(beta, Xstd, y, fam)
    lam, a = pen.lam, pen.alpha
    out = []
    if abs(g[0]) > tol:
        out.append((0, float(abs(g[0]))))
    for j in range(1, len(beta)):
        if beta[j] == 0.0:
            excess = abs(g[j]) - lam * a
        else:
            excess = abs(g[j] + lam * (1 - a) * beta[j] + lam * a * np.sign(beta[j]))
        if excess > tol:
            out.append((j, float(excess)))
    return out
