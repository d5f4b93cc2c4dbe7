"""K-fold cross-validation of the penalty strength and the lasso/ridge mix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Standardizer, constant_columns, destandardize, standardize
from .errors import ConvergenceError, NumericalError, ValidationError
from .families import Family, get_family
from .penalized import PathResult, fit_path, lambda_sequence

DEFAULT_ALPHA_GRID = np.round(np.linspace(0.0, 1.0, 101), 2)
MAX_FAILED_FOLDS = 2


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index (0-based, ``0..k-1``) per row."""

    folds: np.ndarray
    k: int
    seed: int | None
    stratified: bool

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, test


def make_folds(n: int, k: int = 10, seed: int | np.random.SeedSequence | None = 0,
               stratify_on=None) -> FoldAssignment:
    """Random balanced fold assignment.

    Rows are shuffled and dealt round-robin, so fold sizes differ by at most
    one.  With ``stratify_on`` each outcome class is dealt in turn, continuing
    the round-robin, which also balances per-fold class counts.
    """
    if not 2 <= k <= n:
        raise ValidationError(f"need 2 <= k <= n, got k={k}, n={n}", module="model_selection")
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=np.int64)
    if stratify_on is None:
        order = rng.permutation(n)
    else:
        strata = np.asarray(stratify_on)
        if strata.shape[0] != n:
            raise ValidationError("stratification vector has the wrong length", module="model_selection")
        order = np.concatenate([rng.permutation(np.flatnonzero(strata == c)) for c in np.unique(strata)])
    folds[order] = np.arange(n) % k
    seed_val = seed if isinstance(seed, (int, np.integer)) or seed is None else None
    return FoldAssignment(folds, k, seed_val, stratify_on is not None)


def cv_deviance(y, mu, fam: Family | str) -> float:
    """Held-out loss: Poisson and binomial deviance (sums), Gaussian mean squared error."""
    fam = get_family(fam)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if fam.code == 0:
        return float(np.mean((y - mu) ** 2))
    if fam.code == 1:
        if np.any(mu <= 0):
            raise NumericalError("Poisson deviance needs mu > 0", module="model_selection")
        ylogy = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
        return float(2.0 * np.sum(ylogy - (y - mu)))
    mu = np.clip(mu, 1e-10, 1 - 1e-10)
    return float(-2.0 * np.sum(y * np.log(mu) + (1 - y) * np.log1p(-mu)))


@dataclass
class CVResult:
    lambdas: np.ndarray
    mean_loss: np.ndarray
    se_loss: np.ndarray
    fold_loss: np.ndarray = field(repr=False)
    index_min: int = 0
    index_1se: int = 0
    alpha: float = 1.0
    failed_folds: tuple[int, ...] = ()
    folds: FoldAssignment | None = field(default=None, repr=False)
    alpha_grid: np.ndarray | None = field(default=None, repr=False)
    alpha_losses: np.ndarray | None = field(default=None, repr=False)

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.index_min])

    @property
    def lambda_1se(self) -> float:
        return float(self.lambdas[self.index_1se])

    @property
    def best_loss(self) -> float:
        return float(self.mean_loss[self.index_min])

    def selected(self, rule: str = "min") -> tuple[int, float]:
        i = self.index_min if rule == "min" else self.index_1se
        return i, float(self.lambdas[i])


def fit_path_raw(X, y, fam: Family, alpha: float, lambdas, drop_constant: bool = False) -> np.ndarray:
    """Path coefficients on the original scale of ``X``.

    With ``drop_constant`` a column that is constant in ``X`` is left out of
    the fit and gets a zero coefficient; otherwise it is an error.
    """
    const = constant_columns(X)
    if const.size and not drop_constant:
        raise ValidationError("constant column in fitting rows", module="model_selection")
    keep = np.setdiff1d(np.arange(X.shape[1]), const)
    if keep.size == 0:
        raise ValidationError("every column is constant in fitting rows", module="model_selection")
    Xs, std = standardize(X[:, keep])
    pr = fit_path(Xs, y, fam, alpha, lambdas, standardizer=std)
    coef = np.zeros((len(lambdas), X.shape[1] + 1))
    coef[:, 0] = pr.coef[:, 0]
    coef[:, keep + 1] = pr.coef[:, 1:]
    return coef


def _fold_losses(X, y, fam: Family, alpha: float, lambdas, train, test, drop_constant=False):
    ytr = y[train]
    if ytr.min() == ytr.max():
        raise ValidationError("training split has a single outcome class", module="model_selection")
    coef = fit_path_raw(X[train], ytr, fam, alpha, lambdas, drop_constant)
    eta = coef[:, 0][None, :] + X[test] @ coef[:, 1:].T
    with np.errstate(over="ignore"):
        mu = fam.mean(eta)
    return _loss_columns(y[test], mu, fam)


def _loss_columns(y, mu, fam: Family) -> np.ndarray:
    """Per-observation held-out loss for every column of ``mu``; agrees with
    :func:`cv_deviance` divided by ``len(y)`` for the deviance families."""
    y = y[:, None]
    if fam.code == 0:
        return np.mean((y - mu) ** 2, axis=0)
    if fam.code == 1:
        if np.any(mu <= 0):
            raise NumericalError("Poisson deviance needs mu > 0", module="model_selection")
        ylogy = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
        return 2.0 * np.mean(ylogy - (y - mu), axis=0)
    mu = np.clip(mu, 1e-10, 1 - 1e-10)
    return -2.0 * np.mean(y * np.log(mu) + (1 - y) * np.log1p(-mu), axis=0)


def cross_validate(X, y, fam: Family | str, alpha: float = 1.0, k: int = 10, seed=0, lambdas=None, *,
                   stratify: bool = False, folds: FoldAssignment | None = None, n_lambda: int = 100,
                   drop_constant: bool = False) -> CVResult:
    """K-fold CV over a shared lambda sequence.

    ``X`` is the raw (unstandardized) predictor matrix without intercept.
    The lambda sequence comes from the standardized full data unless given;
    each training split is re-standardized on its own rows.  Folds whose
    training split is degenerate are skipped; more than two such folds is an
    error, unless ``drop_constant`` is set, in which case columns constant
    within a training split are given a zero coefficient for that fold.
    """
    fam = get_family(fam)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if lambdas is None:
        Xs, _ = standardize(X)
        lambdas = lambda_sequence(Xs, y, fam, alpha, n_lambda)
    lambdas = np.asarray(lambdas, dtype=float)
    if folds is None:
        folds = make_folds(n, k, seed, y if stratify else None)
    losses = np.full((folds.k, len(lambdas)), np.nan)
    failed = []
    for f in range(folds.k):
        train, test = folds.split(f)
        if test.size == 0:
            continue
        try:
            losses[f] = _fold_losses(X, y, fam, alpha, lambdas, train, test, drop_constant)
        except (ValidationError, ConvergenceError):
            failed.append(f)
    if len(failed) > MAX_FAILED_FOLDS:
        raise NumericalError(f"{len(failed)} of {folds.k} CV folds failed", module="model_selection")
    ok = ~np.isnan(losses[:, 0])
    L = losses[ok]
    mean = L.mean(axis=0)
    se = L.std(axis=0, ddof=1) / np.sqrt(L.shape[0]) if L.shape[0] > 1 else np.zeros_like(mean)
    if not np.all(np.isfinite(mean)):
        raise NumericalError("non-finite cross-validation loss", module="model_selection")
    imin = int(np.argmin(mean))
    # lambdas decrease, so the largest qualifying lambda is the first index
    i1se = int(np.flatnonzero(mean <= mean[imin] + se[imin])[0])
    return CVResult(lambdas, mean, se, losses, imin, i1se, float(alpha), tuple(failed), folds)


def select_alpha(X, y, fam: Family | str, alpha_grid=None, k: int = 10, seed=0, *, stratify: bool = False,
                 folds: FoldAssignment | None = None, n_lambda: int = 100,
                 drop_constant: bool = False) -> tuple[float, CVResult]:
    """Pick the mixing weight whose own ``lambda_min`` gives the lowest CV loss.

    All grid points share one fold assignment.  Ties go to the larger alpha.
    """
    fam = get_family(fam)
    grid = DEFAULT_ALPHA_GRID if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if grid.size == 0 or np.any((grid < 0) | (grid > 1)):
        raise ValidationError("alpha grid must be non-empty with values in [0, 1]", module="model_selection")
    y = np.asarray(y, dtype=float)
    if folds is None:
        folds = make_folds(len(y), k, seed, y if stratify else None)
    best: CVResult | None = None
    losses = np.empty(grid.size)
    for i, a in enumerate(grid):
        res = cross_validate(X, y, fam, float(a), folds=folds, n_lambda=n_lambda, drop_constant=drop_constant)
        losses[i] = res.best_loss
        if best is None or res.best_loss < best.best_loss or (res.best_loss == best.best_loss and a > best.alpha):
            best = res
    best.alpha_grid = grid
    best.alpha_losses = losses
    return best.alpha, best


@dataclass
class TunedFit:
    """Penalized fit at a chosen (lambda, alpha), refit on all rows.

    ``coef_std`` is on the standardized scale of the kept columns, padded with
    zeros at ``dropped`` (columns constant in the data, only with
    ``drop_constant``).
    """

    coef: np.ndarray
    coef_std: np.ndarray
    lam: float
    alpha: float
    standardizer: Standardizer
    cv: CVResult | None = None
    path: PathResult | None = field(default=None, repr=False)
    dropped: tuple[int, ...] = ()


def _kept_columns(X, drop_constant: bool) -> np.ndarray:
    const = constant_columns(X)
    if const.size and drop_constant:
        return np.setdiff1d(np.arange(X.shape[1]), const)
    return np.arange(X.shape[1])


def fit_tuned(X, y, fam: Family | str, alpha: float | str = 1.0, lam: float | str = "cv", *, k: int = 10,
              seed=0, stratify: bool = False, rule: str = "min", alpha_grid=None,
              n_lambda: int = 100, drop_constant: bool = False, folds: FoldAssignment | None = None) -> TunedFit:
    """Standardize, choose lambda (and alpha) by CV if asked, and fit.

    ``alpha="cv"`` searches ``alpha_grid``; ``lam="cv"`` picks lambda by
    ``rule`` (``"min"`` or ``"1se"``) and reads the coefficients off the
    full-data path at that lambda.
    """
    fam = get_family(fam)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = _kept_columns(X, drop_constant)
    if keep.size == 0:
        raise ValidationError("every column is constant", module="model_selection")
    Xk = X[:, keep]
    Xs, std = standardize(Xk)
    if folds is None and (alpha == "cv" or lam == "cv"):
        folds = make_folds(len(y), k, seed, y if stratify else None)
    cv = None
    if alpha == "cv":
        alpha, cv = select_alpha(Xk, y, fam, alpha_grid, folds=folds, n_lambda=n_lambda,
                                 drop_constant=drop_constant)
    alpha = float(alpha)
    if lam == "cv":
        if cv is None:
            cv = cross_validate(Xk, y, fam, alpha, folds=folds, n_lambda=n_lambda, drop_constant=drop_constant)
        idx, lam_val = cv.selected(rule)
        seq = cv.lambdas[: idx + 1]
    else:
        lam_val = float(lam)
        seq = lambda_sequence(Xs, y, fam, alpha, n_lambda)
        seq = np.append(seq[seq > lam_val], lam_val)
    pr = fit_path(Xs, y, fam, alpha, seq, standardizer=std)
    beta_k = pr.coef_std[-1]
    beta = np.zeros(X.shape[1] + 1)
    beta[0] = beta_k[0]
    beta[keep + 1] = beta_k[1:]
    coef = np.zeros_like(beta)
    coef[np.concatenate([[0], keep + 1])] = destandardize(beta_k, std)
    dropped = tuple(int(j) for j in np.setdiff1d(np.arange(X.shape[1]), keep))
    return TunedFit(coef, beta, lam_val, alpha, std, cv, pr, dropped)
