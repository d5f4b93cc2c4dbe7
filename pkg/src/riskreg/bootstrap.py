"""Nonparametric bootstrap over individuals with percentile intervals.

Each replicate resamples rows, re-standardizes, re-runs the tuning-parameter
selection and refits, so the intervals carry the selection uncertainty.
Replicate ``b`` draws from a random stream keyed only by ``(seed, b)``;
results are therefore identical for any number of worker processes.
"""

from __future__ import annotations

import hashlib
import multiprocessing
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DesignMatrix, EncodingPlan, RawTable, encode
from .errors import NumericalError, RiskRegError, ValidationError
from .families import Family, get_family
from .pipeline import ModelFit, Penalty, fit_model

WORKERS_ENV = "RISKREG_WORKERS"


@dataclass(frozen=True)
class BootstrapConfig:
    n_boot: int = 1000
    level: float = 0.95
    seed: int = 0
    reselect_lambda: bool = True
    reselect_alpha: bool = False
    workers: int | None = None
    max_failure_frac: float = 0.05
    folds: int = 10
    stratify: bool = False
    rule: str = "min"
    drop_constant: bool = False
    alpha_grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_boot < 2:
            raise ValidationError("need at least 2 bootstrap replicates", module="bootstrap_infer")
        if not 0.0 < self.level < 1.0:
            raise ValidationError("confidence level must lie in (0, 1)", module="bootstrap_infer")


def resolve_workers(requested: int | None = None) -> int:
    if requested is None:
        env = os.environ.get(WORKERS_ENV)
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(requested))


def resample_indices(n: int, seed: int, b: int) -> np.ndarray:
    """``n`` row indices drawn with replacement for replicate ``b``."""
    rng = np.random.default_rng([int(seed), int(b)])
    return rng.integers(0, n, size=n)


def _replicate_seed(seed: int, b: int) -> int:
    # fold assignment inside replicate b, independent of the resampling stream
    return int(np.random.SeedSequence([int(seed), int(b), 1]).generate_state(1)[0])


def percentile_ci(values, level: float = 0.95) -> tuple[float, float]:
    """Percentile interval with linear interpolation between order statistics.

    The ``q`` quantile of ``m`` sorted values sits at 1-based position
    ``1 + (m - 1) q``.
    """
    x = np.sort(np.asarray(values, dtype=float))
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise ValidationError("percentile interval needs at least 2 finite values", module="bootstrap_infer")
    # (1 - 0.95) / 2 is not 0.025 in binary; round away the representation error
    tail = round((1.0 - level) / 2.0, 12)
    return _quantile_sorted(x, tail), _quantile_sorted(x, 1.0 - tail)


def _quantile_sorted(x: np.ndarray, q: float) -> float:
    h = (x.size - 1) * q
    if abs(h - round(h)) < 1e-9:
        h = float(round(h))
    lo = int(np.floor(h))
    hi = min(lo + 1, x.size - 1)
    frac = h - lo
    if frac == 0.0 or x[hi] == x[lo]:
        return float(x[lo])
    return float(x[lo] + frac * (x[hi] - x[lo]))


@dataclass
class BootstrapResult:
    names: tuple[str, ...]
    estimate: np.ndarray
    replicates: np.ndarray = field(repr=False)
    ci: np.ndarray
    ci_effect: np.ndarray
    n_boot: int
    level: float
    family: Family
    method: str
    failures: dict[str, int] = field(default_factory=dict)
    replicate_ids: np.ndarray = field(default=None, repr=False)
    alpha: float | None = None
    lam: float | None = None

    @property
    def n_failed(self) -> int:
        return sum(self.failures.values())

    @property
    def estimate_effect(self) -> np.ndarray:
        return self.family.effect(self.estimate)

    def digest(self) -> str:
        """SHA-256 over every array and setting in the result."""
        h = hashlib.sha256()
        for arr in (self.estimate, self.replicates, self.ci, self.ci_effect, self.replicate_ids):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(repr((self.names, self.n_boot, self.level, self.family.name, self.method,
                       sorted(self.failures.items()), self.alpha, self.lam)).encode())
        return h.hexdigest()


# Per-process replicate context, installed by the pool initializer.
_CTX: dict = {}


def _init_worker(ctx: dict) -> None:
    _CTX.clear()
    _CTX.update(ctx)


def _failure_reason(exc: Exception) -> str:
    msg = str(exc)
    if "single" in msg and "class" in msg:
        return "single outcome class"
    if "constant" in msg:
        return "constant column"
    if isinstance(exc, NumericalError):
        return "numerical failure"
    return type(exc).__name__


def _one_replicate(b: int) -> tuple[int, np.ndarray | None, str | None]:
    ctx = _CTX
    X, y = ctx["X"], ctx["y"]
    cfg: BootstrapConfig = ctx["cfg"]
    penalty: Penalty = ctx["penalty"]
    idx = resample_indices(len(y), cfg.seed, b)
    yb = y[idx]
    if yb.min() == yb.max():
        return b, None, "single outcome class"
    try:
        fit = fit_model((X[idx], yb), ctx["family"], penalty, k=cfg.folds, seed=_replicate_seed(cfg.seed, b),
                        stratify=cfg.stratify, rule=cfg.rule, alpha_grid=cfg.alpha_grid,
                        drop_constant=cfg.drop_constant)
    except RiskRegError as exc:
        return b, None, _failure_reason(exc)
    return b, fit.coef, None


def _run_chunk(bs: list[int]):
    return [_one_replicate(b) for b in bs]


def _replicate_penalty(full: ModelFit, cfg: BootstrapConfig) -> Penalty:
    pen = full.penalty
    if not pen.penalized:
        return pen
    alpha = "cv" if (cfg.reselect_alpha and pen.alpha == "cv") else full.alpha
    lam = "cv" if (cfg.reselect_lambda and pen.lam == "cv") else full.lam
    return Penalty(pen.kind, alpha, lam)


def run_replicates(X, y, family: Family, penalty: Penalty, cfg: BootstrapConfig):
    """Raw replicate outcomes ``[(b, coef | None, reason | None), ...]`` in ``b`` order."""
    ctx = {"X": np.asarray(X, dtype=float), "y": np.asarray(y, dtype=float), "family": family,
           "penalty": penalty, "cfg": cfg}
    ids = list(range(cfg.n_boot))
    workers = min(resolve_workers(cfg.workers), cfg.n_boot)
    if workers == 1:
        _init_worker(ctx)
        return _run_chunk(ids)
    n_chunks = workers * 4
    chunks = [ids[i::n_chunks] for i in range(n_chunks) if ids[i::n_chunks]]
    mp = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
    with ProcessPoolExecutor(workers, mp_context=mp, initializer=_init_worker, initargs=(ctx,)) as ex:
        out = [r for chunk in ex.map(_run_chunk, chunks) for r in chunk]
    return sorted(out, key=lambda r: r[0])


def bootstrap_pipeline(data: RawTable | DesignMatrix, plan: EncodingPlan | None, family: Family | str,
                       penalty: Penalty, cfg: BootstrapConfig = BootstrapConfig(),
                       full_fit: ModelFit | None = None) -> BootstrapResult:
    """Full-data fit plus ``cfg.n_boot`` resampled refits.

    The table is encoded once and rows of the encoded design are resampled,
    which keeps the dummy columns of every replicate aligned with the
    full-data terms.  Replicates that cannot be fitted (one outcome class,
    a column constant after resampling, solver failure) are counted by reason
    and left out; if more than ``cfg.max_failure_frac`` of them fail the
    whole run is rejected.
    """
    family = get_family(family)
    dm = data if isinstance(data, DesignMatrix) else encode(data, plan)
    if full_fit is None:
        full_fit = fit_model(dm, family, penalty, k=cfg.folds, seed=cfg.seed, stratify=cfg.stratify,
                             rule=cfg.rule, alpha_grid=cfg.alpha_grid, drop_constant=cfg.drop_constant)
    rep_pen = _replicate_penalty(full_fit, cfg)
    results = run_replicates(dm.X, dm.y, family, rep_pen, cfg)

    failures = Counter(r[2] for r in results if r[1] is None)
    ok = [r for r in results if r[1] is not None]
    n_failed = cfg.n_boot - len(ok)
    if n_failed > cfg.max_failure_frac * cfg.n_boot or len(ok) < 2:
        detail = ", ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
        raise NumericalError(f"{n_failed} of {cfg.n_boot} bootstrap replicates failed ({detail})",
                             module="bootstrap_infer")
    reps = np.vstack([r[1] for r in ok])
    ci = np.array([percentile_ci(reps[:, j], cfg.level) for j in range(reps.shape[1])])
    return BootstrapResult(
        names=full_fit.names,
        estimate=full_fit.coef,
        replicates=reps,
        ci=ci,
        ci_effect=family.effect(ci),
        n_boot=cfg.n_boot,
        level=cfg.level,
        family=family,
        method=full_fit.method,
        failures=dict(sorted(failures.items())),
        replicate_ids=np.array([r[0] for r in ok], dtype=np.int64),
        alpha=full_fit.alpha,
        lam=full_fit.lam,
    )
