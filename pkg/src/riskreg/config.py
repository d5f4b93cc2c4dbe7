"""Run configuration shared by the command-line tool and the report."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .data import PredictorSpec
from .errors import ValidationError
from .families import FAMILIES
from .pipeline import PENALTIES, Penalty

_KIND_ALIASES = {"c": "continuous", "cont": "continuous", "continuous": "continuous", "b": "binary",
                 "bin": "binary", "binary": "binary", "cat": "categorical", "categorical": "categorical"}


def parse_predictors(text: str) -> tuple[PredictorSpec, ...]:
    """Parse ``"age,smoker:binary,region:categorical:north"``.

    Each item is ``name[:kind[:reference]]``; a missing kind is inferred from
    the data when the table is loaded.
    """
    specs = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        parts = item.split(":")
        if len(parts) > 3 or not parts[0]:
            raise ValidationError(f"bad predictor spec {item!r}; expected name[:kind[:reference]]",
                                  module="cli_reporting")
        kind = None
        if len(parts) > 1 and parts[1]:
            kind = _KIND_ALIASES.get(parts[1].lower())
            if kind is None:
                raise ValidationError(f"unknown predictor kind {parts[1]!r} in {item!r}", module="cli_reporting")
        ref = parts[2] if len(parts) == 3 and parts[2] else None
        if ref is not None and kind not in (None, "categorical"):
            raise ValidationError(f"reference level given for non-categorical predictor {parts[0]!r}",
                                  module="cli_reporting")
        specs.append(PredictorSpec(parts[0], kind, ref))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValidationError("predictor listed twice", module="cli_reporting")
    return tuple(specs)


def format_predictors(specs) -> str:
    """Inverse of :func:`parse_predictors`."""
    items = []
    for s in specs:
        parts = [s.name]
        if s.kind or s.reference:
            parts.append(s.kind or "")
        if s.reference:
            parts.append(s.reference)
        items.append(":".join(parts))
    return ",".join(items)


def _alpha_or_cv(v) -> float | str:
    return "cv" if str(v).lower() == "cv" else float(v)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; identical configs give identical output.

    A predictor ``kind`` of ``None`` means "infer from the column contents".
    """

    input: str = ""
    outcome: str = ""
    predictors: tuple[PredictorSpec, ...] = ()
    family: str = "poisson-log"
    penalty: str = "none"
    alpha: float | str = "cv"
    lam: float | str = "cv"
    folds: int = 10
    stratify: bool = False
    rule: str = "min"
    n_boot: int = 1000
    level: float = 0.95
    seed: int = 0
    reselect_alpha: bool = False
    drop_constant: bool = False
    report: str | None = None
    forest: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {sorted(FAMILIES)}",
                                  module="cli_reporting")
        if self.penalty not in PENALTIES:
            raise ValidationError(f"unknown penalty {self.penalty!r}; expected one of {PENALTIES}",
                                  module="cli_reporting")
        if self.rule not in ("min", "1se"):
            raise ValidationError(f"unknown lambda rule {self.rule!r}; expected 'min' or '1se'",
                                  module="cli_reporting")
        if self.folds < 2:
            raise ValidationError("need at least 2 CV folds", module="cli_reporting")
        if not 0.0 < self.level < 1.0:
            raise ValidationError("level must lie in (0, 1)", module="cli_reporting")
        if self.n_boot < 2:
            raise ValidationError("need at least 2 bootstrap replicates", module="cli_reporting")
        # normalizes and validates alpha/lambda the same way the fit will
        pen = self.penalty_spec()
        if self.penalty == "none":
            object.__setattr__(self, "alpha", "cv")
            object.__setattr__(self, "lam", "cv")
        else:
            object.__setattr__(self, "alpha", pen.alpha)
            object.__setattr__(self, "lam", pen.lam)

    def penalty_spec(self) -> Penalty:
        return Penalty(self.penalty, self.alpha, self.lam)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = format_predictors(v) if f.name == "predictors" else v
        return out


# Keys accepted in a config file; the same names (with "-" for "_") are the CLI flags.
_CONVERTERS = {
    "input": str,
    "outcome": str,
    "predictors": parse_predictors,
    "family": str,
    "penalty": str,
    "alpha": _alpha_or_cv,
    "lam": _alpha_or_cv,
    "lambda": _alpha_or_cv,
    "folds": int,
    "stratify": None,
    "rule": str,
    "n_boot": int,
    "level": float,
    "seed": int,
    "reselect_alpha": None,
    "drop_constant": None,
    "report": str,
    "forest": str,
}


def read_config_file(path: str | Path) -> dict:
    """Read ``key = value`` lines (``#`` comments allowed) into RunConfig fields."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc.strerror}", module="cli_reporting") from exc
    parser = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ValidationError(f"malformed config file {path}: {exc}", module="cli_reporting") from exc
    out = {}
    for raw_key, raw in parser["run"].items():
        key = raw_key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ValidationError(f"unknown config key {key!r} in {path}", module="cli_reporting")
        conv = _CONVERTERS[key]
        try:
            if conv is None:
                value = parser["run"].getboolean(raw_key)
            else:
                value = conv(raw)
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"config key {key!r}: cannot parse {raw!r}", module="cli_reporting") from exc
        out["lam" if key == "lambda" else key] = value
    return out


def merge(base: dict, overrides: dict) -> RunConfig:
    """RunConfig from file values ``base`` overridden by explicitly given flags."""
    merged = {**base, **{k: v for k, v in overrides.items() if v is not None}}
    return RunConfig(**merged)
