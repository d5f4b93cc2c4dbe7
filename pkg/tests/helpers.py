"""Shared instance generators for the test modules."""

import numpy as np


def binary_instance(seed, n=200, p=5, base=0.25, scale=0.25, family="poisson-log"):
    """Random design with a binary outcome drawn from a valid risk model.

    Poisson truth keeps exp(eta) below 0.95; identity truth clips the risk
    into (0.02, 0.98); logistic truth is unrestricted.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    b = rng.normal(scale=scale, size=p)
    eta = X @ b
    if family == "poisson-log":
        risk = np.minimum(base * np.exp(eta), 0.95)
    elif family == "gaussian-identity":
        risk = np.clip(0.4 + 0.1 * eta, 0.02, 0.98)
    else:
        risk = 1 / (1 + np.exp(-(np.log(base / (1 - base)) + eta)))
    y = (rng.random(n) < risk).astype(float)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


SEPARATED_LEVELS = ("z1", "z2", "z3", "z4")


def separated_columns(seed=0, n=240):
    """Cohort columns where four rare cancer types have no events among carriers.

    ``cancer`` has a common reference level, two rare levels with both
    outcomes and the four zero-event levels of ``SEPARATED_LEVELS``; ``age``
    is continuous and ``sex`` a balanced 0/1 column.
    """
    rng = np.random.default_rng(seed)
    cancer = np.array(["common"] * n, dtype=object)
    start = 0
    for level, size in (("b", 16), ("c", 16)) + tuple((z, 6) for z in SEPARATED_LEVELS):
        cancer[start:start + size] = level
        start += size
    age = rng.normal(50, 10, size=n)
    sex = (np.arange(n) % 2).astype(float)
    risk = np.clip(0.3 * np.exp(0.02 * (age - 50)), 0, 0.9)
    y = (rng.random(n) < risk).astype(float)
    y[np.isin(cancer, SEPARATED_LEVELS)] = 0.0
    for level in ("b", "c"):
        idx = np.flatnonzero(cancer == level)
        y[idx[:4]] = 1.0
        y[idx[4:8]] = 0.0
    y[start:start + 4] = (1.0, 1.0, 0.0, 0.0)
    perm = rng.permutation(n)
    return {"y": y[perm], "age": age[perm], "sex": sex[perm], "cancer": cancer[perm].astype(str)}


def write_csv(path, columns):
    """Write ``columns`` (name -> sequence) as a CSV with a header row."""
    names = list(columns)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(columns[c] for c in names)):
            fh.write(",".join(str(int(v)) if isinstance(v, float) and v.is_integer() and v in (0.0, 1.0)
                              else str(v) for v in row) + "\n")
    return path
