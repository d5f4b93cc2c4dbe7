import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from riskreg.data import (
    DesignMatrix,
    EncodingPlan,
    PredictorSpec,
    RawTable,
    Standardizer,
    default_reference,
    destandardize,
    encode,
    standardize,
    standardize_coef,
)
from riskreg.errors import ValidationError


def _cohort(rng, n, n_cont, cats):
    """Table with ``n_cont`` continuous columns and one categorical per entry
    of ``cats`` (its level count); every level is observed."""
    data = {"y": (np.arange(n) % 3 == 0).astype(float)}
    kinds = {"y": "binary"}
    specs = []
    for j in range(n_cont):
        data[f"c{j}"] = rng.normal(size=n)
        specs.append(PredictorSpec(f"c{j}"))
    for j, k in enumerate(cats):
        levels = np.array([f"L{i:02d}" for i in range(k)])
        data[f"g{j}"] = levels[rng.permutation(np.arange(n) % k)]
        kinds[f"g{j}"] = "categorical"
        specs.append(PredictorSpec(f"g{j}", "categorical"))
    for name in data:
        kinds.setdefault(name, "continuous")
    return RawTable.from_arrays(data, kinds), EncodingPlan("y", tuple(specs))


def test_encode_cmv_like_gives_21_columns(rng):
    table, plan = _cohort(rng, 64, 7, [13, 2, 2])
    dm = encode(table, plan)
    assert dm.p == 21
    assert dm.n == 64


def test_encode_ncds_like_gives_18_columns(rng):
    table, plan = _cohort(rng, 500, 12, [3, 5])
    assert encode(table, plan).p == 18


def test_encode_passthrough_is_identity(rng):
    table, plan = _cohort(rng, 30, 5, [])
    dm = encode(table, plan)
    expect = np.column_stack([table.columns[f"c{j}"] for j in range(5)])
    np.testing.assert_array_equal(dm.X, expect)
    assert dm.names == [f"c{j}" for j in range(5)]


def test_encode_records_provenance_and_drops_reference():
    table = RawTable.from_arrays({"y": [0, 1, 1, 0, 1], "g": ["a", "b", "b", "c", "b"]})
    dm = encode(table, EncodingPlan("y", (PredictorSpec("g", "categorical"),)))
    # most frequent level "b" is the default reference
    assert dm.names == ["g[a]", "g[c]"]
    assert [t.level for t in dm.terms] == ["a", "c"]
    assert all(t.source == "g" and t.reference == "b" for t in dm.terms)
    np.testing.assert_array_equal(dm.X, [[1, 0], [0, 0], [0, 0], [0, 1], [0, 0]])


def test_encode_declared_reference():
    table = RawTable.from_arrays({"y": [0, 1, 1, 0], "g": ["a", "b", "b", "c"]})
    dm = encode(table, EncodingPlan("y", (PredictorSpec("g", "categorical", "a"),)))
    assert dm.names == ["g[b]", "g[c]"]


def test_default_reference_tie_breaks_to_sorted_first():
    assert default_reference(np.array(["z", "a", "z", "a", "m"])) == "a"


@pytest.mark.parametrize(
    "data,spec,match",
    [
        ({"y": [0, 1], "x": [1.0, 2.0]}, PredictorSpec("nope"), "unknown column"),
        ({"y": [0, 1], "g": ["a", "a"]}, PredictorSpec("g", "categorical"), "single level"),
        ({"y": [0, 1], "g": ["a", "b"]}, PredictorSpec("g", "categorical", "q"), "not observed"),
        ({"y": [0, 2], "x": [1.0, 2.0]}, PredictorSpec("x"), "0/1"),
        ({"y": [1, 1], "x": [1.0, 2.0]}, PredictorSpec("x"), "single class"),
    ],
)
def test_encode_errors(data, spec, match):
    table = RawTable.from_arrays(data, {"y": "continuous"})
    with pytest.raises(ValidationError, match=match):
        encode(table, EncodingPlan("y", (spec,)))


def test_raw_table_rejects_unequal_lengths():
    with pytest.raises(ValidationError, match="unequal"):
        RawTable({"a": np.zeros(2), "b": np.zeros(3)}, {"a": "continuous", "b": "continuous"})


def test_standardize_example():
    Z, std = standardize(np.array([[1.0], [2.0], [3.0]]))
    assert std.mean[0] == pytest.approx(2.0)
    assert std.scale[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-15)
    np.testing.assert_allclose(Z[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)


def test_standardize_fixed_point(rng):
    x = rng.normal(size=50)
    x = (x - x.mean()) / x.std()
    Z, _ = standardize(x[:, None])
    np.testing.assert_allclose(Z[:, 0], x, atol=1e-12)


def test_standardize_constant_column_names_term():
    table = RawTable.from_arrays({"y": [0, 1, 0], "a": [1.0, 2.0, 3.0], "five": [5.0, 5.0, 5.0]})
    dm = encode(table, EncodingPlan.simple("y", ["a", "five"]))
    with pytest.raises(ValidationError, match="constant column 'five'"):
        standardize(dm)


def test_destandardize_identity():
    std = Standardizer(np.zeros(3), np.ones(3))
    beta = np.array([0.3, -1.0, 2.0, 0.5])
    np.testing.assert_array_equal(destandardize(beta, std), beta)


def test_destandardize_example():
    std = Standardizer(np.array([2.0]), np.array([4.0]))
    beta = destandardize(np.array([1.0, 0.5]), std)
    np.testing.assert_allclose(beta, [0.75, 0.125], atol=1e-15)
    for x in (0.0, 2.0, 6.0):
        eta_std = 1.0 + 0.5 * (x - 2.0) / 4.0
        assert beta[0] + beta[1] * x == pytest.approx(eta_std, abs=1e-15)


def test_destandardize_dimension_mismatch():
    with pytest.raises(ValidationError, match="does not match"):
        destandardize(np.zeros(3), Standardizer(np.zeros(1), np.ones(1)))


def test_round_trip_matches_raw_ols(rng):
    from riskreg.penalized import PenaltySpec, cd_fit

    X = rng.normal(loc=[3.0, -1.0, 10.0], scale=[2.0, 0.1, 5.0], size=(120, 3))
    y = (rng.random(120) < 0.4).astype(float)
    Z, std = standardize(X)
    beta = destandardize(cd_fit(Z, y, "gaussian-identity", PenaltySpec(0.0, 1.0)), std)
    A = np.column_stack([np.ones(120), X])
    ols, *_ = np.linalg.lstsq(A, y, rcond=None)
    assert np.max(np.abs(A @ beta - A @ ols)) < 1e-8


# --- properties -------------------------------------------------------------

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def matrices(draw):
    n = draw(st.integers(3, 30))
    p = draw(st.integers(1, 4))
    X = draw(arrays(float, (n, p), elements=finite))
    for j in range(p):
        if np.ptp(X[:, j]) < 1e-3 * max(1.0, np.abs(X[:, j]).max()):
            X[0, j] += 1.0 + abs(X[0, j])
    return X


@given(matrices())
def test_standardized_columns_have_unit_population_variance(X):
    Z, std = standardize(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(Z.var(axis=0), 1.0, atol=1e-10)
    assert np.all(std.scale > 0)
    back = std.inverse(Z)
    np.testing.assert_allclose(back, X, rtol=1e-12, atol=1e-12 * np.abs(X).max())


@given(matrices(), st.integers(0, 2**32 - 1))
def test_destandardize_preserves_linear_predictor(X, seed):
    Z, std = standardize(X)
    beta_std = np.random.default_rng(seed).normal(size=X.shape[1] + 1)
    beta = destandardize(beta_std, std)
    eta_std = beta_std[0] + Z @ beta_std[1:]
    eta = beta[0] + X @ beta[1:]
    assert np.max(np.abs(eta - eta_std)) < 1e-10 * max(1.0, np.abs(eta_std).max())
    np.testing.assert_allclose(standardize_coef(beta, std), beta_std, rtol=1e-9, atol=1e-9)


@given(st.lists(st.sampled_from("abcde"), min_size=4, max_size=40), st.integers(0, 2**32 - 1))
def test_encode_is_row_permutation_equivariant(levels, seed):
    n = len(levels)
    y = np.arange(n) % 2
    if len(set(levels)) < 2:
        levels = ["a", "b"] + levels[2:]
    table = RawTable.from_arrays({"y": y, "g": levels, "x": np.arange(n, dtype=float)})
    plan = EncodingPlan("y", (PredictorSpec("g", "categorical", "a" if "a" in levels else None),
                              PredictorSpec("x")))
    dm = encode(table, plan)
    assert np.all(np.isin(dm.X[:, :-1].sum(axis=1), (0.0, 1.0)))
    perm = np.random.default_rng(seed).permutation(n)
    dm2 = encode(table.take(perm), plan)
    assert dm2.names == dm.names
    np.testing.assert_array_equal(dm2.X, dm.X[perm])
    np.testing.assert_array_equal(dm2.y, dm.y[perm])
    dm3 = encode(table, plan)
    np.testing.assert_array_equal(dm3.X, dm.X)
