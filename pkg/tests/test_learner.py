import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpcfl.errors import DatasetParseError, DimensionMismatchError, EmptyDatasetError, SchemaError
from mpcfl.learner import (
    COMPLEX_NN,
    N_FEATURES,
    SIMPLE_NN,
    Dataset,
    ModelTensor,
    compute_metrics,
    forward,
    gen_synthetic,
    init_model,
    load_csv,
    local_train,
    loss_and_grad,
    metrics_from_counts,
    predict,
    write_csv,
)


def test_model_sizes():
    assert SIMPLE_NN.size == 242
    assert COMPLEX_NN.size == 7380
    assert [w.shape for w in init_model(COMPLEX_NN, 0).layers()] == [(121, 60), (60, 2)]


def test_zero_weights_give_zero_scores_and_class_zero():
    m = ModelTensor(SIMPLE_NN, np.zeros(242))
    x = np.random.default_rng(0).normal(size=(5, N_FEATURES))
    np.testing.assert_array_equal(forward(m, x), np.zeros((5, 2)))
    assert predict(m, x).tolist() == [0] * 5


def test_simple_model_is_linear():
    m = init_model(SIMPLE_NN, 3)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=N_FEATURES), rng.normal(size=N_FEATURES)
    np.testing.assert_allclose(forward(m, 2 * a - 3 * b), 2 * forward(m, a) - 3 * forward(m, b), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([SIMPLE_NN, COMPLEX_NN]))
def test_forward_finite_on_bounded_inputs(seed, spec):
    x = np.random.default_rng(seed).uniform(-10, 10, size=(4, N_FEATURES))
    assert np.isfinite(forward(init_model(spec, seed), x)).all()


def test_forward_rejects_wrong_width():
    with pytest.raises(DimensionMismatchError):
        forward(init_model(SIMPLE_NN, 0), np.zeros(120))
    with pytest.raises(DimensionMismatchError):
        ModelTensor(SIMPLE_NN, np.zeros(241))


def _numeric_grad_check(spec, seed, coords=20):
    sets, _ = gen_synthetic(1, 30, seed=seed)
    data = sets[0]
    model = init_model(spec, seed)
    _, g = loss_and_grad(model, data)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for j in rng.choice(spec.size, size=coords, replace=False):
        h = 1e-6
        up, dn = model.copy(), model.copy()
        up.weights[j] += h
        dn.weights[j] -= h
        num = (loss_and_grad(up, data)[0] - loss_and_grad(dn, data)[0]) / (2 * h)
        worst = max(worst, abs(num - g[j]) / max(1e-8, abs(num), abs(g[j])))
    return worst


@pytest.mark.parametrize("spec", [SIMPLE_NN, COMPLEX_NN], ids=["simple", "complex"])
def test_gradient_matches_finite_differences(spec):
    assert _numeric_grad_check(spec, 7) <= 1e-4


def test_local_train_zero_steps_is_identity():
    m = init_model(SIMPLE_NN, 0)
    d = gen_synthetic(1, 20)[0][0]
    out = local_train(m, d, 0)
    np.testing.assert_array_equal(out.weights, m.weights)
    assert out.weights is not m.weights


def test_local_train_reduces_loss_and_is_deterministic():
    d = gen_synthetic(1, 100, seed=2)[0][0]
    m = init_model(SIMPLE_NN, 2)
    a = local_train(m, d, 45)
    b = local_train(m, d, 45)
    assert loss_and_grad(a, d)[0] < loss_and_grad(m, d)[0]
    np.testing.assert_array_equal(a.weights, b.weights)
    assert a.iteration == 45


def test_empty_dataset():
    empty = Dataset(np.empty((0, N_FEATURES)), np.empty(0))
    with pytest.raises(EmptyDatasetError):
        loss_and_grad(init_model(SIMPLE_NN, 0), empty)
    with pytest.raises(EmptyDatasetError):
        compute_metrics(init_model(SIMPLE_NN, 0), empty)


def test_metrics_hand_example():
    m = metrics_from_counts(tp=3, fp=1, tn=5, fn=1)
    assert m.recall == 0.75
    assert m.precision == 0.75
    assert m.balanced == pytest.approx((0.75 + 5 / 6) / 2)
    assert round(m.balanced, 4) == 0.7917
    assert m.undefined == ()


def test_metrics_perfect_and_degenerate():
    p = metrics_from_counts(4, 0, 6, 0)
    assert (p.recall, p.precision, p.balanced) == (1.0, 1.0, 1.0)
    allpos = metrics_from_counts(5, 5, 0, 0)
    assert allpos.recall == 1.0 and allpos.precision == 0.5 and allpos.balanced == 0.5
    none_pos = metrics_from_counts(0, 0, 5, 0)
    assert math.isnan(none_pos.recall) and math.isnan(none_pos.balanced)
    assert set(none_pos.undefined) == {"recall", "precision", "balanced"}


def test_compute_metrics_counts_confusion():
    m = ModelTensor(SIMPLE_NN, np.zeros(242))
    m.weights[1::2] = 0.0
    # weight on class 1 for feature 0 only: predicts 1 iff x0 > 0
    w = m.layers()[0]
    w[0, 1] = 1.0
    x = np.zeros((4, N_FEATURES))
    x[:, 0] = [1, 1, -1, -1]
    met = compute_metrics(m, Dataset(x, [1, 0, 0, 1]))
    assert (met.tp, met.fp, met.tn, met.fn) == (1, 1, 1, 1)


def test_synthetic_is_deterministic_and_balanced():
    a, ha = gen_synthetic(3, 50, seed=4)
    b, hb = gen_synthetic(3, 50, seed=4)
    for x, y in zip(a + [ha], b + [hb]):
        np.testing.assert_array_equal(x.features, y.features)
        assert x.labels.sum() == len(x) // 2
    c, _ = gen_synthetic(3, 50, seed=5)
    assert not np.array_equal(a[0].features, c[0].features)


def test_synthetic_is_learnable():
    sets, held = gen_synthetic(4, 200, seed=0)
    m = local_train(init_model(SIMPLE_NN, 0), Dataset.concat(sets), 45)
    assert compute_metrics(m, held).balanced >= 0.9


def test_csv_two_rows(tmp_path):
    p = tmp_path / "d.csv"
    rows = [",".join(["0.5"] * N_FEATURES + ["1"]), ",".join(["-1"] * N_FEATURES + ["0"])]
    p.write_text("\n".join(rows) + "\n")
    d = load_csv(p)
    assert d.features.shape == (2, N_FEATURES)
    assert d.labels.tolist() == [1, 0]


def test_csv_wrong_width(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(",".join(["0"] * 120) + "\n")
    with pytest.raises(SchemaError):
        load_csv(p)


def test_csv_round_trip(tmp_path):
    d = gen_synthetic(1, 10, seed=9)[0][0]
    back = load_csv(write_csv(d, tmp_path / "x.csv"))
    np.testing.assert_array_equal(back.features, d.features)
    np.testing.assert_array_equal(back.labels, d.labels)
    back = load_csv(write_csv(d, tmp_path / "y.csv", header=False))
    np.testing.assert_array_equal(back.features, d.features)


def test_csv_parse_error_location(tmp_path):
    p = tmp_path / "d.csv"
    good = ",".join(["0"] * N_FEATURES + ["1"])
    bad = ",".join(["0"] * 6 + ["abc"] + ["0"] * (N_FEATURES - 7) + ["1"])
    p.write_text("\n".join([good, good, bad]) + "\n")
    with pytest.raises(DatasetParseError) as err:
        load_csv(p)
    assert (err.value.row, err.value.column) == (3, 7)
    p.write_text(",".join(["0"] * N_FEATURES + ["2"]) + "\n")
    with pytest.raises(DatasetParseError) as err:
        load_csv(p)
    assert err.value.column == N_FEATURES + 1
