import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ginidebias.correction import (
    CorrectionFunction,
    CorrectionMap,
    SelectionVector,
    corrected_class_accuracy,
    corrected_predict,
    corrected_predictions,
    corrected_scores,
    default_map,
    evaluate,
    predictions_from_table,
    weights_only_map,
)
from ginidebias.dataset import LabeledPredictionSet, per_class_accuracy
from ginidebias.errors import ConfigError, DataFormatError, UnsupportedClassError

I = CorrectionFunction.identity()
S02 = CorrectionFunction.scale(0.2)


def test_evaluate():
    assert evaluate(S02, 0.6) == pytest.approx(0.12, abs=1e-15)
    for p in (0.0, 0.37, 1.0):
        assert evaluate(I, p) == p
    tri = CorrectionFunction.triangular(0, 0.5, 1)
    assert evaluate(tri, 0.5) == 1.0
    assert evaluate(tri, 0.0) == 0.0
    assert evaluate(tri, 0.25) == pytest.approx(0.5)
    assert evaluate(tri, 1.0) == 0.0


def test_triangular_outside_support_is_zero():
    tri = CorrectionFunction.triangular(0.25, 0.5, 0.75)
    np.testing.assert_array_equal(tri(np.array([0.0, 0.1, 0.8, 1.0])), 0.0)


def test_function_validation():
    with pytest.raises(ConfigError):
        CorrectionFunction.scale(0)
    with pytest.raises(ConfigError):
        CorrectionFunction.triangular(0.5, 0.5, 1.0)
    with pytest.raises(ConfigError):
        CorrectionFunction.triangular(0.0, 0.5, 1.5)
    with pytest.raises(ConfigError):
        CorrectionFunction("shift")


def test_map_invariants_and_defaults():
    with pytest.raises(ConfigError):
        CorrectionMap(())
    with pytest.raises(ConfigError):
        CorrectionMap((S02, I))
    m = default_map()
    assert len(m) == 9 and m[1] == I
    assert [f.kind for f in m.functions].count("triangular") == 3
    assert all(f.kind != "triangular" for f in weights_only_map().functions)
    with pytest.raises(IndexError):
        m[0]


def test_map_json_round_trip():
    m = default_map()
    assert CorrectionMap.from_dict(m.to_dict()) == m


def test_corrected_scores():
    m = CorrectionMap((I, S02))
    np.testing.assert_allclose(corrected_scores([0.6, 0.4], [2, 1], m), [0.12, 0.4])
    assert corrected_scores([0.6, 0.4], [1, 1], m).tolist() == [0.6, 0.4]
    tri = CorrectionMap((I, CorrectionFunction.triangular(0, 0.25, 0.5)))
    assert corrected_scores([0.5, 0.5], [2, 1], tri).tolist() == [0.0, 0.5]


def test_corrected_predict():
    m = CorrectionMap((I, S02))
    assert corrected_predict([0.6, 0.4], [2, 1], m) == 1
    assert corrected_predict([0.6, 0.4], [1, 1], m) == 0
    tri = CorrectionMap((I, CorrectionFunction.triangular(0, 0.25, 0.5)))
    # both classes score 0 after correction -> lowest index
    assert corrected_predict([0.5, 0.5], [2, 2], tri) == 0


def test_selection_validation():
    m = CorrectionMap((I, S02))
    with pytest.raises(ConfigError):
        corrected_scores([0.5, 0.5], [1, 3], m)
    with pytest.raises(DataFormatError):
        corrected_scores([0.5, 0.5], [1], m)


def test_scaling_class_zero_fixes_class_one():
    probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.6, 0.4], [0.7, 0.3]])
    d = LabeledPredictionSet(probs, np.array([0, 0, 1, 1]))
    m = CorrectionMap((I, S02))
    assert corrected_class_accuracy(d, [1, 1], m).accuracies.tolist() == [1.0, 0.0]
    # 0.2*0.9=0.18>0.1 kept, 0.2*0.8=0.16<0.2 flipped; both class-1 rows flip
    assert corrected_class_accuracy(d, [2, 1], m).accuracies.tolist() == [0.5, 1.0]


def test_identity_only_map():
    rng = np.random.default_rng(1)
    d = LabeledPredictionSet(rng.random((30, 3)), np.arange(30) % 3)
    m = CorrectionMap((I,))
    assert corrected_class_accuracy(d, [1, 1, 1], m) == per_class_accuracy(d)


def test_zero_support_is_an_error():
    d = LabeledPredictionSet(np.eye(3)[[0, 1]], np.array([0, 1]))
    with pytest.raises(UnsupportedClassError):
        corrected_class_accuracy(d, [1, 1, 1], default_map())


prob_sets = st.integers(2, 5).flatmap(
    lambda n: st.tuples(
        hnp.arrays(float, st.tuples(st.integers(n, 40), st.just(n)), elements=st.floats(1e-4, 1.0)),
        st.lists(st.integers(1, 9), min_size=n, max_size=n),
    )
)


def _with_all_labels(probs):
    n = probs.shape[1]
    return LabeledPredictionSet(probs, np.arange(probs.shape[0]) % n)


@settings(max_examples=60, deadline=None)
@given(prob_sets)
def test_identity_neutrality(case):
    probs, _ = case
    d = _with_all_labels(probs)
    n = d.n_classes
    assert corrected_class_accuracy(d, [1] * n, default_map()) == per_class_accuracy(d)


@settings(max_examples=60, deadline=None)
@given(prob_sets, st.integers(-6, 6))
def test_common_rescaling_keeps_predictions(case, power):
    probs, xi = case
    d = _with_all_labels(probs)
    table = default_map().apply_all(d.probs)
    xi0 = SelectionVector(tuple(xi)).zero_based()
    base = predictions_from_table(table, xi0)
    # powers of two rescale exactly, so no ties are created or broken
    assert np.array_equal(predictions_from_table(table * 2.0**power, xi0), base)


def test_common_rescaling_keeps_predictions_generic_factor():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(4), size=500)
    table = default_map().apply_all(probs)
    for _ in range(20):
        xi0 = rng.integers(0, 9, size=4)
        k = rng.uniform(0.05, 20)
        assert np.array_equal(predictions_from_table(table * k, xi0), predictions_from_table(table, xi0))


@settings(max_examples=60, deadline=None)
@given(prob_sets)
def test_scores_non_negative_and_deterministic(case):
    probs, xi = case
    d = _with_all_labels(probs)
    m = default_map()
    for row in d.probs[:5]:
        assert (corrected_scores(row, xi, m) >= 0).all()
    a = corrected_predictions(d.probs, xi, m)
    assert np.array_equal(a, corrected_predictions(d.probs, xi, m))
    assert a.tolist() == [corrected_predict(row, xi, m) for row in d.probs]


def test_partitioned_counts_match_whole():
    rng = np.random.default_rng(7)
    probs = rng.dirichlet(np.ones(3), size=300)
    labels = np.arange(300) % 3
    m, xi = default_map(), [2, 7, 1]
    preds = corrected_predictions(probs, xi, m)
    whole = np.bincount(labels[preds == labels], minlength=3)
    parts = sum(
        np.bincount(labels[s][corrected_predictions(probs[s], xi, m) == labels[s]], minlength=3)
        for s in np.array_split(np.arange(300), 7)
    )
    assert np.array_equal(whole, parts)
