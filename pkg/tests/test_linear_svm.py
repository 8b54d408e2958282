import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from deeptemporal.errors import ShapeError
from deeptemporal.linear_svm import (
    ClassScores, SvmModel, accuracy, cross_validate, cv_folds, decision_function, predict, predict_scores,
    read_score_file, select_C, train_ovr, write_score_file,
)


def test_separable_1d():
    model = train_ovr([[-1.0], [1.0]], [0, 1], C_reg=10, epochs=200)
    assert predict(model, [[-1.0], [1.0]]).tolist() == [0, 1]
    assert model.weights[1, 0] > 0


def separable(rng, n=60, D=4, margin=0.5):
    w = rng.normal(size=D)
    w /= np.linalg.norm(w)
    X = rng.normal(size=(n * 3, D))
    s = X @ w
    keep = np.abs(s) > margin
    X, s = X[keep][:n], s[keep][:n]
    return X, (s > 0).astype(int)


def test_separable_reaches_full_training_accuracy(rng):
    for _ in range(5):
        X, y = separable(rng, margin=0.1)
        model = train_ovr(X, y, C_reg=10, epochs=200, seed=int(rng.integers(100)))
        assert accuracy(predict(model, X), y) == 1.0


def test_duplicated_dataset_same_predictions(rng):
    # duplicating every point doubles the hinge term; halving C_reg restores the objective
    X, y = separable(rng, n=30, margin=0.3)
    a = train_ovr(X, y, C_reg=1.0, epochs=200)
    b = train_ovr(np.vstack([X, X]), np.concatenate([y, y]), C_reg=0.5, epochs=200)
    assert_array_equal(predict(a, X), predict(b, X))


def test_identical_features_cannot_beat_prior():
    X = np.ones((10, 3))
    y = np.array([0] * 6 + [1] * 4)
    model = train_ovr(X, y, epochs=20)
    assert accuracy(predict(model, X), y) <= 0.6


def test_deterministic(rng):
    X, y = separable(rng)
    a, b = train_ovr(X, y, seed=4), train_ovr(X, y, seed=4)
    assert_array_equal(a.weights, b.weights)
    assert_array_equal(a.bias, b.bias)


def test_errors():
    with pytest.raises(ShapeError):
        train_ovr([[1.0, 2.0], [1.0]], [0, 1])
    with pytest.raises(ValueError):
        train_ovr([[1.0], [2.0]], [1, 1])


def test_zero_model_ties_to_class_zero():
    s = predict_scores(SvmModel(np.zeros((3, 2)), np.zeros(3)), [1.0, -2.0])
    assert s.scores.tolist() == [0, 0, 0] and s.label == 0


def test_scores_hand_example():
    model = SvmModel(weights=np.array([[0.5], [1.0]]), bias=np.zeros(2))
    s = predict_scores(model, [2.0])
    assert s.scores.tolist() == [1.0, 2.0] and s.label == 1


def test_scores_linear_without_bias(rng):
    model = SvmModel(rng.normal(size=(4, 5)), np.zeros(4))
    x = rng.normal(size=5)
    for k in (0.1, 3.0, 17.0):
        assert_allclose(predict_scores(model, k * x).scores, k * predict_scores(model, x).scores, rtol=1e-12)
        assert predict_scores(model, k * x).label == predict_scores(model, x).label


def test_score_shape_mismatch():
    with pytest.raises(ShapeError):
        predict_scores(SvmModel(np.zeros((2, 3)), np.zeros(2)), [1.0, 2.0])


def test_folds_partition_and_respect_groups(rng):
    y = rng.integers(0, 3, 40)
    groups = rng.integers(1, 7, 40)
    folds = cv_folds(y, 4, groups, seed=2)
    assert sorted(np.concatenate(folds).tolist()) == list(range(40))
    owner = {}
    for f, idx in enumerate(folds):
        for g in groups[idx]:
            assert owner.setdefault(g, f) == f
    folds = cv_folds(y, 5, seed=2)
    assert sorted(np.concatenate(folds).tolist()) == list(range(40))


def test_separable_cv_is_perfect(rng):
    X, y = separable(rng, n=40, margin=0.5)
    assert cross_validate(X, y, k=2, C_reg=10, epochs=100) == 1.0


def test_too_many_folds_for_groups():
    with pytest.raises(ValueError):
        cross_validate(np.zeros((6, 2)), [0, 1] * 3, groups=[1, 2, 3] * 2, k=5)


def test_select_C_returns_grid_value(rng):
    X, y = separable(rng, n=30)
    best, results = select_C(X, y, (0.1, 1.0), k=3, epochs=20)
    assert best in results and results[best] == max(results.values())


def test_score_file_round_trip(tmp_path, rng):
    rows = [(f"s{k}", ClassScores(rng.normal(size=3), "lstm-svm")) for k in range(4)]
    write_score_file(tmp_path / "s.txt", rows)
    back = read_score_file(tmp_path / "s.txt")
    for sid, cs in rows:
        assert_array_equal(back[sid].scores, cs.scores)
        assert back[sid].producer == "lstm-svm"


def test_model_save_load(tmp_path, rng):
    model = SvmModel(rng.normal(size=(3, 2)), rng.normal(size=3), C_reg=0.1)
    model.save(tmp_path / "m.json")
    back = SvmModel.load(tmp_path / "m.json")
    assert_array_equal(back.weights, model.weights)
    assert_array_equal(decision_function(back, np.eye(2)), decision_function(model, np.eye(2)))
