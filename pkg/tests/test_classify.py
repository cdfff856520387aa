import numpy as np
import pytest

from conftest import rng_for
from topomill.classify import (ALGORITHMS, Dataset, EvalResult,
                               TrainingError, default_hyperparams, evaluate,
                               predict, split, train)


def separable_dataset(n_per_class=30, n_features=3, seed="toy"):
    rng = rng_for(seed)
    X = np.vstack([rng.normal(0, 0.3, (n_per_class, n_features)),
                   rng.normal(5, 0.3, (n_per_class, n_features))])
    y = np.array(["quiet"] * n_per_class + ["loud"] * n_per_class)
    return Dataset(X=X, y=y, grid_index=np.arange(2 * n_per_class))


def test_split_67_33_counts():
    ds = separable_dataset(50)  # 100 rows
    train_ds, test_ds = split(ds, 0.67, seed=0)
    assert len(train_ds) == 67
    assert len(test_ds) == 33


def test_split_deterministic_disjoint_covering():
    ds = separable_dataset(50)
    a_train, a_test = split(ds, 0.67, seed=5)
    b_train, b_test = split(ds, 0.67, seed=5)
    assert np.array_equal(a_train.grid_index, b_train.grid_index)
    assert np.array_equal(a_test.grid_index, b_test.grid_index)
    merged = np.sort(np.concatenate([a_train.grid_index, a_test.grid_index]))
    assert np.array_equal(merged, np.arange(100))
    c_train, _ = split(ds, 0.67, seed=6)
    assert not np.array_equal(a_train.grid_index, c_train.grid_index)


def test_split_rejects_empty_class_in_training():
    X = rng_for("tiny").normal(size=(6, 2))
    y = np.array(["a", "a", "a", "a", "a", "b"])
    ds = Dataset(X=X, y=y, grid_index=np.arange(6))
    seen_error = False
    for seed in range(40):
        try:
            train_ds, _ = split(ds, 0.5, seed)
            assert set(np.unique(train_ds.y)) == {"a", "b"}
        except ValueError:
            seen_error = True
    assert seen_error, "no seed ever put the singleton class fully in test"


def test_split_rejects_bad_fraction():
    ds = separable_dataset(10)
    for fraction in (0.0, 1.0, -0.3):
        with pytest.raises(ValueError):
            split(ds, fraction, seed=0)


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_train_fits_separable_data_perfectly(algo):
    ds = separable_dataset()
    model = train(ds, algo, seed=3)
    assert np.mean(predict(model, ds.X) == ds.y) == 1.0


def test_train_rejects_single_class():
    ds = separable_dataset()
    lonely = Dataset(X=ds.X[:30], y=ds.y[:30], grid_index=ds.grid_index[:30])
    with pytest.raises(TrainingError):
        train(lonely, "svm")


def test_train_unknown_algorithm():
    with pytest.raises(ValueError):
        train(separable_dataset(), "nearest_wish")


def test_random_forest_uses_100_trees_of_depth_two():
    ds = separable_dataset()
    model = train(ds, "random_forest", seed=0)
    trees = model.estimator.estimators_
    assert len(trees) == 100
    assert model.estimator.max_depth == 2
    assert max(t.get_depth() for t in trees) <= 2
    assert default_hyperparams("random_forest") == {"n_estimators": 100,
                                                    "max_depth": 2}


def test_logistic_nonconvergence_signaled():
    rng = rng_for("hard-lr")
    X = rng.normal(size=(60, 4))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=60) > 0, "a", "b")
    ds = Dataset(X=X, y=y, grid_index=np.arange(60))
    with pytest.raises(TrainingError):
        train(ds, "logistic", hp={"max_iter": 1})


def test_predict_reproduces_training_labels_on_separable_data():
    ds = separable_dataset()
    model = train(ds, "gradient_boost", seed=1)
    assert np.array_equal(predict(model, ds.X), ds.y)


def test_predict_row_permutation_consistency():
    ds = separable_dataset()
    model = train(ds, "svm", seed=1)
    perm = rng_for("perm").permutation(len(ds))
    assert np.array_equal(predict(model, ds.X[perm]), predict(model, ds.X)[perm])


def test_predict_rejects_width_mismatch():
    ds = separable_dataset(n_features=3)
    model = train(ds, "logistic")
    with pytest.raises(ValueError):
        predict(model, ds.X[:, :2])


def test_three_class_one_vs_rest_for_svm_and_logistic():
    rng = rng_for("three")
    X = np.vstack([rng.normal(c, 0.3, (20, 2)) for c in (0.0, 5.0, -5.0)])
    y = np.array(["a"] * 20 + ["b"] * 20 + ["c"] * 20)
    ds = Dataset(X=X, y=y, grid_index=np.arange(60))
    for algo in ("svm", "logistic"):
        model = train(ds, algo, seed=0)
        assert type(model.estimator).__name__ == "OneVsRestClassifier"
        assert np.mean(predict(model, X) == y) == 1.0
    for algo in ("random_forest", "gradient_boost"):
        model = train(ds, algo, seed=0)
        assert type(model.estimator).__name__ != "OneVsRestClassifier"
        assert np.mean(predict(model, X) == y) == 1.0


def test_standardization_uses_training_statistics_only():
    rng = rng_for("leakage")
    X = np.vstack([rng.normal(0, 1, (40, 3)), rng.normal(1, 2, (40, 3))])
    y = np.array(["a"] * 40 + ["b"] * 40)
    ds = Dataset(X=X, y=y, grid_index=np.arange(80))
    train_ds, test_ds = split(ds, 0.67, seed=2)
    model = train(train_ds, "svm", seed=2)
    assert np.allclose(model.scaler_mean, train_ds.X.mean(axis=0))
    standardized_train = model.transform(train_ds.X)
    assert np.allclose(standardized_train.mean(axis=0), 0.0, atol=1e-12)
    standardized_test = model.transform(test_ds.X)
    # Test rows are transformed with the training statistics, so their mean
    # need not vanish.
    assert np.max(np.abs(standardized_test.mean(axis=0))) > 1e-6


def test_trees_are_unscaled():
    ds = separable_dataset()
    model = train(ds, "random_forest")
    assert model.scaler_mean is None
    assert np.array_equal(model.transform(ds.X), ds.X)


def test_accuracy_invariant_under_label_swap():
    rng = rng_for("swap")
    X = rng.normal(size=(80, 4))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=80) > 0, "a", "b")
    ds = Dataset(X=X, y=y, grid_index=np.arange(80))
    swapped = Dataset(X=X, y=np.where(y == "a", "b", "a"),
                      grid_index=np.arange(80))
    n_test = 80 - int(round(0.67 * 80))
    for algo in ALGORITHMS:
        res = evaluate(ds, algo, repeats=5, seeds=[1, 2, 3, 4, 5])
        res_swapped = evaluate(swapped, algo, repeats=5, seeds=[1, 2, 3, 4, 5])
        # Gradient boosting fits the log-odds of the lexicographically larger
        # class; the sign flip is exact in real arithmetic but its stagewise
        # float rounding differs, so allow one boundary sample to move.
        tol = 0.0 if algo != "gradient_boost" else 1.0 / n_test + 1e-12
        assert np.max(np.abs(res.per_split_accuracies
                             - res_swapped.per_split_accuracies)) <= tol


def test_tree_models_invariant_under_monotone_feature_maps():
    rng = rng_for("monotone-trees")
    X = rng.uniform(0.1, 2.0, size=(70, 3))
    y = np.where(X[:, 0] * X[:, 1] > 0.8, "a", "b")
    ds = Dataset(X=X, y=y, grid_index=np.arange(70))
    warped = Dataset(X=np.exp(X), y=y, grid_index=np.arange(70))
    for algo in ("random_forest", "gradient_boost"):
        base = train(ds, algo, seed=4)
        mapped = train(warped, algo, seed=4)
        assert np.array_equal(predict(base, X), predict(mapped, np.exp(X)))


def test_evaluate_bitwise_deterministic():
    ds = separable_dataset(40, seed="eval-det")
    a = evaluate(ds, "random_forest", repeats=10, seeds=list(range(10)))
    b = evaluate(ds, "random_forest", repeats=10, seeds=list(range(10)))
    assert np.array_equal(a.per_split_accuracies, b.per_split_accuracies)
    assert np.array_equal(a.per_point_misclassification_counts,
                          b.per_point_misclassification_counts)
    assert np.array_equal(a.per_point_test_counts, b.per_point_test_counts)
    assert a.mean_accuracy == b.mean_accuracy
    assert a.std_accuracy == b.std_accuracy


class _ConstantModel:
    def __init__(self, label, n_features):
        self.label = label
        self.n_features = n_features
        self.scaler_mean = None
        self.scaler_scale = None

    def transform(self, X):
        return X


def _oracle_trainer(label):
    def trainer(train_ds, algo, hp=None, seed=0):
        return _ConstantModel(label, train_ds.X.shape[1])
    return trainer


class _PerfectModel:
    def __init__(self, lookup, n_features):
        self.lookup = lookup
        self.n_features = n_features

    def transform(self, X):
        return X


def test_evaluate_all_correct_stub_scores_one(monkeypatch):
    import topomill.classify as clf_mod

    ds = separable_dataset(30)
    truth = {tuple(row): label for row, label in zip(ds.X, ds.y)}

    def perfect_trainer(train_ds, algo, hp=None, seed=0):
        return _PerfectModel(truth, train_ds.X.shape[1])

    original_predict = clf_mod.predict

    def routing_predict(model, X):
        if isinstance(model, _PerfectModel):
            return np.array([model.lookup[tuple(row)] for row in X])
        if isinstance(model, _ConstantModel):
            return np.full(X.shape[0], model.label)
        return original_predict(model, X)

    monkeypatch.setattr(clf_mod, "predict", routing_predict)
    res = clf_mod.evaluate(ds, "svm", repeats=10, seeds=list(range(10)),
                           trainer=perfect_trainer)
    assert res.mean_accuracy == 1.0
    assert res.std_accuracy == 0.0
    assert np.all(res.per_point_misclassification_counts == 0)


def test_evaluate_majority_baseline_near_class_fraction(monkeypatch):
    import topomill.classify as clf_mod

    rng = rng_for("majority")
    X = rng.normal(size=(100, 2))
    y = np.array(["big"] * 70 + ["small"] * 30)
    ds = Dataset(X=X, y=y, grid_index=np.arange(100))

    original_predict = clf_mod.predict

    def routing_predict(model, X):
        if isinstance(model, _ConstantModel):
            return np.full(X.shape[0], model.label)
        return original_predict(model, X)

    monkeypatch.setattr(clf_mod, "predict", routing_predict)
    res = clf_mod.evaluate(ds, "svm", repeats=10, seeds=list(range(10)),
                           trainer=_oracle_trainer("big"))
    # Hypergeometric sampling of the majority class around 0.70.
    assert abs(res.mean_accuracy - 0.70) < 0.07


def test_evaluate_propagates_failures_with_context():
    rng = rng_for("eval-fail")
    X = rng.normal(size=(30, 2))
    y = np.array(["a"] * 29 + ["b"])
    ds = Dataset(X=X, y=y, grid_index=np.arange(30))
    with pytest.raises(TrainingError, match="repeat"):
        evaluate(ds, "svm", repeats=10, seeds=list(range(10)))


def test_eval_result_consistency_enforced():
    acc = np.array([0.5, 0.7, 0.9])
    EvalResult(mean_accuracy=float(np.mean(acc)),
               std_accuracy=float(np.std(acc, ddof=1)),
               per_split_accuracies=acc,
               per_point_misclassification_counts=np.zeros(3, dtype=np.int64),
               per_point_test_counts=np.zeros(3, dtype=np.int64))
    with pytest.raises(ValueError):
        EvalResult(mean_accuracy=0.9, std_accuracy=0.0,
                   per_split_accuracies=acc,
                   per_point_misclassification_counts=np.zeros(3, dtype=np.int64),
                   per_point_test_counts=np.zeros(3, dtype=np.int64))


def test_evaluate_mean_std_recomputable_to_1e12():
    ds = separable_dataset(25, seed="stats")
    res = evaluate(ds, "logistic", repeats=10, seeds=list(range(10)))
    assert abs(res.mean_accuracy - np.mean(res.per_split_accuracies)) < 1e-12
    assert abs(res.std_accuracy - np.std(res.per_split_accuracies, ddof=1)) < 1e-12


def test_evaluate_seed_count_must_match_repeats():
    ds = separable_dataset(25)
    with pytest.raises(ValueError):
        evaluate(ds, "svm", repeats=10, seeds=[1, 2, 3])
