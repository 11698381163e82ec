import random
import statistics

import numpy as np
import pytest

from xlcat.errors import DataError
from xlcat.learner import (
    LinearModel,
    TrainingError,
    evaluate,
    predict,
    report_from_pairs,
    train,
)


def separable_toy(n_per_class=10):
    """Feature 0 marks class A, feature 1 marks class B."""
    vectors = [frozenset({0})] * n_per_class + [frozenset({1})] * n_per_class
    labels = ["A"] * n_per_class + ["B"] * n_per_class
    return vectors, labels


class TestTrain:
    def test_separable_training_accuracy_one(self):
        vectors, labels = separable_toy()
        model = train(vectors, labels, ["A", "B"], n_features=2, seed=1)
        assert all(predict(model, v) == lab for v, lab in zip(vectors, labels))
        assert evaluate(model, vectors, labels).accuracy == 1.0

    def test_single_example_per_class_memorized(self):
        vectors = [frozenset({0}), frozenset({1}), frozenset({2})]
        labels = ["A", "B", "C"]
        model = train(vectors, labels, ["A", "B", "C"], n_features=3, seed=0)
        assert [predict(model, v) for v in vectors] == labels

    def test_same_seed_bit_identical(self):
        vectors, labels = separable_toy(15)
        m1 = train(vectors, labels, ["A", "B"], n_features=2, seed=9)
        m2 = train(vectors, labels, ["A", "B"], n_features=2, seed=9)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.bias, m2.bias)

    def test_empty_category_rejected(self):
        vectors, labels = separable_toy()
        with pytest.raises(TrainingError):
            train(vectors, labels, ["A", "B", "C"], n_features=2)

    def test_label_outside_categories_rejected(self):
        with pytest.raises(TrainingError):
            train([frozenset({0})], ["X"], ["A"], n_features=1)

    def test_out_of_range_coordinate_rejected(self):
        with pytest.raises(TrainingError):
            train([frozenset({5})], ["A"], ["A"], n_features=2)

    def test_objective_decreases_on_separable_data(self):
        # Statistically over seeds: the regularized hinge objective at the
        # last epoch is below the first epoch's.
        firsts, lasts = [], []
        for seed in range(10):
            vectors, labels = separable_toy(12)
            model = train(vectors, labels, ["A", "B"], n_features=2, seed=seed, epochs=15)
            for cat in model.categories:
                history = model.objective_history[cat]
                firsts.append(history[0])
                lasts.append(history[-1])
        assert statistics.mean(lasts) < statistics.mean(firsts)
        assert statistics.mean(lasts) < 0.2


class TestPredict:
    def test_all_zero_vector_takes_largest_bias(self):
        model = LinearModel(
            categories=["A", "B"],
            weights=np.zeros((2, 3)),
            bias=np.array([0.1, 0.7]),
            lambda_=1e-4,
            epochs=1,
            seed=0,
        )
        assert predict(model, frozenset()) == "B"

    def test_signed_weights(self):
        model = LinearModel(
            categories=["A", "B"],
            weights=np.array([[1.0, 0.0], [-1.0, 0.0]]),
            bias=np.zeros(2),
            lambda_=1e-4,
            epochs=1,
            seed=0,
        )
        assert predict(model, frozenset({0})) == "A"

    def test_ties_resolve_to_declaration_order(self):
        model = LinearModel(
            categories=["Z", "A"],
            weights=np.zeros((2, 2)),
            bias=np.zeros(2),
            lambda_=1e-4,
            epochs=1,
            seed=0,
        )
        assert predict(model, frozenset({0})) == "Z"

    def test_inactive_coordinates_ignored(self):
        rng = random.Random(4)
        weights = np.array([[rng.uniform(-1, 1) for _ in range(6)] for _ in range(2)])
        model = LinearModel(
            categories=["A", "B"], weights=weights.copy(), bias=np.zeros(2),
            lambda_=1e-4, epochs=1, seed=0,
        )
        before = predict(model, frozenset({1, 2}))
        model.weights[:, 4] = 99.0  # untouched coordinate
        assert predict(model, frozenset({1, 2})) == before

    def test_consistent_relabeling_invariance(self):
        rng = random.Random(8)
        n = 10
        weights = np.array([[rng.uniform(-1, 1) for _ in range(n)] for _ in range(3)])
        model = LinearModel(
            categories=["A", "B", "C"], weights=weights, bias=np.array([0.1, -0.2, 0.3]),
            lambda_=1e-4, epochs=1, seed=0,
        )
        perm = list(range(n))
        rng.shuffle(perm)
        permuted = LinearModel(
            categories=model.categories,
            weights=model.weights[:, perm],
            bias=model.bias,
            lambda_=1e-4, epochs=1, seed=0,
        )
        inverse = {p: i for i, p in enumerate(perm)}
        for _ in range(30):
            vec = frozenset(rng.sample(range(n), rng.randrange(0, n)))
            mapped = frozenset(inverse[i] for i in vec)
            assert predict(model, vec) == predict(permuted, mapped)


class TestEvaluate:
    def test_all_correct(self):
        vectors, labels = separable_toy()
        model = train(vectors, labels, ["A", "B"], n_features=2, seed=3)
        report = evaluate(model, vectors, labels)
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0

    def test_single_class_predictions_on_balanced_set(self):
        report = report_from_pairs(
            ["A", "B", "C"] * 4, ["A"] * 12, ["A", "B", "C"]
        )
        assert report.accuracy == pytest.approx(1 / 3)

    def test_hand_confusion_matrix(self):
        # confusion [[2,1],[0,3]] -> accuracy 5/6
        y_true = ["A", "A", "A", "B", "B", "B"]
        y_pred = ["A", "A", "B", "B", "B", "B"]
        report = report_from_pairs(y_true, y_pred, ["A", "B"])
        assert report.confusion == [[2, 1], [0, 3]]
        assert report.accuracy == pytest.approx(5 / 6)
        assert report.per_category["A"]["recall"] == pytest.approx(2 / 3)
        assert report.per_category["A"]["precision"] == pytest.approx(1.0)

    def test_accuracy_equals_brute_force_match_count(self):
        rng = random.Random(31)
        cats = ["x", "y", "z"]
        y_true = [rng.choice(cats) for _ in range(200)]
        y_pred = [rng.choice(cats) for _ in range(200)]
        report = report_from_pairs(y_true, y_pred, cats)
        matches = sum(1 for a, b in zip(y_true, y_pred) if a == b)
        assert report.accuracy == matches / 200

    def test_class_missing_from_test_gets_zero(self):
        report = report_from_pairs(["A", "A"], ["A", "A"], ["A", "B"])
        assert report.per_category["B"]["precision"] == 0.0
        assert report.per_category["B"]["recall"] == 0.0

    def test_empty_test_set_rejected(self):
        model = train(*separable_toy(), categories=["A", "B"], n_features=2)
        with pytest.raises(DataError):
            evaluate(model, [], [])

    def test_unknown_test_label_rejected(self):
        model = train(*separable_toy(), categories=["A", "B"], n_features=2)
        with pytest.raises(DataError):
            evaluate(model, [frozenset({0})], ["Q"])

    def test_confusion_row_sums_are_per_category_counts(self):
        rng = random.Random(77)
        cats = ["a", "b", "c", "d"]
        y_true = [rng.choice(cats) for _ in range(120)]
        y_pred = [rng.choice(cats) for _ in range(120)]
        report = report_from_pairs(y_true, y_pred, cats)
        for i, cat in enumerate(cats):
            assert sum(report.confusion[i]) == y_true.count(cat)


class TestPersistence:
    def test_load_predict_bit_identical(self, tmp_path):
        rng = random.Random(12)
        vectors = [frozenset(rng.sample(range(20), rng.randrange(0, 8))) for _ in range(60)]
        labels = [rng.choice(["A", "B", "C"]) for _ in range(60)]
        for cat in ("A", "B", "C"):
            if cat not in labels:
                labels[0] = cat
        model = train(vectors, labels, ["A", "B", "C"], n_features=20, seed=5)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = LinearModel.load(path)
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.bias, model.bias)
        for vec in vectors:
            assert predict(loaded, vec) == predict(model, vec)

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "nope"}', encoding="utf-8")
        with pytest.raises(DataError):
            LinearModel.load(path)
