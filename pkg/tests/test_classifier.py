"""Masks, metrics, KNN training/prediction, sweeps, and model files."""
from __future__ import annotations

import json

import numpy as np
import pytest

from wakeguard.classifier import (
    DEFAULT_K,
    KnnModel,
    MetricsReport,
    canonical_mask,
    evaluate,
    load_model,
    mask_indices,
    mask_label,
    parse_mask,
    predict,
    predict_batch,
    save_model,
    sweep_k,
    train,
)
from wakeguard.errors import (
    DimensionMismatch,
    EmptyTestSet,
    InsufficientTraining,
    ModelFormatError,
)
from wakeguard.features import FeatureVector, fit_baseline
from wakeguard.landmarks import AlertnessLabel


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))


def blobs(
    rng: np.random.Generator, n_per_class: int, gap: float = 6.0
) -> tuple[np.ndarray, np.ndarray]:
    """Two well-separated Gaussian blobs in feature space."""
    alert = rng.normal(loc=0.0, scale=1.0, size=(n_per_class, 4))
    drowsy = rng.normal(loc=gap, scale=1.0, size=(n_per_class, 4))
    vectors = np.vstack([alert, drowsy])
    labels = np.concatenate([np.zeros(n_per_class), np.ones(n_per_class)])
    return vectors, labels.astype(np.int64)


class TestMasks:
    @pytest.mark.parametrize("text", ["MAR+MOE", "mar,moe", "moe+mar", " mar , moe "])
    def test_parse_variants(self, text):
        assert parse_mask(text) == ("mar", "moe")

    def test_parse_full(self):
        assert parse_mask("EAR,MAR,PUC,MOE") == ("ear", "mar", "puc", "moe")

    @pytest.mark.parametrize("text", ["", "+", "ear+blink", "ear,ear"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            parse_mask(text)

    def test_canonical_order(self):
        assert canonical_mask(["moe", "ear"]) == ("ear", "moe")
        assert mask_label(("mar", "moe")) == "MAR+MOE"
        assert mask_indices(("ear", "moe")) == [0, 3]


class TestMetrics:
    def test_hand_example(self):
        # 10 predictions: 3 true drowsy hits, 1 false alarm, 1 miss, 5 true alerts
        report = MetricsReport(tp=3, fp=1, fn=1, tn=5)
        assert report.precision == pytest.approx(0.75)
        assert report.recall == pytest.approx(0.75)
        assert report.f1 == pytest.approx(0.75)
        assert report.accuracy == pytest.approx(0.8)
        np.testing.assert_array_equal(report.confusion, [[5, 1], [1, 3]])
        assert report.total == 10

    def test_zero_division_guards(self):
        report = MetricsReport(tp=0, fp=0, fn=0, tn=5)
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.f1 == 0.0
        assert report.accuracy == 1.0
        assert MetricsReport(0, 0, 0, 0).accuracy == 0.0

    def test_to_dict_round_trip(self):
        report = MetricsReport(tp=3, fp=1, fn=1, tn=5)
        d = report.to_dict()
        assert d["tp"] == 3 and d["accuracy"] == pytest.approx(0.8)


class TestTrain:
    def test_requires_enough_rows_for_k(self):
        vectors, labels = blobs(rng_for(1), 19)  # 38 rows total
        train(vectors, labels, k=38)
        with pytest.raises(InsufficientTraining):
            train(vectors[:37], labels[:37], k=38)

    def test_rejects_bad_labels(self):
        vectors, labels = blobs(rng_for(2), 10)
        labels = labels.copy()
        labels[0] = 5
        with pytest.raises(ValueError):
            train(vectors, labels, k=3)

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionMismatch):
            train(np.zeros((10, 3)), np.zeros(10), k=2)
        vectors, labels = blobs(rng_for(3), 10)
        with pytest.raises(DimensionMismatch):
            train(vectors, labels[:-1], k=2)

    def test_rejects_empty_mask(self):
        vectors, labels = blobs(rng_for(4), 10)
        with pytest.raises(ValueError):
            train(vectors, labels, feature_mask=(), k=2)

    def test_stores_masked_columns(self):
        vectors, labels = blobs(rng_for(5), 10)
        model = train(vectors, labels, feature_mask=("mar", "moe"), k=3)
        assert model.feature_mask == ("mar", "moe")
        assert model.train_vectors.shape == (20, 2)
        np.testing.assert_array_equal(model.train_vectors, vectors[:, [1, 3]])

    def test_default_k(self):
        vectors, labels = blobs(rng_for(6), 25)
        assert train(vectors, labels).k == DEFAULT_K == 38


class TestPredict:
    def test_separable_blobs(self):
        rng = rng_for(7)
        vectors, labels = blobs(rng, 40)
        model = train(vectors, labels, k=5)
        test_vectors, test_labels = blobs(rng, 25)
        pred, frac = predict_batch(model, test_vectors)
        np.testing.assert_array_equal(pred, test_labels)
        assert set(np.round(frac[test_labels == 1], 6)) == {1.0}

    def test_tie_goes_drowsy(self):
        vectors = np.array(
            [[-1.0, 0, 0, 0], [1.0, 0, 0, 0]], dtype=float
        )
        model = train(vectors, [0, 1], k=2)
        label, frac = predict(model, np.zeros(4))
        assert frac == 0.5
        assert label is AlertnessLabel.DROWSY

    def test_accepts_feature_vector_and_masked_arrays(self):
        vectors, labels = blobs(rng_for(8), 20)
        model = train(vectors, labels, feature_mask=("mar", "moe"), k=3)
        full = FeatureVector(0.1, 6.0, 0.2, 6.0, normalized=True)
        by_vector = predict(model, full)
        by_full_array = predict(model, full.as_array())
        by_masked = predict(model, np.array([6.0, 6.0]))
        assert by_vector == by_full_array == by_masked
        with pytest.raises(DimensionMismatch):
            predict(model, np.zeros(3))

    def test_fraction_counts_drowsy_neighbors(self):
        vectors = np.zeros((10, 4))
        vectors[:, 0] = np.arange(10)
        labels = np.array([0, 1, 0, 1, 0, 0, 0, 0, 0, 0])
        model = train(vectors, labels, k=4)
        label, frac = predict(model, np.array([0.0, 0, 0, 0]))
        # nearest four rows are 0..3, two of them drowsy
        assert frac == 0.5
        assert label is AlertnessLabel.DROWSY


class TestEvaluate:
    def test_counts_match_manual_confusion(self):
        rng = rng_for(9)
        vectors, labels = blobs(rng, 30, gap=1.5)  # overlapping on purpose
        model = train(vectors, labels, k=7)
        test_vectors, test_labels = blobs(rng, 20, gap=1.5)
        report = evaluate(model, test_vectors, test_labels)
        pred, _ = predict_batch(model, test_vectors)
        assert report.tp == int(np.sum((pred == 1) & (test_labels == 1)))
        assert report.tn == int(np.sum((pred == 0) & (test_labels == 0)))
        assert report.total == 40

    def test_empty_test_set(self):
        vectors, labels = blobs(rng_for(10), 10)
        model = train(vectors, labels, k=3)
        with pytest.raises(EmptyTestSet):
            evaluate(model, np.zeros((0, 4)), np.zeros(0))


class TestSweepK:
    def test_self_prediction_at_k1_is_perfect(self):
        vectors, labels = blobs(rng_for(11), 30, gap=2.0)
        rows, _ = sweep_k(vectors, labels, vectors, labels, k_max=3)
        assert rows[0].k == 1
        assert rows[0].report.accuracy == 1.0

    def test_rows_match_individual_evaluations(self):
        rng = rng_for(12)
        train_v, train_l = blobs(rng, 40, gap=1.2)
        test_v, test_l = blobs(rng, 15, gap=1.2)
        rows, best_k = sweep_k(train_v, train_l, test_v, test_l, k_max=9)
        assert [r.k for r in rows] == list(range(1, 10))
        for k in (1, 3, 5, 9):
            model = train(train_v, train_l, k=k)
            assert rows[k - 1].report == evaluate(model, test_v, test_l)
        accs = [r.report.accuracy for r in rows]
        assert accs[best_k - 1] == max(accs)
        assert best_k == min(r.k for r in rows if r.report.accuracy == max(accs))

    def test_needs_k_max_rows(self):
        vectors, labels = blobs(rng_for(13), 5)
        with pytest.raises(InsufficientTraining):
            sweep_k(vectors, labels, vectors, labels, k_max=11)


class TestModelFiles:
    def trained(self) -> tuple[KnnModel, np.ndarray]:
        rng = rng_for(14)
        vectors, labels = blobs(rng, 30)
        baseline = fit_baseline(
            [FeatureVector(*rng.uniform(0.1, 1.0, size=4)) for _ in range(20)],
            "s9",
        )
        model = train(vectors, labels, feature_mask=("ear", "moe"), k=9,
                      baseline=baseline)
        queries = rng.normal(loc=3.0, size=(25, 4))
        return model, queries

    def test_round_trip_predictions(self, tmp_path):
        model, queries = self.trained()
        path = tmp_path / "alertness.model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.feature_mask == model.feature_mask
        assert loaded.k == model.k
        assert loaded.baseline.subject_id == "s9"
        np.testing.assert_array_equal(loaded.train_vectors, model.train_vectors)
        for q in queries:
            assert predict(loaded, q) == predict(model, q)

    def test_rejects_unknown_version(self, tmp_path):
        model, _ = self.trained()
        path = tmp_path / "m.json"
        save_model(model, path)
        obj = json.loads(path.read_text())
        obj["version"] = "99"
        path.write_text(json.dumps(obj))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{broken")
        with pytest.raises(ModelFormatError):
            load_model(path)
        path.write_text('["not", "an", "object"]')
        with pytest.raises(ModelFormatError):
            load_model(path)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda o: o.pop("feature_mask"),
            lambda o: o.__setitem__("feature_mask", ["moe", "ear"]),
            lambda o: o.__setitem__("feature_mask", []),
            lambda o: o.__setitem__("k", 10_000),
            lambda o: o["train"].__setitem__("labels", [7] * len(o["train"]["labels"])),
            lambda o: o["train"].__setitem__("vectors", [[1.0]] * 3),
        ],
    )
    def test_rejects_schema_violations(self, tmp_path, mutate):
        model, _ = self.trained()
        path = tmp_path / "m.json"
        save_model(model, path)
        obj = json.loads(path.read_text())
        mutate(obj)
        path.write_text(json.dumps(obj))
        with pytest.raises(ModelFormatError):
            load_model(path)
