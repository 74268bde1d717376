from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostfilter.features.matrix import FeatureMatrix, FeatureMismatchError
from ghostfilter.model import (
    ModelFormatError,
    Network,
    Normalizer,
    TrainConfig,
    class_balanced_bce,
    decide,
    load_model,
    save_model,
    sigmoid,
    train,
)


def toy_matrix(values: np.ndarray, labels: np.ndarray,
               missing: np.ndarray | None = None,
               names: tuple[str, ...] | None = None) -> FeatureMatrix:
    n, m = values.shape
    names = names or tuple(f"f{j}" for j in range(m))
    return FeatureMatrix(
        feature_names=names,
        event_ids=[f"e{i}" for i in range(n)],
        timestamps=np.arange(n, dtype=np.int64),
        labels=labels.astype(bool),
        values=values.astype(float),
        missing=missing if missing is not None else np.zeros((n, m), dtype=bool),
    )


def separable_matrix(n=200, seed=0) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    labels = rng.random(n) < 0.5
    x0 = np.where(labels, 2.0, -2.0) + rng.normal(scale=0.3, size=n)
    x1 = rng.normal(size=n)
    return toy_matrix(np.column_stack([x0, x1]), labels)


def eq2_bce(probabilities, labels) -> float:
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels, dtype=float)
    return float(-(y * np.log(p) + (1 - y) * np.log1p(-p)).mean())


class TestNormalizer:
    def test_population_std_convention(self):
        matrix = toy_matrix(np.array([[1.0], [2.0], [3.0]]), np.array([1, 0, 1]))
        norm = Normalizer.fit(matrix)
        assert norm.mean[0] == 2.0
        assert norm.std[0] == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-15)

    def test_constant_column_fallback(self):
        matrix = toy_matrix(np.full((4, 1), 7.0), np.array([1, 0, 1, 0]))
        norm = Normalizer.fit(matrix)
        assert norm.std[0] == 1.0
        assert np.all(norm.apply(matrix) == 0.0)

    def test_training_columns_center_to_zero(self):
        rng = np.random.default_rng(1)
        matrix = toy_matrix(rng.normal(5, 3, size=(500, 4)), rng.random(500) < 0.5)
        normalized = Normalizer.fit(matrix).apply(matrix)
        assert np.all(np.abs(normalized.mean(axis=0)) < 1e-6)
        assert np.allclose(normalized.std(axis=0), 1.0)

    def test_missing_excluded_then_filled_as_zero(self):
        values = np.array([[1.0], [2.0], [3.0], [999.0]])
        missing = np.array([[False], [False], [False], [True]])
        matrix = toy_matrix(values, np.array([1, 0, 1, 0]), missing)
        norm = Normalizer.fit(matrix)
        assert norm.mean[0] == 2.0  # the masked 999 never entered the stats
        normalized = norm.apply(matrix)
        assert normalized[3, 0] == 0.0

    def test_empty_matrix_raises(self):
        matrix = toy_matrix(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            Normalizer.fit(matrix)


class TestClassBalancedLoss:
    def test_equal_weights_halve_plain_bce(self):
        rng = np.random.default_rng(2)
        scores = rng.normal(scale=2.0, size=400)
        labels = rng.random(400) < 0.4
        weighted = class_balanced_bce(scores, labels.astype(float), 0.5, 0.5)
        assert weighted == pytest.approx(0.5 * eq2_bce(sigmoid(scores), labels), abs=1e-12)

    def test_single_sample_hand_value(self):
        # score 0 gives probability one half; weighted loss is w_pos * ln 2
        loss = class_balanced_bce([0.0], [1.0], 0.7, 0.3)
        assert loss == pytest.approx(0.7 * math.log(2.0), abs=1e-12)

    def test_confident_correct_loss_vanishes(self):
        labels = np.array([1.0, 0.0])
        losses = [class_balanced_bce(np.array([s, -s]), labels, 0.5, 0.5)
                  for s in (1.0, 5.0, 10.0, 30.0)]
        assert all(a > b for a, b in zip(losses, losses[1:]))
        assert losses[-1] < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            class_balanced_bce([0.0, 1.0], [1.0], 0.5, 0.5)

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            class_balanced_bce([0.0], [1.0], 0.0, 1.0)

    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=30), st.data())
    @settings(max_examples=60, deadline=None)
    def test_non_negative(self, scores, data):
        labels = data.draw(st.lists(st.booleans(), min_size=len(scores), max_size=len(scores)))
        w = data.draw(st.floats(0.05, 0.95))
        loss = class_balanced_bce(scores, np.array(labels, dtype=float), w, 1 - w)
        assert loss >= 0.0


class TestGradients:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(7)
        for trial in range(3):
            net = Network.initialize([5, 8, 4, 1], rng)
            x = rng.normal(size=(12, 5))
            y = (rng.random(12) < 0.5).astype(float)
            w_pos, w_neg = 0.7, 0.3
            _, grads_w, grads_b = net.loss_and_gradients(x, y, w_pos, w_neg)
            eps = 1e-6
            for params, grads in ((net.weights, grads_w), (net.biases, grads_b)):
                for p, g in zip(params, grads):
                    flat = p.reshape(-1)
                    for idx in range(0, flat.size, 3):
                        original = flat[idx]
                        flat[idx] = original + eps
                        up = class_balanced_bce(net.scores(x), y, w_pos, w_neg)
                        flat[idx] = original - eps
                        down = class_balanced_bce(net.scores(x), y, w_pos, w_neg)
                        flat[idx] = original
                        numeric = (up - down) / (2 * eps)
                        analytic = g.reshape(-1)[idx]
                        denom = max(abs(numeric), abs(analytic), 1e-8)
                        assert abs(numeric - analytic) / denom < 1e-4


class TestTraining:
    def test_same_seed_identical_weights(self):
        matrix = separable_matrix()
        config = TrainConfig(epochs=5, seed=3)
        a = train(matrix, config)
        b = train(matrix, config)
        for wa, wb in zip(a.network.weights, b.network.weights):
            assert np.array_equal(wa, wb)
        for ba, bb in zip(a.network.biases, b.network.biases):
            assert np.array_equal(ba, bb)

    def test_linearly_separable_reaches_high_accuracy(self):
        matrix = separable_matrix(n=200)
        model = train(matrix, TrainConfig(epochs=200, seed=0))
        predictions = model.predict(matrix)
        accuracy = (predictions == matrix.labels).mean()
        assert accuracy >= 0.99

    def test_final_loss_not_above_initial(self):
        matrix = separable_matrix(n=300, seed=5)
        model = train(matrix, TrainConfig(epochs=10, seed=1))
        assert model.history.final_loss <= model.history.initial_loss

    def test_single_class_raises(self):
        matrix = separable_matrix()
        matrix.labels[:] = True
        with pytest.raises(ValueError, match="both classes"):
            train(matrix, TrainConfig(epochs=1))

    def test_divergence_names_epoch(self):
        # negative decay grows weights exponentially until they overflow
        matrix = separable_matrix(n=50)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(ValueError, match="epoch"):
                train(matrix, TrainConfig(epochs=10, weight_decay=-1e80))

    def test_class_weights_resolved_from_labels(self):
        labels = np.array([True] * 2 + [False] * 8)
        config = TrainConfig()
        w_pos, w_neg = config.resolved_weights(labels)
        assert w_pos == 0.8  # rejected share
        assert w_neg == 0.2

    def test_weighted_training_raises_minority_recall(self):
        rng = np.random.default_rng(11)
        n = 2000
        labels = rng.random(n) < 0.10
        x0 = np.where(labels, 1.0, -1.0) + rng.normal(scale=1.2, size=n)
        x1 = rng.normal(size=n)
        matrix = toy_matrix(np.column_stack([x0, x1]), labels)
        weighted = train(matrix, TrainConfig(epochs=30, seed=2))
        unweighted = train(matrix, TrainConfig(epochs=30, seed=2, class_weights=(0.5, 0.5)))
        truth = matrix.labels
        recall_w = (weighted.predict(matrix) & truth).sum() / truth.sum()
        recall_u = (unweighted.predict(matrix) & truth).sum() / truth.sum()
        assert recall_w > recall_u

    def test_affine_rescaling_of_inputs_is_absorbed(self):
        matrix = separable_matrix(n=150, seed=9)
        scaled_values = matrix.values.copy()
        scaled_values[:, 0] *= 1024.0  # exact in binary
        scaled = toy_matrix(scaled_values, matrix.labels.copy())
        config = TrainConfig(epochs=8, seed=4)
        p_base = train(matrix, config).predict_proba_matrix(matrix)
        p_scaled = train(scaled, config).predict_proba_matrix(scaled)
        assert np.array_equal(p_base, p_scaled)


class TestPrediction:
    def test_zero_network_predicts_half(self):
        matrix = separable_matrix(n=20)
        model = train(matrix, TrainConfig(epochs=1, seed=0))
        for w in model.network.weights:
            w[:] = 0.0
        for b in model.network.biases:
            b[:] = 0.0
        assert np.all(model.predict_proba_matrix(matrix) == 0.5)

    def test_prediction_is_pure(self):
        matrix = separable_matrix(n=30)
        model = train(matrix, TrainConfig(epochs=2, seed=0))
        assert np.array_equal(model.predict_proba_matrix(matrix),
                              model.predict_proba_matrix(matrix))

    def test_catalog_mismatch_lists_features(self):
        matrix = separable_matrix(n=30)
        model = train(matrix, TrainConfig(epochs=1, seed=0))
        other = toy_matrix(matrix.values.copy(), matrix.labels.copy(),
                           names=("f0", "other"))
        with pytest.raises(FeatureMismatchError) as exc:
            model.predict_proba_matrix(other)
        assert "f1" in exc.value.missing
        assert "other" in exc.value.extra


class TestDecide:
    def test_threshold_boundary_accepts(self):
        assert decide(0.5, 0.5) is True

    def test_just_below_rejects(self):
        assert decide(0.4999, 0.5) is False

    def test_zero_threshold_accepts_anything(self):
        assert decide(0.0, 0.0) is True
        assert decide(0.9, 0.0) is True

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            decide(1.2, 0.5)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_raising_threshold_never_flips_to_accept(self, p, t1, t2):
        low, high = sorted([t1, t2])
        if not decide(p, low):
            assert not decide(p, high)


class TestSerialization:
    def test_roundtrip_predictions_bit_identical(self):
        matrix = separable_matrix(n=100, seed=6)
        model = train(matrix, TrainConfig(epochs=5, seed=5))
        restored = load_model(save_model(model))
        rng = np.random.default_rng(0)
        probe = toy_matrix(rng.normal(size=(100, 2)), rng.random(100) < 0.5)
        assert np.array_equal(model.predict_proba_matrix(probe),
                              restored.predict_proba_matrix(probe))
        assert restored.threshold == model.threshold
        assert restored.feature_names == model.feature_names

    def test_truncated_payload(self):
        matrix = separable_matrix(n=20)
        payload = save_model(train(matrix, TrainConfig(epochs=1)))
        with pytest.raises(ModelFormatError, match="corrupted"):
            load_model(payload[: len(payload) // 2])

    def test_version_mismatch_is_explicit(self):
        import json
        matrix = separable_matrix(n=20)
        payload = json.loads(save_model(train(matrix, TrainConfig(epochs=1))))
        payload["format_version"] = 99
        with pytest.raises(ModelFormatError, match="version"):
            load_model(json.dumps(payload).encode())

    def test_parameter_count_matches_architecture(self):
        matrix = separable_matrix(n=40)
        model = train(matrix, TrainConfig(epochs=1, hidden_sizes=(64, 32)))
        m = 2
        expected = m * 64 + 64 + 64 * 32 + 32 + 32 * 1 + 1
        assert model.network.parameter_count == expected
        assert model.network.layer_sizes == [2, 64, 32, 1]
