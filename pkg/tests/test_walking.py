import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csisrc.walking import (DegenerateTrainingError, InsufficientDataError,
                            LogisticModel, WalkingFeatures, extract_features,
                            nll_and_grad, predict, train, train_on_features)


class TestExtractFeatures:
    def test_known_window(self):
        # [1, 2, 3, 4, 5]: std (ddof 1) = sqrt(2.5), range 4,
        # max - median = 2, third central moment 0
        f = extract_features([1.0, 2.0, 3.0, 4.0, 5.0])
        assert f.std_dev == pytest.approx(np.sqrt(2.5))
        assert f.peak == 4.0
        assert f.head_size == 2.0
        assert f.third_moment == pytest.approx(0.0, abs=1e-12)

    def test_skewed_window(self):
        # [0, 0, 3]: mean 1, devs (-1, -1, 2), third moment = 6/3 = 2
        f = extract_features([0.0, 0.0, 3.0])
        assert f.third_moment == pytest.approx(2.0)
        assert f.head_size == 3.0

    def test_constant_window(self):
        f = extract_features([7.0] * 10)
        assert f.std_dev == 0.0 and f.peak == 0.0
        assert f.head_size == 0.0 and f.third_moment == 0.0

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            extract_features([5.0])

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_shift_invariance_except_none(self, seed):
        # all four features ignore a constant SNR offset
        rng = np.random.default_rng(seed)
        w = rng.uniform(0, 30, 12)
        a = extract_features(w).as_array()
        b = extract_features(w + 13.5).as_array()
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_feature_order(self):
        f = WalkingFeatures(std_dev=1.0, peak=2.0, head_size=3.0,
                            third_moment=4.0)
        np.testing.assert_array_equal(f.as_array(), [1, 2, 3, 4])


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((30, 4))
        labels = (rng.uniform(size=30) < 0.5).astype(float)
        params = rng.standard_normal(5)
        lam = 1e-3
        _, grad = nll_and_grad(params, X, labels, lam)
        h = 1e-6
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            fp, _ = nll_and_grad(params + e, X, labels, lam)
            fm, _ = nll_and_grad(params - e, X, labels, lam)
            assert grad[i] == pytest.approx((fp - fm) / (2 * h), abs=1e-6)

    def test_loss_at_zero_is_log_two(self):
        X = np.zeros((10, 4))
        labels = np.array([0.0, 1.0] * 5)
        loss, _ = nll_and_grad(np.zeros(5), X, labels, 1e-3)
        assert loss == pytest.approx(np.log(2.0))


def synthetic_windows(rng, n_per_class=40):
    windows = []
    for _ in range(n_per_class):
        # walking: strong fluctuations around the mean
        windows.append((rng.normal(15.0, 4.0, 10), True))
        # static: nearly flat SNR
        windows.append((rng.normal(25.0, 0.3, 10), False))
    return windows


class TestTrainPredict:
    def test_separable_data_learned(self):
        rng = np.random.default_rng(1)
        model = train(synthetic_windows(rng))
        correct = 0
        test = synthetic_windows(np.random.default_rng(2), 25)
        for w, flag in test:
            _, decided = predict(model, extract_features(w))
            correct += decided == flag
        assert correct / len(test) >= 0.95

    def test_probability_range(self):
        rng = np.random.default_rng(3)
        model = train(synthetic_windows(rng, 10))
        for w, _ in synthetic_windows(rng, 5):
            p, _ = predict(model, extract_features(w))
            assert 0.0 <= p <= 1.0

    def test_single_class_rejected(self):
        rng = np.random.default_rng(4)
        windows = [(rng.normal(20, 3, 8), True) for _ in range(10)]
        with pytest.raises(DegenerateTrainingError):
            train(windows)

    def test_constant_feature_survives(self):
        # peak-to-peak fixed across windows: zero std must not divide out
        X = np.array([[0.1, 5.0, 1.0, 0.0],
                      [4.0, 5.0, 3.0, 2.0],
                      [0.2, 5.0, 1.1, 0.1],
                      [3.8, 5.0, 2.9, 1.8]])
        labels = np.array([0.0, 1.0, 0.0, 1.0])
        model = train_on_features(X, labels)
        assert np.all(np.isfinite(model.weights))

    def test_deterministic(self):
        windows = synthetic_windows(np.random.default_rng(5), 15)
        m1 = train(windows)
        m2 = train(windows)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.bias == m2.bias


class TestSerialization:
    def test_json_round_trip(self):
        rng = np.random.default_rng(6)
        model = train(synthetic_windows(rng, 10))
        back = LogisticModel.from_json(model.to_json())
        np.testing.assert_array_equal(back.weights, model.weights)
        assert back.bias == model.bias
        np.testing.assert_array_equal(back.feature_means,
                                      model.feature_means)
        np.testing.assert_array_equal(back.feature_stds, model.feature_stds)
        assert back.threshold == model.threshold

    def test_round_trip_preserves_predictions(self):
        rng = np.random.default_rng(7)
        model = train(synthetic_windows(rng, 10))
        back = LogisticModel.from_json(model.to_json())
        for w, _ in synthetic_windows(rng, 5):
            f = extract_features(w)
            assert predict(back, f) == predict(model, f)

    def test_missing_threshold_defaults(self):
        m = LogisticModel.from_json(
            '{"weights": [1, 0, 0, 0], "bias": 0.0,'
            ' "feature_means": [0, 0, 0, 0],'
            ' "feature_stds": [1, 1, 1, 1]}')
        assert m.threshold == 0.5
