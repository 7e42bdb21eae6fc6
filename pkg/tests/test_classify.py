import warnings

import numpy as np
import pytest

from eventaug.classify import (DegenerateDataError, TrainConfig,
                               cross_entropy_grad, load_model, predict,
                               ratio_study, save_model, softmax,
                               subsample_indices, train, write_ratio_csv)
from eventaug.classify import ClassifierModel
from eventaug.perturb import PerturbationConfig


def separable_blobs(seed=0, n_per_class=40, gap=6.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per_class, 2)) + [-gap / 2, 0.0]
    b = rng.normal(size=(n_per_class, 2)) + [gap / 2, 0.0]
    x = np.vstack([a, b])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    return x, y


def finite_difference_grad(weights, bias, x, y, eps=1e-6):
    dw = np.zeros_like(weights)
    for i in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            wp, wm = weights.copy(), weights.copy()
            wp[i, j] += eps
            wm[i, j] -= eps
            lp, _, _ = cross_entropy_grad(wp, bias, x, y)
            lm, _, _ = cross_entropy_grad(wm, bias, x, y)
            dw[i, j] = (lp - lm) / (2 * eps)
    db = np.zeros_like(bias)
    for i in range(bias.shape[0]):
        bp, bm = bias.copy(), bias.copy()
        bp[i] += eps
        bm[i] -= eps
        lp, _, _ = cross_entropy_grad(weights, bp, x, y)
        lm, _, _ = cross_entropy_grad(weights, bm, x, y)
        db[i] = (lp - lm) / (2 * eps)
    return dw, db


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            classes = int(rng.integers(2, 6))
            dim = int(rng.integers(2, 9))
            n = int(rng.integers(3, 12))
            weights = rng.normal(size=(classes, dim))
            bias = rng.normal(size=classes)
            x = rng.normal(size=(n, dim))
            y = rng.integers(0, classes, size=n)
            _, dw, db = cross_entropy_grad(weights, bias, x, y)
            fdw, fdb = finite_difference_grad(weights, bias, x, y)
            scale = max(np.abs(fdw).max(), np.abs(fdb).max(), 1e-8)
            assert np.abs(dw - fdw).max() / scale < 1e-4
            assert np.abs(db - fdb).max() / scale < 1e-4


class TestSoftmax:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(32)
        probs = softmax(rng.normal(size=(100, 7)) * 30)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9

    def test_shift_invariant_predictions(self):
        rng = np.random.default_rng(33)
        logits = rng.normal(size=(50, 4))
        shifted = logits + 123.456
        assert np.array_equal(logits.argmax(axis=1), shifted.argmax(axis=1))
        assert np.abs(softmax(logits) - softmax(shifted)).max() < 1e-9


class TestTrain:
    def test_separable_blobs_reach_full_accuracy(self):
        x, y = separable_blobs()
        model = train(x, y, TrainConfig(epochs=200, learning_rate=0.5, seed=1))
        preds, _ = predict(model, x)
        assert (np.array(preds) == y).mean() == 1.0

    def test_alpha_zero_mixer_is_inert(self):
        x, y = separable_blobs()
        plain = train(x, y, TrainConfig(epochs=50, seed=2))
        noop = train(x, y, TrainConfig(
            epochs=50, seed=2,
            perturbation=PerturbationConfig(method="GP", alpha=0.0, sigma=0.5)))
        assert plain.weights.tobytes() == noop.weights.tobytes()
        assert plain.bias.tobytes() == noop.bias.tobytes()

    def test_loss_non_increasing_on_fixture(self):
        x, y = separable_blobs()
        model = train(x, y, TrainConfig(epochs=120, learning_rate=0.01,
                                        batch_size=80, seed=3))
        diffs = np.diff(model.loss_history)
        assert diffs.max() <= 1e-6

    def test_same_seed_bitwise_identical(self):
        x, y = separable_blobs(seed=5)
        config = TrainConfig(epochs=30, seed=9,
                             perturbation=PerturbationConfig(
                                 method="GP", alpha=0.5, sigma=0.1))
        a = train(x, y, config)
        b = train(x, y, config)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.bias.tobytes() == b.bias.tobytes()

    def test_single_class_rejected(self):
        x = np.random.default_rng(0).normal(size=(10, 3))
        with pytest.raises(DegenerateDataError):
            train(x, np.zeros(10, dtype=int), TrainConfig(epochs=1))

    def test_idgp_training_runs(self):
        x, y = separable_blobs(seed=6)
        config = TrainConfig(epochs=10, seed=1, perturbation=PerturbationConfig(
            method="IDGP", alpha=0.5, alpha_var=0.01))
        model = train(x, y, config)  # stats computed internally
        assert np.isfinite(model.weights).all()


class TestPredict:
    def test_zero_model_predicts_class_zero(self):
        model = ClassifierModel(weights=np.zeros((3, 4)), bias=np.zeros(3))
        preds, scores = predict(model, np.random.default_rng(1).normal(size=(6, 4)))
        assert preds == [0] * 6
        assert np.abs(scores - 1 / 3).max() < 1e-12

    def test_follows_isolated_feature(self):
        # class 1 iff feature 0 positive
        model = ClassifierModel(weights=np.array([[-1.0, 0.0], [1.0, 0.0]]),
                                bias=np.zeros(2))
        x = np.array([[2.0, 5.0], [-3.0, 5.0], [0.5, -9.0]])
        preds, _ = predict(model, x)
        assert preds == [1, 0, 1]

    def test_matches_matrix_multiply_oracle(self):
        rng = np.random.default_rng(34)
        model = ClassifierModel(weights=rng.normal(size=(5, 7)),
                                bias=rng.normal(size=5))
        x = rng.normal(size=(20, 7))
        preds, scores = predict(model, x)
        logits = np.array([[x[i] @ model.weights[c] + model.bias[c]
                            for c in range(5)] for i in range(20)])
        assert preds == logits.argmax(axis=1).tolist()
        assert np.abs(scores - softmax(logits)).max() < 1e-12

    def test_dim_mismatch(self):
        model = ClassifierModel(weights=np.zeros((2, 3)), bias=np.zeros(2))
        with pytest.raises(ValueError):
            predict(model, np.zeros((4, 5)))


class TestModelFile:
    def test_round_trip(self, tmp_path):
        x, y = separable_blobs(seed=7)
        model = train(x, y, TrainConfig(epochs=20, seed=4))
        path = tmp_path / "m.sedmdl"
        save_model(model, path)
        back = load_model(path)
        assert back.num_classes == model.num_classes
        assert back.dim == model.dim
        assert np.abs(back.weights - model.weights).max() < 1e-6
        assert back.metadata["seed"] == 4
        assert path.read_bytes()[:8] == b"SEDMDL01"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.sedmdl"
        path.write_bytes(b"WRONGMAG" + b"\x00" * 64)
        with pytest.raises(ValueError, match="SEDMDL01"):
            load_model(path)


class TestRatioStudy:
    def test_full_ratio_noaug_matches_plain_run(self):
        x, y = separable_blobs(seed=8)
        x_test, y_test = separable_blobs(seed=9)
        config = TrainConfig(epochs=40, seed=11)
        rows = ratio_study(x, y, x_test, y_test, [1.0], config)
        plain = train(x, y, TrainConfig(epochs=40, seed=11), num_classes=2)
        preds, _ = predict(plain, x_test)
        from eventaug.metrics import evaluate
        report = evaluate(preds, y_test, 2)
        by_arm = {r.arm: r for r in rows}
        assert by_arm["noaug"].micro_f1 == report.micro_f1
        assert by_arm["noaug"].macro_f1 == report.macro_f1

    def test_seven_ratios_two_arms(self):
        x, y = separable_blobs(seed=10, n_per_class=30)
        config = TrainConfig(epochs=5, seed=1)
        ratios = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
        rows = ratio_study(x, y, x, y, ratios, config)
        assert len(rows) == 14
        assert {r.arm for r in rows} == {"aug", "noaug"}

    def test_subsample_is_sorted_and_deterministic(self):
        a = subsample_indices(100, 0.3, seed=5, key=0)
        b = subsample_indices(100, 0.3, seed=5, key=0)
        assert np.array_equal(a, b)
        assert np.array_equal(a, np.sort(a))
        assert len(a) == 30
        assert np.array_equal(subsample_indices(50, 1.0, 3, 0), np.arange(50))

    def test_vanished_class_warns(self):
        rng = np.random.default_rng(35)
        x = rng.normal(size=(40, 3))
        y = np.array([0] * 19 + [1] * 19 + [2] * 2)
        # find a seed whose 30% subsample keeps classes 0/1 but loses 2
        seed = next(s for s in range(50)
                    if set(y[subsample_indices(40, 0.3, s, 0)]) == {0, 1})
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rows = ratio_study(x, y, x, y, [0.3], TrainConfig(epochs=2, seed=seed))
        assert any("vanished" in str(w.message) for w in caught)
        assert len(rows) == 2

    def test_csv_format(self, tmp_path):
        x, y = separable_blobs(seed=12, n_per_class=10)
        rows = ratio_study(x, y, x, y, [0.5], TrainConfig(epochs=2, seed=0))
        path = tmp_path / "study.csv"
        write_ratio_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "ratio,arm,micro_f1,macro_f1"
        assert lines[1].startswith("0.5,aug,")
        assert lines[2].startswith("0.5,noaug,")
