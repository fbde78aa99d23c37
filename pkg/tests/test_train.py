import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from liqformer.checkpoint import load_checkpoint, save_checkpoint
from liqformer.errors import ConfigError, InputError
from liqformer.model import init_params
from liqformer.nn import Tape, Tensor, backward
from liqformer.train import (
    AdamState,
    TrainConfig,
    adam_step,
    bce_loss,
    bce_value,
    compute_metrics,
    cross_validate,
    epoch_log_csv,
    evaluate,
    train,
)
from tests_support import tiny_model_config, tiny_prepared

QUICK = TrainConfig(epochs=8, batch_size=8, lr=3e-3, weight_decay=1e-3, seed=0)


class TestBceLoss:
    def test_perfect_prediction_near_zero(self):
        loss = bce_loss(np.array([1.0]), Tensor(np.array([1.0 - 1e-12])))
        assert loss.item() == pytest.approx(0.0, abs=1e-9)

    def test_half_is_ln2(self):
        loss = bce_loss(np.array([1.0]), Tensor(np.array([0.5])))
        assert loss.item() == pytest.approx(math.log(2.0), abs=1e-12)

    def test_gradient_at_half(self):
        p = Tensor(np.array([0.5]))
        with Tape() as tape:
            loss = bce_loss(np.array([1.0]), p)
        backward(tape, loss)
        assert p.grad[0] == pytest.approx(-2.0, abs=1e-9)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            y = rng.integers(0, 2, size=7).astype(float)
            p = rng.uniform(1e-6, 1 - 1e-6, size=7)
            assert bce_value(y, p) >= 0.0

    def test_empty_batch(self):
        with pytest.raises(InputError):
            bce_loss(np.array([]), Tensor(np.array([])))


class TestAdam:
    def _params(self, cfg=None):
        cfg = cfg or tiny_model_config()
        return cfg, init_params(cfg)

    def test_zero_gradient_zero_decay_is_identity(self):
        cfg, params = self._params()
        before = {n: p.data.copy() for n, p in params.named()}
        state = AdamState(params)
        hyper = SimpleNamespace(lr=1e-3, weight_decay=0.0, beta1=0.9, beta2=0.999, adam_eps=1e-8)
        params.zero_grads()
        adam_step(params, state, hyper)
        for n, p in params.named():
            np.testing.assert_array_equal(p.data, before[n])

    def test_lr_zero_is_identity(self):
        cfg, params = self._params()
        before = {n: p.data.copy() for n, p in params.named()}
        state = AdamState(params)
        hyper = SimpleNamespace(lr=0.0, weight_decay=0.5, beta1=0.9, beta2=0.999, adam_eps=1e-8)
        for _, p in params.named():
            p.value.grad = np.ones_like(p.data)
        adam_step(params, state, hyper)
        for n, p in params.named():
            np.testing.assert_array_equal(p.data, before[n])

    def test_decoupled_decay_geometric(self):
        cfg, params = self._params()
        name, p = params.named()[0]
        start = p.data.copy()
        state = AdamState(params)
        hyper = SimpleNamespace(lr=0.1, weight_decay=0.5, beta1=0.9, beta2=0.999, adam_eps=1e-8)
        params.zero_grads()
        for _ in range(3):
            adam_step(params, state, hyper)
        np.testing.assert_allclose(p.data, start * (1 - 0.1 * 0.5) ** 3, rtol=1e-12)

    def test_constant_gradient_step_approaches_lr(self):
        cfg, params = self._params()
        state = AdamState(params)
        hyper = SimpleNamespace(lr=1e-2, weight_decay=0.0, beta1=0.9, beta2=0.999, adam_eps=1e-8)
        name, p = params.named()[0]
        g = np.full_like(p.data, 0.37)
        prev = p.data.copy()
        for _ in range(400):
            for _, q in params.named():
                q.value.grad = np.full_like(q.data, 0.37)
            adam_step(params, state, hyper)
        step = np.abs(prev - p.data) / 400
        # with m_hat/sqrt(v_hat) -> 1, each step magnitude tends to lr
        np.testing.assert_allclose(np.abs(p.data - prev) / 400, hyper.lr, rtol=0.05)

    def test_train_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(lr=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(epochs=0)
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)


class TestMetrics:
    def test_all_correct(self):
        m = compute_metrics(np.array([1, 0, 1]), np.array([0.9, 0.2, 0.8]))
        assert m.accuracy == 1.0 and m.recall == 1.0

    def test_fifteen_of_sixteen(self):
        y = np.array([1] * 8 + [0] * 8)
        p = np.concatenate([np.full(7, 0.9), [0.1], np.full(8, 0.1)])  # one FN
        m = compute_metrics(y, p)
        assert m.accuracy == pytest.approx(0.9375)
        assert m.n == 16

    def test_recall_absent_without_positives(self):
        m = compute_metrics(np.array([0, 0]), np.array([0.4, 0.6]))
        assert m.recall is None

    def test_tie_goes_to_not_liquefied(self):
        m = compute_metrics(np.array([1]), np.array([0.5]))
        assert m.fn == 1 and m.tp == 0

    def test_counts_sum(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 2, size=33)
        p = rng.uniform(size=33)
        m = compute_metrics(y, p)
        assert m.tp + m.fp + m.tn + m.fn == 33


class TestTrainLoop:
    def test_loss_decreases_on_separable_set(self):
        # 20-sample synthetic separable corpus, first 10 epochs
        prep = tiny_prepared(n_sites=10, seed=1)
        cfg = tiny_model_config()
        wins = 0
        for seed in range(20):
            result = train(prep.train, prep.val, cfg, TrainConfig(epochs=10, batch_size=20, lr=1e-3, seed=seed))
            losses = [row.train_loss for row in result.log]
            if losses[-1] < losses[0]:
                wins += 1
        assert wins >= 19  # >= 95% of 20 seeds

    def test_bit_identical_logs_under_seed(self):
        prep = tiny_prepared(n_sites=16, seed=2)
        cfg = tiny_model_config()
        tc = replace(QUICK, epochs=4)
        a = train(prep.train, prep.val, cfg, tc)
        b = train(prep.train, prep.val, cfg, tc)
        assert a.log == b.log
        assert epoch_log_csv(a.log) == epoch_log_csv(b.log)

    def test_best_accuracy_monotone_in_log(self):
        prep = tiny_prepared(n_sites=20, seed=3)
        result = train(prep.train, prep.val, tiny_model_config(), QUICK)
        best = -1.0
        for row in result.log:
            if row.checkpointed:
                assert row.val_accuracy > best
                best = row.val_accuracy
            else:
                assert row.val_accuracy <= best

    def test_checkpoint_reload_reproduces_metrics(self):
        prep = tiny_prepared(n_sites=20, seed=4)
        cfg = tiny_model_config()
        result = train(prep.train, prep.val, cfg, QUICK)
        blob = save_checkpoint(cfg, result.best_params)
        cfg2, params2 = load_checkpoint(blob)
        m = evaluate(params2, cfg2, prep.val)
        assert m.accuracy == result.best_metrics.accuracy
        assert m.loss == pytest.approx(result.best_metrics.loss, abs=1e-12)
        assert m.recall == result.best_metrics.recall

    def test_epoch_log_csv_shape(self):
        prep = tiny_prepared(n_sites=16, seed=5)
        result = train(prep.train, prep.val, tiny_model_config(), replace(QUICK, epochs=3))
        text = epoch_log_csv(result.log)
        lines = text.strip().split("\n")
        assert lines[0] == "epoch,train_loss,val_loss,val_accuracy,val_recall,checkpointed"
        assert len(lines) == 4
        assert lines[1].split(",")[0] == "1"


class TestEvaluate:
    def test_empty_partition_rejected(self):
        prep = tiny_prepared(n_sites=16, seed=6)
        cfg = tiny_model_config()
        params = init_params(cfg)
        empty = prep.dataset.subset([]).with_standardizer(prep.dataset.standardizer)
        with pytest.raises(InputError):
            evaluate(params, cfg, empty)


class TestCrossValidate:
    def test_fold_report_structure(self):
        prep = tiny_prepared(n_sites=15, seed=7)
        cfg = tiny_model_config()
        tc = replace(QUICK, epochs=2)
        report = cross_validate(prep.dataset, cfg, tc, k=3)
        assert len(report.folds) == 3
        accs = [m.accuracy for m in report.folds]
        assert report.mean_accuracy == pytest.approx(float(np.mean(accs)), abs=1e-12)
        assert report.std_accuracy == pytest.approx(float(np.std(accs)), abs=1e-12)

    def test_deterministic(self):
        prep = tiny_prepared(n_sites=12, seed=8)
        cfg = tiny_model_config()
        tc = replace(QUICK, epochs=2)
        a = cross_validate(prep.dataset, cfg, tc, k=3)
        b = cross_validate(prep.dataset, cfg, tc, k=3)
        assert a == b
