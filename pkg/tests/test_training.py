import numpy as np
import pytest

from codevec.corpus import (PAD_ID, EncodedExample, RawExample,
                            build_vocabs)
from codevec.errors import TrainingError
from codevec.metrics import evaluate
from codevec.minij import parse_mini
from codevec.model import (AttentionVariant, ModelDims, forward, init_params)
from codevec.paths import ExtractionLimits
from codevec.pipeline import method_to_example
from codevec.training import (AdamState, Gradients, TrainConfig, adam_step,
                              backward, loss, train)

from conftest import random_encoded, toy_minij_corpus

DIMS = ModelDims(d=3, num_values=6, num_paths=5, num_tags=4, k_max=4)
GRAD_VARIANTS = [AttentionVariant.SOFT, AttentionVariant.NO_ATTENTION,
                 AttentionVariant.ELEMENT_WISE, AttentionVariant.SOFT_NO_FC]


def finite_difference(params, example, label_id, name, h=1e-5, mask=None):
    arr = params.groups()[name]
    fd = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])

    def run():
        if mask is None:
            trace = forward(params, example)
        else:
            trace = forward(params, example, mode="train", dropout_rate=0.25,
                            dropout_mask=mask)
        return loss(trace, label_id)

    for _ in it:
        idx = it.multi_index
        original = arr[idx]
        arr[idx] = original + h
        up = run()
        arr[idx] = original - h
        down = run()
        arr[idx] = original
        fd[idx] = (up - down) / (2 * h)
    return fd


def max_relative_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


class TestLoss:
    def test_certain_prediction_zero_loss(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 0)
        example = random_encoded(np.random.default_rng(0), DIMS)
        trace = forward(params, example)
        trace.q[:] = 0.0
        trace.q[example.label_id] = 1.0
        assert loss(trace, example.label_id) == 0.0

    def test_uniform_distribution(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 0)
        example = random_encoded(np.random.default_rng(0), DIMS)
        trace = forward(params, example)
        trace.q[:] = 0.25
        assert loss(trace, example.label_id) == pytest.approx(np.log(4))

    def test_matches_forward_q(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 1)
        example = random_encoded(np.random.default_rng(1), DIMS)
        trace = forward(params, example)
        assert loss(trace, example.label_id) == pytest.approx(
            -np.log(trace.q[example.label_id]), abs=1e-15)


class TestGradients:
    @pytest.mark.parametrize("variant", GRAD_VARIANTS)
    def test_finite_differences(self, variant):
        rng = np.random.default_rng(12)
        for trial in range(10):
            params = init_params(DIMS, variant, 100 + trial)
            example = random_encoded(rng, DIMS)
            trace = forward(params, example)
            grads = backward(params, example, trace, example.label_id)
            for name in params.groups():
                fd = finite_difference(params, example, example.label_id, name)
                assert max_relative_error(grads.by_name[name], fd) < 1e-4, \
                    f"{variant.value}/{name} trial {trial}"

    def test_hard_attention_straight_through(self):
        # At non-tie points, the FD gradient of the selected branch matches;
        # no gradient flows into the attention vector by construction.
        rng = np.random.default_rng(13)
        params = init_params(DIMS, AttentionVariant.HARD, 3)
        example = random_encoded(rng, DIMS, n_valid=3)
        trace = forward(params, example)
        grads = backward(params, example, trace, example.label_id)
        assert (grads.by_name["attention"] == 0).all()
        fd = finite_difference(params, example, example.label_id, "tags_vocab")
        assert max_relative_error(grads.by_name["tags_vocab"], fd) < 1e-4

    def test_with_recorded_dropout_mask(self):
        rng = np.random.default_rng(14)
        params = init_params(DIMS, AttentionVariant.SOFT, 5)
        example = random_encoded(rng, DIMS)
        mask = (rng.random((DIMS.k_max, 3 * DIMS.d)) < 0.75).astype(float)
        trace = forward(params, example, mode="train", dropout_rate=0.25,
                        dropout_mask=mask)
        grads = backward(params, example, trace, example.label_id)
        for name in params.groups():
            fd = finite_difference(params, example, example.label_id, name,
                                   mask=mask)
            assert max_relative_error(grads.by_name[name], fd) < 1e-4

    def test_shared_source_target_row_accumulates(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 6)
        example = EncodedExample(2, np.array([3, 0]), np.array([2, 0]),
                                 np.array([3, 0]), np.array([1.0, 0.0]))
        trace = forward(params, example)
        grads = backward(params, example, trace, example.label_id)
        fd = finite_difference(params, example, example.label_id, "value_vocab")
        assert max_relative_error(grads.by_name["value_vocab"], fd) < 1e-4
        assert np.abs(grads.by_name["value_vocab"][3]).max() > 0

    def test_untouched_rows_exactly_zero(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 7)
        example = EncodedExample(2, np.array([3]), np.array([2]),
                                 np.array([4]), np.array([1.0]))
        grads = backward(params, example, forward(params, example), 2)
        touched = {3, 4}
        for row in range(DIMS.num_values):
            if row not in touched:
                assert (grads.by_name["value_vocab"][row] == 0).all()
        assert (grads.by_name["path_vocab"][PAD_ID] == 0).all()
        assert (grads.by_name["value_vocab"][PAD_ID] == 0).all()
        assert (grads.by_name["tags_vocab"][PAD_ID] == 0).all()

    def test_batch_gradient_is_sum_of_examples(self):
        rng = np.random.default_rng(15)
        params = init_params(DIMS, AttentionVariant.SOFT, 8)
        examples = [random_encoded(rng, DIMS) for _ in range(4)]
        total = Gradients.zeros_like(params)
        singles = []
        for ex in examples:
            g = backward(params, ex, forward(params, ex), ex.label_id)
            singles.append(g)
            total.add_(g)
        for name in params.groups():
            summed = sum(g.by_name[name] for g in singles)
            assert np.allclose(total.by_name[name], summed, atol=0)

    def test_all_finite(self):
        rng = np.random.default_rng(16)
        for variant in GRAD_VARIANTS:
            params = init_params(DIMS, variant, 9)
            example = random_encoded(rng, DIMS)
            grads = backward(params, example, forward(params, example),
                             example.label_id)
            for arr in grads.by_name.values():
                assert np.isfinite(arr).all()


class TestAdam:
    def test_zero_gradient_no_change(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 1)
        before = {n: a.copy() for n, a in params.groups().items()}
        adam_step(params, Gradients.zeros_like(params),
                  AdamState.zeros_like(params), TrainConfig())
        for name, arr in params.groups().items():
            assert (arr == before[name]).all()

    def test_first_step_is_signed_unit_step(self):
        params = init_params(DIMS, AttentionVariant.SOFT, 2)
        before = {n: a.copy() for n, a in params.groups().items()}
        grads = Gradients.zeros_like(params)
        rng = np.random.default_rng(0)
        for arr in grads.by_name.values():
            arr[:] = rng.normal(size=arr.shape)
        config = TrainConfig(learning_rate=0.01)
        adam_step(params, grads, AdamState.zeros_like(params), config)
        for name, arr in params.groups().items():
            g = grads.by_name[name]
            expected = before[name] - config.learning_rate * g / (
                np.abs(g) + config.epsilon)
            assert np.allclose(arr, expected, atol=1e-12)

    def test_deterministic(self):
        results = []
        for _ in range(2):
            params = init_params(DIMS, AttentionVariant.SOFT, 3)
            state = AdamState.zeros_like(params)
            grads = Gradients.zeros_like(params)
            for arr in grads.by_name.values():
                arr[:] = 0.5
            adam_step(params, grads, state, TrainConfig())
            adam_step(params, grads, state, TrainConfig())
            results.append(params.W.copy())
        assert (results[0] == results[1]).all()


class TestDescentAndTraining:
    def test_loss_decreases_over_full_batch_steps(self):
        rng = np.random.default_rng(17)
        params = init_params(DIMS, AttentionVariant.SOFT, 4)
        examples = [random_encoded(rng, DIMS) for _ in range(6)]
        state = AdamState.zeros_like(params)
        config = TrainConfig(learning_rate=1e-2)
        losses = []
        for _ in range(10):
            grads = Gradients.zeros_like(params)
            total = 0.0
            for ex in examples:
                trace = forward(params, ex)
                total += loss(trace, ex.label_id)
                grads.add_(backward(params, ex, trace, ex.label_id))
            losses.append(total)
            adam_step(params, grads, state, config)
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def toy_dataset(self):
        limits = ExtractionLimits(8, 2)
        return [method_to_example(parse_mini(src), limits)
                for src in toy_minij_corpus()]

    def test_overfit_toy_corpus(self):
        examples = self.toy_dataset()
        vocabs = build_vocabs(examples)
        config = TrainConfig(dim=32, k_max=50, max_epochs=200, patience=200,
                             dropout_rate=0.0, batch_size=8, seed=5)
        params, history = train(examples, examples, vocabs, config)
        metrics = evaluate(params, examples, vocabs)
        assert metrics.exact_match >= 0.95
        assert len(history) <= 200

    def test_pad_rows_stay_zero_through_training(self):
        examples = self.toy_dataset()[:10]
        vocabs = build_vocabs(examples)
        config = TrainConfig(dim=8, k_max=20, max_epochs=5, patience=5, seed=1)
        params, _ = train(examples, examples, vocabs, config)
        assert (params.value_vocab[PAD_ID] == 0).all()
        assert (params.path_vocab[PAD_ID] == 0).all()
        assert (params.tags_vocab[PAD_ID] == 0).all()

    def test_training_deterministic(self):
        examples = self.toy_dataset()[:10]
        vocabs = build_vocabs(examples)
        config = TrainConfig(dim=8, k_max=20, max_epochs=3, patience=3, seed=2)
        a, hist_a = train(examples, examples, vocabs, config)
        b, hist_b = train(examples, examples, vocabs, config)
        for name, arr in a.groups().items():
            assert (arr == b.groups()[name]).all()
        assert [h.loss for h in hist_a] == [h.loss for h in hist_b]

    def test_f1_history_non_decreasing_until_stop_on_overfit(self):
        examples = self.toy_dataset()
        vocabs = build_vocabs(examples)
        config = TrainConfig(dim=16, k_max=50, max_epochs=30, patience=1,
                             dropout_rate=0.0, batch_size=8, seed=5)
        _, history = train(examples, examples, vocabs, config)
        f1s = [h.val_f1 for h in history]
        # patience=1 stops at the first non-improving epoch
        assert all(b > a for a, b in zip(f1s[:-2], f1s[1:-1]))

    def test_empty_train_set(self):
        with pytest.raises(TrainingError):
            train([], [], None, TrainConfig())

    def test_zero_context_examples_reported_not_dropped(self):
        examples = self.toy_dataset()[:5] + [RawExample("nothing", [])]
        vocabs = build_vocabs(examples)
        lines = []
        config = TrainConfig(dim=4, k_max=10, max_epochs=1, patience=1, seed=0)
        train(examples, examples, vocabs, config, log=lines.append)
        assert any("no contexts" in line for line in lines)

    def test_log_line_format(self):
        examples = self.toy_dataset()[:5]
        vocabs = build_vocabs(examples)
        lines = []
        config = TrainConfig(dim=4, k_max=10, max_epochs=2, patience=2, seed=0)
        train(examples, examples, vocabs, config, log=lines.append)
        assert lines[0].startswith("epoch=1 loss=")
        assert " val_p=" in lines[0] and " val_f1=" in lines[0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0)
        with pytest.raises(ValueError):
            TrainConfig(dropout_rate=1.0)
        with pytest.raises(ValueError):
            TrainConfig(patience=0)
