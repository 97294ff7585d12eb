import json

import numpy as np
import pytest
import torch

from cfgevade.model.encoder import ModelConfig
from cfgevade.model.trainer import TrainConfig, Trainer, evaluate, loss_and_grad, split_corpus, train


@pytest.fixture
def memo_config(small_vocab):
    return ModelConfig(vocab_size=len(small_vocab), max_positions=64, d_model=32, n_layers=2, n_heads=4, d_ff=64)


def test_memorizes_ten_samples(small_samples, memo_config):
    """
    Component Test: 10 samples, one batch per epoch, 200 Adam steps.
    """
    corpus = small_samples[:5] + small_samples[-5:]
    config = TrainConfig(batch_size=64, epochs=200, learning_rate=1e-2, seed=1)
    result = train(corpus, config, memo_config)
    train_part, _ = split_corpus(corpus, config.train_fraction, config.seed)
    loss, _ = loss_and_grad(result.model, train_part)
    assert loss < 0.05
    assert len(result.history) == 200


def test_training_is_deterministic(small_samples, tiny_config):
    config = TrainConfig(batch_size=8, epochs=2, seed=4)
    a = train(small_samples, config, tiny_config)
    b = train(small_samples, config, tiny_config)
    assert [r.to_dict() for r in a.history] == [r.to_dict() for r in b.history]
    for (name, x), (_, y) in zip(a.model.state_dict().items(), b.model.state_dict().items()):
        assert torch.equal(x, y), name


def test_different_seeds_differ(small_samples, tiny_config):
    a = train(small_samples, TrainConfig(batch_size=8, epochs=1, seed=1), tiny_config)
    b = train(small_samples, TrainConfig(batch_size=8, epochs=1, seed=2), tiny_config)
    assert not torch.equal(a.model.token_embedding.weight, b.model.token_embedding.weight)


def test_training_log_records_each_epoch(small_samples, tiny_config, tmp_path):
    log_path = tmp_path / "train.jsonl"
    result = Trainer(tiny_config, TrainConfig(batch_size=16, epochs=3, seed=2), log_path=log_path).fit(small_samples)
    records = [json.loads(line) for line in log_path.read_text(encoding="utf-8").splitlines()]
    assert [r["epoch"] for r in records] == [1, 2, 3]
    for record in records:
        assert {"train_loss", "eval_accuracy", "eval_fpr", "tp", "tn", "fp", "fn"} <= set(record)
        assert record["tp"] + record["tn"] + record["fp"] + record["fn"] == 8
    assert records[-1] == result.history[-1].to_dict()


def test_trained_model_beats_chance(small_samples, memo_config):
    result = train(small_samples, TrainConfig(batch_size=8, epochs=30, learning_rate=5e-3, seed=0), memo_config)
    metrics = evaluate(result.model, small_samples)
    assert metrics.accuracy >= 0.75
    probs = result.model.predict_proba(small_samples)
    assert np.all((probs >= 0) & (probs <= 1))
