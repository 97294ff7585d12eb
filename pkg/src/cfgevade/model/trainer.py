"""
Training and evaluation for the sequence classifier.
Adam on mean cross-entropy, seeded shuffles, held-out evaluation every epoch.
"""
import json
import logging
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from sklearn.metrics import confusion_matrix
from tqdm import tqdm

from ..common.exceptions import ConfigurationError, DegenerateCorpusError
from ..tokenizer.wordpiece import TokenizedSample
from ..utils.repro import derive_seed, make_rng
from .base import SequenceModel, batch_tensors, label_tensor
from .encoder import ModelConfig, SequenceClassifier

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """
    Configuration with validation.
    """
    batch_size: int = 64
    epochs: int = 5
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass(frozen=True)
class EvalMetrics:
    """Confusion counts with malicious as the positive class."""
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def false_positive_rate(self) -> float:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "fpr": self.false_positive_rate,
            "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
        }


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    metrics: EvalMetrics

    def to_dict(self) -> Dict[str, float]:
        record = {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "eval_accuracy": self.metrics.accuracy,
            "eval_fpr": self.metrics.false_positive_rate,
        }
        record.update({k: v for k, v in asdict(self.metrics).items()})
        return record


@dataclass
class TrainResult:
    model: SequenceClassifier
    history: List[EpochRecord] = field(default_factory=list)


def split_corpus(
    samples: Sequence, train_fraction: float = 0.8, seed: int = 42
) -> Tuple[list, list]:
    """
    Reproducible train/held-out split (4:1 by default). Both parts keep the
    original corpus order.
    """
    n = len(samples)
    order = make_rng(seed, "split").permutation(n)
    n_train = int(round(n * train_fraction))
    train_idx = sorted(int(i) for i in order[:n_train])
    held_idx = sorted(int(i) for i in order[n_train:])
    return [samples[i] for i in train_idx], [samples[i] for i in held_idx]


def loss_and_grad(
    model: SequenceModel, batch: Sequence[TokenizedSample]
) -> Tuple[float, Dict[str, torch.Tensor]]:
    """
    Mean cross-entropy over the batch and its exact gradient for every
    parameter (reverse-mode autograd). Existing .grad buffers are left untouched.

    Raises:
        UnlabeledSampleError if a sample has no label
    """
    if not batch:
        raise ValueError("batch must not be empty")
    labels = label_tensor(batch)
    ids, mask = batch_tensors(batch)
    names, params = zip(*[(n, p) for n, p in model.named_parameters() if p.requires_grad])
    loss = F.cross_entropy(model(ids, mask), labels)
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return float(loss), {
        n: (g if g is not None else torch.zeros_like(p)).detach()
        for n, p, g in zip(names, params, grads)
    }


def evaluate(
    model: SequenceModel, samples: Sequence[TokenizedSample], threshold: float = 0.5
) -> EvalMetrics:
    """Malicious iff p(malicious) >= threshold."""
    if not samples:
        return EvalMetrics()
    y_true = label_tensor(samples).numpy()
    y_pred = (model.predict_proba(samples)[:, 1] >= threshold).astype(np.int64)
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return EvalMetrics(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


class Trainer:
    """
    Deterministic trainer: (seed, corpus, configs) fully determine the weights.
    """

    def __init__(
        self,
        model_config: ModelConfig,
        config: Optional[TrainConfig] = None,
        log_path: Optional[Union[str, os.PathLike]] = None,
        progress: bool = False,
    ):
        self.model_config = model_config
        self.config = config if config else TrainConfig()
        self.log_path = log_path
        self.progress = progress

    def fit(self, corpus: Sequence[TokenizedSample]) -> TrainResult:
        counts = Counter(label_tensor(corpus).tolist())
        if len(counts) < 2:
            raise DegenerateCorpusError({k: v for k, v in sorted(counts.items())})

        cfg = self.config
        train_set, held_out = split_corpus(corpus, cfg.train_fraction, cfg.seed)
        logger.info("Training on %d samples, evaluating on %d", len(train_set), len(held_out))

        model = SequenceClassifier.initialize(self.model_config, derive_seed(cfg.seed, "init"))
        optimizer = torch.optim.Adam(
            model.parameters(), lr=cfg.learning_rate,
            betas=(cfg.beta1, cfg.beta2), eps=cfg.adam_eps,
        )
        ids, mask = batch_tensors(train_set)
        labels = label_tensor(train_set)

        result = TrainResult(model=model)
        log_file = open(self.log_path, "w", encoding="utf-8") if self.log_path else None
        try:
            for epoch in tqdm(range(1, cfg.epochs + 1), desc="train", disable=not self.progress):
                model.train()
                order = torch.from_numpy(make_rng(cfg.seed, "shuffle", epoch).permutation(len(train_set)))
                total = 0.0
                for start in range(0, len(order), cfg.batch_size):
                    idx = order[start:start + cfg.batch_size]
                    optimizer.zero_grad()
                    loss = F.cross_entropy(model(ids[idx], mask[idx]), labels[idx])
                    loss.backward()
                    optimizer.step()
                    total += float(loss) * len(idx)

                model.eval()
                record = EpochRecord(epoch, total / max(len(train_set), 1), evaluate(model, held_out))
                result.history.append(record)
                logger.info(
                    "Epoch %d: loss=%.4f acc=%.4f fpr=%.4f",
                    epoch, record.train_loss, record.metrics.accuracy, record.metrics.false_positive_rate,
                )
                if log_file:
                    log_file.write(json.dumps(record.to_dict()) + "\n")
        finally:
            if log_file:
                log_file.close()

        model.zero_grad(set_to_none=True)
        return result


def train(
    corpus: Sequence[TokenizedSample],
    config: TrainConfig,
    model_config: ModelConfig,
    log_path: Optional[Union[str, os.PathLike]] = None,
) -> TrainResult:
    """
    Raises:
        DegenerateCorpusError if the corpus has a single class
    """
    return Trainer(model_config, config, log_path=log_path).fit(corpus)
