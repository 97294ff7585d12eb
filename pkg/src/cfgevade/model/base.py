from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..common.exceptions import ShapeMismatchError, UnlabeledSampleError
from ..graph.cfg import Label
from ..tokenizer.wordpiece import TokenizedSample

MALICIOUS_CLASS = Label.MALICIOUS.index
DTYPE = torch.float64


@dataclass(frozen=True)
class Prediction:
    """Logits and class probabilities (benign, malicious) for one sample."""
    logits: Tuple[float, float]
    probabilities: Tuple[float, float]

    @property
    def malicious_probability(self) -> float:
        return self.probabilities[MALICIOUS_CLASS]


def batch_tensors(samples: Sequence[TokenizedSample]) -> Tuple[torch.Tensor, torch.Tensor]:
    """(input_ids LongTensor (B,T), attention_mask BoolTensor (B,T))."""
    ids = torch.tensor([s.input_ids for s in samples], dtype=torch.long)
    mask = torch.tensor([s.attention_mask for s in samples], dtype=torch.bool)
    return ids, mask


def label_tensor(samples: Sequence[TokenizedSample]) -> torch.Tensor:
    labels = []
    for s in samples:
        if s.label is None:
            raise UnlabeledSampleError(s.name)
        labels.append(s.label.index)
    return torch.tensor(labels, dtype=torch.long)


class SequenceModel(nn.Module, ABC):
    """
    Abstract base for tokenized-sequence classifiers with an embedding layer.
    Integrated gradients and the attack only talk to this interface.
    """

    vocab_size: int
    max_positions: int
    d_model: int

    @abstractmethod
    def embed(self, input_ids: torch.Tensor) -> torch.Tensor:
        """Embedding-layer output (B,T,d) for token ids (B,T)."""
        pass

    @abstractmethod
    def forward_from_embeddings(self, embeddings: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        """Logits (B,2) from embedding-layer output, bypassing the token lookup."""
        pass

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        self.check_ids(input_ids, attention_mask)
        return self.forward_from_embeddings(self.embed(input_ids), attention_mask)

    def check_ids(self, input_ids: torch.Tensor, attention_mask: torch.Tensor):
        if input_ids.dim() != 2 or input_ids.shape[1] != self.max_positions:
            raise ShapeMismatchError("input_ids", (-1, self.max_positions), input_ids.shape)
        if attention_mask.shape != input_ids.shape:
            raise ShapeMismatchError("attention_mask", input_ids.shape, attention_mask.shape)
        if input_ids.numel() and (input_ids.min() < 0 or input_ids.max() >= self.vocab_size):
            raise ShapeMismatchError("token ids", (0, self.vocab_size), (int(input_ids.min()), int(input_ids.max())))

    def check_embeddings(self, embeddings: torch.Tensor, attention_mask: torch.Tensor):
        expected = (embeddings.shape[0] if embeddings.dim() == 3 else -1, self.max_positions, self.d_model)
        if embeddings.dim() != 3 or tuple(embeddings.shape[1:]) != expected[1:]:
            raise ShapeMismatchError("embeddings", expected, embeddings.shape)
        if tuple(attention_mask.shape) != tuple(embeddings.shape[:2]):
            raise ShapeMismatchError("attention_mask", embeddings.shape[:2], attention_mask.shape)

    @torch.no_grad()
    def predict_proba(self, samples: Sequence[TokenizedSample], batch_size: int = 256) -> np.ndarray:
        """(N,2) class probabilities."""
        out: List[np.ndarray] = []
        for i in range(0, len(samples), batch_size):
            ids, mask = batch_tensors(samples[i:i + batch_size])
            out.append(torch.softmax(self(ids, mask), dim=-1).numpy())
        if not out:
            return np.zeros((0, 2))
        return np.concatenate(out)

    @torch.no_grad()
    def score(self, sample: TokenizedSample) -> Prediction:
        ids, mask = batch_tensors([sample])
        logits = self(ids, mask)[0]
        probs = torch.softmax(logits, dim=-1)
        return Prediction(tuple(logits.tolist()), tuple(probs.tolist()))

    def malicious_probability(self, sample: TokenizedSample) -> float:
        return self.score(sample).malicious_probability
