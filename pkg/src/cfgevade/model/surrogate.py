import torch
from torch import nn

from .base import DTYPE, SequenceModel


class MeanPoolClassifier(SequenceModel):
    """
    Linear surrogate: token embeddings -> masked mean-pool -> linear head.

    Its logits are linear in the embeddings, so integrated gradients are
    exact for any step count; weights are easy to set by hand.
    """

    def __init__(self, vocab_size: int, max_positions: int, d_model: int = 1):
        super().__init__()
        self.vocab_size = vocab_size
        self.max_positions = max_positions
        self.d_model = d_model
        self.token_embedding = nn.Embedding(vocab_size, d_model, dtype=DTYPE)
        self.classifier = nn.Linear(d_model, 2, dtype=DTYPE)

    def embed(self, input_ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(input_ids)

    def forward_from_embeddings(self, embeddings: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        self.check_embeddings(embeddings, attention_mask)
        weights = attention_mask.to(DTYPE)
        pooled = (embeddings * weights[..., None]).sum(dim=1) / weights.sum(dim=1, keepdim=True)
        return self.classifier(pooled)
