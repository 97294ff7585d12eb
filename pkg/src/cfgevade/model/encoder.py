"""
Small pre-norm transformer encoder for function-call sequences.
Two classes (benign=0, malicious=1), read off the [CLS] position.
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict

import torch
import torch.nn.functional as F
from torch import nn

from ..common.exceptions import ConfigurationError
from .base import DTYPE, SequenceModel


@dataclass
class ModelConfig:
    """
    Configuration with validation.
    """
    vocab_size: int
    max_positions: int = 128
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    layer_norm_eps: float = 1e-5
    n_classes: int = 2

    def __post_init__(self):
        for key in ("vocab_size", "max_positions", "d_model", "n_layers", "n_heads", "d_ff"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigurationError(f"{key} must be an integer, got {value!r}")
            if value < 1:
                raise ConfigurationError(f"{key} must be >= 1, got {value}")
        if self.d_model % self.n_heads:
            raise ConfigurationError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if not isinstance(self.layer_norm_eps, (int, float)) or not self.layer_norm_eps > 0:
            raise ConfigurationError(f"layer_norm_eps must be a positive number, got {self.layer_norm_eps!r}")
        if self.n_classes != 2:
            raise ConfigurationError(f"only 2 classes are supported, got {self.n_classes}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelConfig':
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigurationError(f"invalid model config: {e}")


class EncoderLayer(nn.Module):
    """x + Attn(LN(x)), then x + FFN(LN(x)); ReLU feed-forward."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        d, eps = config.d_model, config.layer_norm_eps
        self.n_heads = config.n_heads
        self.head_dim = config.head_dim
        self.attn_norm = nn.LayerNorm(d, eps=eps, dtype=DTYPE)
        self.query = nn.Linear(d, d, dtype=DTYPE)
        self.key = nn.Linear(d, d, dtype=DTYPE)
        self.value = nn.Linear(d, d, dtype=DTYPE)
        self.output = nn.Linear(d, d, dtype=DTYPE)
        self.ff_norm = nn.LayerNorm(d, eps=eps, dtype=DTYPE)
        self.ff_in = nn.Linear(d, config.d_ff, dtype=DTYPE)
        self.ff_out = nn.Linear(config.d_ff, d, dtype=DTYPE)

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.head_dim).transpose(1, 2)

    def attention(self, h: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        """Softmax weights (B,heads,T,T); pad keys get -inf before the softmax."""
        q, k = self._heads(self.query(h)), self._heads(self.key(h))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        scores = scores.masked_fill(~attention_mask[:, None, None, :], float("-inf"))
        return torch.softmax(scores, dim=-1)

    def forward(self, x: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        h = self.attn_norm(x)
        weights = self.attention(h, attention_mask)
        context = weights @ self._heads(self.value(h))
        b, _, t, _ = context.shape
        x = x + self.output(context.transpose(1, 2).reshape(b, t, -1))
        return x + self.ff_out(F.relu(self.ff_in(self.ff_norm(x))))


class SequenceClassifier(SequenceModel):
    """
    Token + position embeddings -> N encoder layers -> final LayerNorm ->
    linear head on the [CLS] position. All arithmetic in float64.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.vocab_size = config.vocab_size
        self.max_positions = config.max_positions
        self.d_model = config.d_model

        self.token_embedding = nn.Embedding(config.vocab_size, config.d_model, dtype=DTYPE)
        self.position_embedding = nn.Embedding(config.max_positions, config.d_model, dtype=DTYPE)
        self.layers = nn.ModuleList([EncoderLayer(config) for _ in range(config.n_layers)])
        self.final_norm = nn.LayerNorm(config.d_model, eps=config.layer_norm_eps, dtype=DTYPE)
        self.classifier = nn.Linear(config.d_model, config.n_classes, dtype=DTYPE)
        self.reset_parameters()

    @torch.no_grad()
    def reset_parameters(self):
        """
        Embeddings uniform in +-1/sqrt(d); linear layers keep torch's
        fan-in scaled uniform init. Uses the current torch RNG.
        """
        bound = 1.0 / math.sqrt(self.d_model)
        nn.init.uniform_(self.token_embedding.weight, -bound, bound)
        nn.init.uniform_(self.position_embedding.weight, -bound, bound)

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> 'SequenceClassifier':
        """Fresh model from a private torch RNG stream; the global RNG is untouched."""
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            return cls(config)

    def embed(self, input_ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(input_ids.shape[-1])
        return self.token_embedding(input_ids) + self.position_embedding(positions)

    def forward_from_embeddings(self, embeddings: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        self.check_embeddings(embeddings, attention_mask)
        x = embeddings
        for layer in self.layers:
            x = layer(x, attention_mask)
        cls_state = self.final_norm(x[:, 0])
        return self.classifier(cls_state)
