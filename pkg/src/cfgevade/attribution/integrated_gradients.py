"""
Layer integrated gradients over the embedding layer.

The scalar field is the malicious-class logit. The baseline keeps [CLS] and
replaces every other position by [PAD] (position embeddings included, so
they cancel in x - x'). The path integral uses the trapezoidal rule over
alpha in {0, 1/steps, ..., 1}.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import torch

from ..common.exceptions import SpanOutOfRangeError
from ..model.base import DTYPE, MALICIOUS_CLASS, SequenceModel, batch_tensors
from ..tokenizer.wordpiece import CLS_ID, PAD_ID, TokenizedSample, WordSpan

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 50


@dataclass(frozen=True)
class TokenScore:
    position: int
    token_id: int
    score: float


@dataclass(frozen=True)
class WordScore:
    word: str
    start: int
    end: int
    score: float


@dataclass
class AttributionReport:
    sample_name: str
    target: int
    token_scores: List[TokenScore] = field(default_factory=list)
    word_scores: List[WordScore] = field(default_factory=list)
    delta: float = 0.0
    completeness_gap: float = 0.0
    steps: int = DEFAULT_STEPS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample": self.sample_name,
            "target": "malicious" if self.target == MALICIOUS_CLASS else "benign",
            "steps": self.steps,
            "delta": self.delta,
            "completeness_gap": self.completeness_gap,
            "tokens": [
                {"position": t.position, "token_id": t.token_id, "score": t.score}
                for t in self.token_scores
            ],
            "words": [
                {"word": w.word, "span": [w.start, w.end], "score": w.score}
                for w in self.word_scores
            ],
        }


def baseline_ids(sample: TokenizedSample) -> List[int]:
    return [CLS_ID] + [PAD_ID] * (sample.length - 1)


def trapezoid_weights(steps: int) -> torch.Tensor:
    weights = torch.full((steps + 1,), 1.0 / steps, dtype=DTYPE)
    weights[0] = weights[-1] = 0.5 / steps
    return weights


def _embeddings(model: SequenceModel, sample: TokenizedSample):
    ids, mask = batch_tensors([sample])
    model.check_ids(ids, mask)
    with torch.no_grad():
        x = model.embed(ids)[0]
        x_base = model.embed(torch.tensor([baseline_ids(sample)], dtype=torch.long))[0]
    return x, x_base, mask


def integrated_gradients(
    model: SequenceModel,
    sample: TokenizedSample,
    steps: int = DEFAULT_STEPS,
    target: int = MALICIOUS_CLASS,
) -> List[TokenScore]:
    """
    Per-token attribution: sum over embedding components of
    (x_i - x'_i) * trapezoid-average of df/dx_i along the straight path.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    x, x_base, mask = _embeddings(model, sample)
    diff = x - x_base

    alphas = torch.linspace(0.0, 1.0, steps + 1, dtype=DTYPE)
    path = (x_base[None] + alphas[:, None, None] * diff[None]).detach().requires_grad_(True)
    logits = model.forward_from_embeddings(path, mask.expand(steps + 1, -1))
    # rows are independent, so the gradient of the sum is the per-row gradient
    (grads,) = torch.autograd.grad(logits[:, target].sum(), path)

    avg_grad = (trapezoid_weights(steps)[:, None, None] * grads).sum(dim=0)
    scores = (diff * avg_grad).sum(dim=-1).tolist()
    return [
        TokenScore(position=i, token_id=tok, score=score)
        for i, (tok, score) in enumerate(zip(sample.input_ids, scores))
    ]


def target_delta(model: SequenceModel, sample: TokenizedSample, target: int = MALICIOUS_CLASS) -> float:
    """f(x) - f(x') computed directly."""
    x, x_base, mask = _embeddings(model, sample)
    with torch.no_grad():
        logits = model.forward_from_embeddings(torch.stack([x, x_base]), mask.expand(2, -1))
    return float(logits[0, target] - logits[1, target])


def word_attributions(token_scores: Sequence[TokenScore], word_map: Sequence[WordSpan]) -> List[WordScore]:
    """
    Word score = sum of its span's token scores, in word_map order.
    [CLS] and pads belong to no span and are left out.
    """
    words = []
    for span in word_map:
        if span.start < 0 or span.end > len(token_scores) or span.start >= span.end:
            raise SpanOutOfRangeError(span.word, span.start, span.end, len(token_scores))
        words.append(WordScore(
            word=span.word, start=span.start, end=span.end,
            score=sum(t.score for t in token_scores[span.start:span.end]),
        ))
    return words


def positive_words(word_scores: Sequence[WordScore]) -> List[WordScore]:
    """Strictly positive words, order preserved. Empty means nothing to replace."""
    return [w for w in word_scores if w.score > 0]


def explain(
    model: SequenceModel,
    sample: TokenizedSample,
    steps: int = DEFAULT_STEPS,
    target: int = MALICIOUS_CLASS,
) -> AttributionReport:
    tokens = integrated_gradients(model, sample, steps, target)
    delta = target_delta(model, sample, target)
    gap = abs(sum(t.score for t in tokens) - delta)
    logger.debug("IG for %s: delta=%.6f gap=%.3e", sample.name, delta, gap)
    return AttributionReport(
        sample_name=sample.name,
        target=target,
        token_scores=tokens,
        word_scores=word_attributions(tokens, sample.word_map),
        delta=delta,
        completeness_gap=gap,
        steps=steps,
    )
