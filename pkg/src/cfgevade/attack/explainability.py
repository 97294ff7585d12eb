"""
White-box explainability-guided evasion attack.

Each round: attribute the malicious logit to the function names of the
current sequence, relocate every positively attributed function to a fresh
synthetic import (`sym.imp.<10 chars>.dll`, all call sites at once), and
re-classify. The output of a round is the input of the next.
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from ..attribution.integrated_gradients import explain, positive_words
from ..common.exceptions import NotMaliciousError
from ..graph.builder import random_import_name
from ..graph.cfg import FunctionSequence, Label
from ..model.base import SequenceModel
from ..tokenizer.wordpiece import TokenizedSample, Vocab, encode_sequence
from .state import AttackConfig, AttackOutcome, AttackStatus, Replacement

logger = logging.getLogger(__name__)


def gen_import_name(rng: np.random.Generator) -> str:
    """Fresh synthetic import; same draws as the corpus generator uses."""
    return random_import_name(rng)


class ExplainabilityAttack:
    """
    Multi-round function-rename attack against one model.
    Model and vocab are only read, so one instance can serve many threads.
    """

    def __init__(self, model: SequenceModel, vocab: Vocab, config: Optional[AttackConfig] = None):
        self.model = model
        self.vocab = vocab
        self.config = config if config else AttackConfig()

    def encode(self, seq: FunctionSequence) -> TokenizedSample:
        """Model view of a sequence: the first max_calls calls."""
        return encode_sequence(self.vocab, seq.window(self.config.max_calls), self.model.max_positions)

    def malicious_probability(self, seq: FunctionSequence) -> float:
        return self.model.malicious_probability(self.encode(seq))

    def attack(self, seq: FunctionSequence, rng: np.random.Generator) -> AttackOutcome:
        """
        Raises:
            NotMaliciousError if the sample is labelled benign or already
            classified benign
        """
        cfg = self.config
        p_initial = self.malicious_probability(seq)
        if seq.label is Label.BENIGN or p_initial < cfg.threshold:
            raise NotMaliciousError(seq.name, p_initial)

        outcome = AttackOutcome(
            sample_name=seq.name,
            status=AttackStatus.FAILURE,
            history=[seq.calls],
            initial_probability=p_initial,
            final_probability=p_initial,
        )
        current = seq
        for round_n in range(cfg.rounds):
            report = explain(self.model, self.encode(current), steps=cfg.ig_steps)
            targets = positive_words(report.word_scores)
            if not targets:
                if round_n == 0:
                    outcome.status = AttackStatus.UNIMPROVABLE
                else:
                    outcome.stalled = True
                logger.debug("%s: no positive words in round %d", seq.name, round_n)
                return outcome

            mapping: Dict[str, str] = {}
            for word in targets:
                # one import per distinct function, applied to all of its call sites
                if word.word not in mapping:
                    mapping[word.word] = gen_import_name(rng)
                    outcome.replacements.append(
                        Replacement(round_n, word.word, mapping[word.word], word.score)
                    )

            current = current.replace_calls(mapping)
            outcome.history.append(current.calls)
            outcome.rounds_used = round_n + 1
            outcome.final_probability = self.malicious_probability(current)
            if outcome.final_probability < cfg.threshold:
                outcome.status = AttackStatus.SUCCESS
                return outcome

        return outcome


def attack_sample(
    model: SequenceModel,
    vocab: Vocab,
    seq: FunctionSequence,
    config: AttackConfig,
    rng: np.random.Generator,
) -> AttackOutcome:
    return ExplainabilityAttack(model, vocab, config).attack(seq, rng)
