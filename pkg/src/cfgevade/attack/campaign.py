"""
Attack campaigns: repeated trials over randomly drawn malicious samples.

Per trial:
    a_a  samples attacked (benign-classified draws are skipped, not counted)
    a_i  a_a minus unimprovable samples
    a_s  successes
    s_g = a_s / a_a,  s_n = a_s / a_i  (undefined when a_i = 0)
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, TextIO

import numpy as np
from tqdm import tqdm

from ..common.exceptions import NoMaliciousSamplesError, NotMaliciousError
from ..graph.cfg import FunctionSequence, Label
from ..model.base import SequenceModel
from ..tokenizer.wordpiece import Vocab
from ..utils.repro import make_rng
from .explainability import ExplainabilityAttack
from .state import AttackConfig, AttackOutcome, AttackStatus

logger = logging.getLogger(__name__)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


@dataclass(frozen=True)
class TrialStats:
    trial: int
    attempted: int
    improvable: int
    successes: int
    skipped_benign: int = 0
    mean_replaced: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.improvable <= self.attempted:
            raise ValueError(
                f"counters must satisfy a_s <= a_i <= a_a, got "
                f"{self.successes}/{self.improvable}/{self.attempted}"
            )

    @property
    def s_g(self) -> float:
        return _ratio(self.successes, self.attempted) or 0.0

    @property
    def s_n(self) -> Optional[float]:
        return _ratio(self.successes, self.improvable)

    @classmethod
    def from_outcomes(
        cls, trial: int, outcomes: Sequence[AttackOutcome], skipped_benign: int = 0
    ) -> 'TrialStats':
        successes = [o for o in outcomes if o.status is AttackStatus.SUCCESS]
        unimprovable = sum(1 for o in outcomes if o.status is AttackStatus.UNIMPROVABLE)
        replaced = [o.replaced_functions for o in successes]
        return cls(
            trial=trial,
            attempted=len(outcomes),
            improvable=len(outcomes) - unimprovable,
            successes=len(successes),
            skipped_benign=skipped_benign,
            mean_replaced=float(np.mean(replaced)) if replaced else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trial": self.trial,
            "a_a": self.attempted,
            "a_i": self.improvable,
            "a_s": self.successes,
            "s_g": self.s_g,
            "s_n": self.s_n,
            "skipped_benign": self.skipped_benign,
            "mean_replaced": self.mean_replaced,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrialStats':
        return cls(
            trial=int(data["trial"]),
            attempted=int(data["a_a"]),
            improvable=int(data["a_i"]),
            successes=int(data["a_s"]),
            skipped_benign=int(data.get("skipped_benign", 0)),
            mean_replaced=data.get("mean_replaced"),
        )


@dataclass
class CampaignStats:
    """Per-trial counters for one rounds limit, with mean/median aggregates."""
    rounds: int
    trials: List[TrialStats] = field(default_factory=list)

    def _values(self, attr: str) -> List[float]:
        values = [getattr(t, attr) for t in self.trials]
        return [float(v) for v in values if v is not None]

    def _mean(self, attr: str) -> Optional[float]:
        values = self._values(attr)
        return float(np.mean(values)) if values else None

    def _median(self, attr: str) -> Optional[float]:
        values = self._values(attr)
        return float(np.median(values)) if values else None

    @property
    def mean_s_g(self) -> Optional[float]:
        return self._mean("s_g")

    @property
    def median_s_g(self) -> Optional[float]:
        return self._median("s_g")

    @property
    def mean_a_i(self) -> Optional[float]:
        return self._mean("improvable")

    @property
    def median_a_i(self) -> Optional[float]:
        return self._median("improvable")

    @property
    def mean_s_n(self) -> Optional[float]:
        """Over trials where s_n is defined."""
        return self._mean("s_n")

    @property
    def median_s_n(self) -> Optional[float]:
        return self._median("s_n")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rounds": self.rounds,
            "trials": [t.to_dict() for t in self.trials],
            "mean_s_g": self.mean_s_g,
            "median_s_g": self.median_s_g,
            "mean_a_i": self.mean_a_i,
            "median_a_i": self.median_a_i,
            "mean_s_n": self.mean_s_n,
            "median_s_n": self.median_s_n,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CampaignStats':
        return cls(rounds=int(data["rounds"]), trials=[TrialStats.from_dict(t) for t in data["trials"]])


class CampaignRunner:
    """
    Runs AttackConfig.trials trials. Sample draws and synthetic names come
    from labelled streams (seed, "campaign", trial) and (seed, "attack",
    trial, k), so results do not depend on the thread count or the rounds limit.
    """

    def __init__(
        self,
        model: SequenceModel,
        vocab: Vocab,
        config: Optional[AttackConfig] = None,
        threads: int = 1,
        outcome_sink: Optional[TextIO] = None,
        progress: bool = False,
    ):
        self.attack = ExplainabilityAttack(model, vocab, config)
        self.config = self.attack.config
        self.threads = max(1, int(threads))
        self.outcome_sink = outcome_sink
        self.progress = progress

    def draw(self, pool_size: int, trial: int) -> List[int]:
        """Uniform draw without replacement of up to sample_limit indices."""
        n = min(self.config.sample_limit, pool_size)
        rng = make_rng(self.config.seed, "campaign", trial)
        return [int(i) for i in rng.choice(pool_size, size=n, replace=False)]

    def _attack_one(self, trial: int, k: int, seq: FunctionSequence) -> Optional[AttackOutcome]:
        try:
            return self.attack.attack(seq, make_rng(self.config.seed, "attack", trial, k))
        except NotMaliciousError as e:
            logger.debug("Skipping %s: %s", seq.name, e)
            return None

    def run_trial(self, malicious: Sequence[FunctionSequence], trial: int) -> TrialStats:
        picks = [malicious[i] for i in self.draw(len(malicious), trial)]
        jobs = range(len(picks))
        if self.threads == 1:
            results = [self._attack_one(trial, k, picks[k]) for k in jobs]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda k: self._attack_one(trial, k, picks[k]), jobs))

        outcomes = [r for r in results if r is not None]
        stats = TrialStats.from_outcomes(trial, outcomes, skipped_benign=len(results) - len(outcomes))
        if self.outcome_sink is not None:
            for k, outcome in enumerate(results):
                if outcome is None:
                    continue
                record = {"rounds": self.config.rounds, "trial": trial, "index": k}
                record.update(outcome.to_dict())
                self.outcome_sink.write(json.dumps(record) + "\n")

        logger.info(
            "Trial %d (rounds=%d): a_a=%d a_i=%d a_s=%d skipped=%d",
            trial, self.config.rounds, stats.attempted, stats.improvable,
            stats.successes, stats.skipped_benign,
        )
        return stats

    def run(self, corpus: Sequence[FunctionSequence]) -> CampaignStats:
        """
        Raises:
            NoMaliciousSamplesError if the corpus has no malicious-labelled sample
        """
        malicious = [seq for seq in corpus if seq.label is Label.MALICIOUS]
        if not malicious:
            raise NoMaliciousSamplesError(len(corpus))

        campaign = CampaignStats(rounds=self.config.rounds)
        trials = range(self.config.trials)
        for trial in tqdm(trials, desc=f"attack r={self.config.rounds}", disable=not self.progress):
            campaign.trials.append(self.run_trial(malicious, trial))
        return campaign


def run_campaign(
    model: SequenceModel,
    vocab: Vocab,
    corpus: Sequence[FunctionSequence],
    config: AttackConfig,
    threads: int = 1,
    outcome_sink: Optional[TextIO] = None,
) -> CampaignStats:
    return CampaignRunner(model, vocab, config, threads=threads, outcome_sink=outcome_sink).run(corpus)
