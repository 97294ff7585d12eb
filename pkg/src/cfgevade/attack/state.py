"""
Data structures for the explainability attack.
Uses dataclasses for type safety; configs validate on construction.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from ..common.exceptions import ConfigurationError
from ..graph.builder import (  # noqa: F401
    IMPORT_ALPHABET, IMPORT_NAME_CHARS, IMPORT_NAME_LENGTH, IMPORT_PREFIX, IMPORT_SUFFIX,
)


class AttackStatus(Enum):
    """Per-sample attack result."""
    SUCCESS = "success"
    FAILURE = "failure"
    UNIMPROVABLE = "unimprovable"


@dataclass
class AttackConfig:
    """
    Configuration with validation.
    """
    rounds: int = 1
    sample_limit: int = 2500
    trials: int = 3
    seed: int = 42
    max_calls: Optional[int] = 16
    ig_steps: int = 50
    threshold: float = 0.5
    import_name_length: int = IMPORT_NAME_LENGTH
    alphabet: str = IMPORT_ALPHABET

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigurationError(f"rounds must be >= 1, got {self.rounds}")
        if self.sample_limit < 1:
            raise ConfigurationError(f"sample_limit must be >= 1, got {self.sample_limit}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.ig_steps < 1:
            raise ConfigurationError(f"ig_steps must be >= 1, got {self.ig_steps}")
        if self.max_calls is not None and self.max_calls < 1:
            raise ConfigurationError(f"max_calls must be >= 1, got {self.max_calls}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.import_name_length != IMPORT_NAME_LENGTH or self.alphabet != IMPORT_ALPHABET:
            raise ConfigurationError("synthetic import names are fixed at 10 symbols from [A-Z0-9]")


@dataclass(frozen=True)
class Replacement:
    """One function relocated to a synthetic import in a given round."""
    round: int
    original: str
    replacement: str
    score: float

    def to_dict(self) -> Dict[str, Any]:
        return {"round": self.round, "original": self.original,
                "replacement": self.replacement, "score": self.score}


@dataclass
class AttackOutcome:
    """
    Result of attacking one sample. history[0] is the original call
    sequence and history[i] = A(history[i-1]).
    """
    sample_name: str
    status: AttackStatus
    rounds_used: int = 0
    history: List[Tuple[str, ...]] = field(default_factory=list)
    replacements: List[Replacement] = field(default_factory=list)
    initial_probability: float = 0.0
    final_probability: float = 0.0
    stalled: bool = False

    @property
    def final_calls(self) -> Tuple[str, ...]:
        return self.history[-1] if self.history else ()

    @property
    def replaced_functions(self) -> int:
        return len({r.original for r in self.replacements})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample": self.sample_name,
            "status": self.status.value,
            "rounds_used": self.rounds_used,
            "stalled": self.stalled,
            "initial_probability": self.initial_probability,
            "final_probability": self.final_probability,
            "replacements": [r.to_dict() for r in self.replacements],
            "history": [list(calls) for calls in self.history],
        }
