"""
Custom exceptions for the cfgevade pipeline.
Provides clear error hierarchy and context.
"""
from typing import Optional, Sequence


class CFGEvadeException(Exception):
    """Base exception for all cfgevade errors."""
    pass


class ValidationException(CFGEvadeException):
    """Raised when input data fails validation."""
    pass


class MalformedJsonError(ValidationException):
    """Raised when a CFG document is not valid JSON / UTF-8."""

    def __init__(self, reason: str, source: Optional[str] = None):
        self.reason = reason
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"Malformed JSON{where}: {reason}")


class SchemaViolationError(ValidationException):
    """Raised when a CFG document is valid JSON but breaks the graph schema."""

    def __init__(self, reason: str, source: Optional[str] = None):
        self.reason = reason
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"Schema violation{where}: {reason}")


class ConfigurationError(CFGEvadeException, ValueError):
    """Raised when configuration is invalid."""
    pass


class TokenizerException(CFGEvadeException):
    """Raised when vocabulary building or encoding fails."""
    pass


class SizeTooSmallError(TokenizerException):
    """Raised when the vocabulary budget cannot hold specials + character fallback."""

    def __init__(self, size: int, required: int):
        self.size = size
        self.required = required
        super().__init__(f"Vocab size {size} too small, need at least {required}")


class MalformedVocabError(TokenizerException, ValueError):
    """Raised when a token table lacks the leading specials or repeats a token."""

    def __init__(self, reason: str, source: Optional[str] = None):
        self.reason = reason
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"Malformed vocab{where}: {reason}")


class SpecialInSpanError(TokenizerException):
    """Raised when detokenize receives a special token id."""

    def __init__(self, token_id: int):
        self.token_id = token_id
        super().__init__(f"Special token id {token_id} cannot be detokenized")


class ModelException(CFGEvadeException):
    """Raised when the classifier cannot run or train."""
    pass


class ShapeMismatchError(ModelException):
    """Raised when an input tensor does not fit the model configuration."""

    def __init__(self, what: str, expected: Sequence[int], got: Sequence[int]):
        self.what = what
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(f"{what}: expected shape {self.expected}, got {self.got}")


class UnlabeledSampleError(ModelException):
    """Raised when a training/evaluation sample carries no label."""

    def __init__(self, sample_name: str):
        self.sample_name = sample_name
        super().__init__(f"Sample '{sample_name}' has no label")


class DegenerateCorpusError(ModelException):
    """Raised when a training corpus contains a single class."""

    def __init__(self, counts: dict):
        self.counts = counts
        super().__init__(f"Training corpus needs both classes, got {counts}")


class CheckpointException(ModelException):
    """Raised when a weight file cannot be read."""
    pass


class VersionMismatchError(CheckpointException):

    def __init__(self, found: int, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"Weight file version {found}, expected {expected}")


class CorruptFileError(CheckpointException):

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Corrupt weight file: {reason}")


class AttributionException(CFGEvadeException):
    """Raised when attribution cannot be computed."""
    pass


class SpanOutOfRangeError(AttributionException):

    def __init__(self, word: str, start: int, end: int, length: int):
        self.word = word
        self.span = (start, end)
        self.length = length
        super().__init__(f"Span [{start},{end}) of '{word}' outside {length} token scores")


class AttackException(CFGEvadeException):
    """Raised when the evasion attack cannot proceed."""
    pass


class NotMaliciousError(AttackException):
    """Raised when the attack target is not a detected malicious sample."""

    def __init__(self, sample_name: str, probability: Optional[float] = None):
        self.sample_name = sample_name
        self.probability = probability
        detail = f" (p_malicious={probability:.4f})" if probability is not None else ""
        super().__init__(f"Sample '{sample_name}' is not classified malicious{detail}")


class NoMaliciousSamplesError(AttackException):

    def __init__(self, corpus_size: int):
        self.corpus_size = corpus_size
        super().__init__(f"No malicious samples among {corpus_size} corpus entries")


class ReportError(CFGEvadeException):
    """Raised when there is nothing to report."""
    pass


class UsageError(CFGEvadeException):
    """Raised for command-line usage mistakes."""
    pass


class UnknownSubcommandError(UsageError):

    def __init__(self, command: str, choices: Sequence[str]):
        self.command = command
        self.choices = tuple(choices)
        super().__init__(f"Unknown subcommand '{command}' (choose from {', '.join(self.choices)})")
