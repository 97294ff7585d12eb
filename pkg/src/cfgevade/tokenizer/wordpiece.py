"""
Greedy longest-match wordpiece tokenizer built from the training corpus.

Function names are split into sub-word tokens; every token span is kept in
a word map so attributions can be summed back into function names and the
names rebuilt exactly.
"""
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..common.exceptions import MalformedVocabError, SizeTooSmallError, SpecialInSpanError
from ..graph.cfg import RESERVED_PREFIX, FunctionSequence, Label

logger = logging.getLogger(__name__)

CLS_TOKEN = "[CLS]"
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
SPECIAL_TOKENS = (CLS_TOKEN, PAD_TOKEN, UNK_TOKEN)
CLS_ID, PAD_ID, UNK_ID = 0, 1, 2
CONTINUATION = RESERVED_PREFIX

DEFAULT_VOCAB_SIZE = 2048
DEFAULT_MAX_TOKENS = 128


@dataclass(frozen=True)
class Vocab:
    """Immutable id <-> token table; specials occupy ids 0..2."""
    tokens: Tuple[str, ...]
    max_size: int = DEFAULT_VOCAB_SIZE
    token_to_id: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if tokens[:3] != SPECIAL_TOKENS:
            raise MalformedVocabError(f"must start with {SPECIAL_TOKENS}")
        mapping = {tok: i for i, tok in enumerate(tokens)}
        if len(mapping) != len(tokens):
            raise MalformedVocabError("tokens must be unique")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "token_to_id", mapping)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    @staticmethod
    def is_special(token_id: int) -> bool:
        return 0 <= token_id < len(SPECIAL_TOKENS)

    def save(self, path: Union[str, os.PathLike]):
        """One token per line; line number = id."""
        Path(path).write_text("".join(f"{tok}\n" for tok in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> 'Vocab':
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Vocab file not found: {path}")
        tokens = path.read_text(encoding="utf-8").splitlines()
        try:
            return cls(tokens=tuple(tokens), max_size=len(tokens))
        except MalformedVocabError as e:
            raise MalformedVocabError(e.reason, str(path))


@dataclass(frozen=True)
class WordSpan:
    """A retained word and its token positions [start, end)."""
    word: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizedSample:
    name: str
    label: Optional[Label]
    input_ids: Tuple[int, ...]
    attention_mask: Tuple[int, ...]
    word_map: Tuple[WordSpan, ...]

    @property
    def length(self) -> int:
        return len(self.input_ids)

    @property
    def num_tokens(self) -> int:
        """Non-pad positions, [CLS] included."""
        return sum(self.attention_mask)

    @property
    def words(self) -> List[str]:
        return [span.word for span in self.word_map]


def build_vocab(
    sequences: Iterable[FunctionSequence],
    size: int = DEFAULT_VOCAB_SIZE,
    extra_chars: str = "",
    min_frequency: int = 1,
) -> Vocab:
    """
    specials + every character (bare and "##" form) + the most frequent whole
    words, frequency descending then string ascending, until `size` tokens.
    Words seen fewer than `min_frequency` times stay on the character fallback.

    Raises:
        SizeTooSmallError if size cannot hold the specials and character fallback
    """
    if min_frequency < 1:
        raise ValueError(f"min_frequency must be >= 1, got {min_frequency}")
    counts = Counter()
    for seq in sequences:
        counts.update(seq.calls)

    chars = sorted(set("".join(counts)) | set(extra_chars))
    required = len(SPECIAL_TOKENS) + 2 * len(chars)
    if size < required:
        raise SizeTooSmallError(size, required)

    tokens: List[str] = list(SPECIAL_TOKENS) + chars + [CONTINUATION + c for c in chars]
    present = set(tokens)
    for word, count in sorted(counts.items(), key=lambda item: (-item[1], item[0])):
        if len(tokens) >= size:
            break
        if count < min_frequency:
            break
        if word not in present and not word.startswith(CONTINUATION):
            tokens.append(word)
            present.add(word)

    logger.info("Built vocab: %d tokens (%d chars, %d whole words)",
                len(tokens), len(chars), len(tokens) - required)
    return Vocab(tokens=tuple(tokens), max_size=size)


def tokenize_word(vocab: Vocab, word: str) -> List[int]:
    """
    Whole word if known, otherwise greedy longest prefix followed by longest
    "##" continuations. A character missing from the vocab becomes [UNK].
    The leading piece is never a "##" token, so detokenize gives the word back.
    """
    if word in vocab and not word.startswith(CONTINUATION):
        return [vocab.id_of(word)]

    ids: List[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION + piece
            elif piece.startswith(CONTINUATION):
                end -= 1
                continue
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            ids.append(UNK_ID)
            start += 1
        else:
            ids.append(vocab.id_of(match))
            start = end
    return ids


def detokenize(vocab: Vocab, ids: Sequence[int]) -> str:
    """
    Raises:
        SpecialInSpanError if the span contains [CLS], [PAD] or [UNK]
    """
    parts = []
    for token_id in ids:
        if Vocab.is_special(token_id):
            raise SpecialInSpanError(token_id)
        token = vocab.token_of(token_id)
        parts.append(token[len(CONTINUATION):] if token.startswith(CONTINUATION) else token)
    return "".join(parts)


def encode_sequence(vocab: Vocab, seq: FunctionSequence, max_tokens: int = DEFAULT_MAX_TOKENS) -> TokenizedSample:
    """
    [CLS] + word tokens + [PAD] fill to exactly `max_tokens`.
    Words are never split across the boundary: the first word that does not
    fit ends the encoding.
    """
    if max_tokens < 2:
        raise ValueError(f"max_tokens must be >= 2, got {max_tokens}")

    ids = [CLS_ID]
    word_map: List[WordSpan] = []
    for word in seq.calls:
        pieces = tokenize_word(vocab, word)
        if len(ids) + len(pieces) > max_tokens:
            break
        word_map.append(WordSpan(word, len(ids), len(ids) + len(pieces)))
        ids.extend(pieces)

    used = len(ids)
    ids.extend([PAD_ID] * (max_tokens - used))
    mask = [1] * used + [0] * (max_tokens - used)
    return TokenizedSample(
        name=seq.name,
        label=seq.label,
        input_ids=tuple(ids),
        attention_mask=tuple(mask),
        word_map=tuple(word_map),
    )


def encode_corpus(
    vocab: Vocab,
    sequences: Iterable[FunctionSequence],
    max_calls: Optional[int] = 16,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> List[TokenizedSample]:
    """Windows each sequence to `max_calls` calls, then encodes it."""
    return [encode_sequence(vocab, seq.window(max_calls), max_tokens) for seq in sequences]
