# Init for cfgevade.tokenizer package
from .wordpiece import (
    CLS_ID, PAD_ID, UNK_ID, Vocab, WordSpan, TokenizedSample,
    build_vocab, tokenize_word, detokenize, encode_sequence, encode_corpus,
)
