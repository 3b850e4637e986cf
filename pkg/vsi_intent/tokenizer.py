# -*- coding: utf-8 -*-
"""
Whitespace word tokenizer and vocabulary.

The synthetic query corpus has a closed vocabulary, so words are the unit.
Everything the rest of the package needs goes through ``BaseTokenizer``;
``VSI_INTENT_TOKENIZER_CLASS`` selects the implementation.
"""
import io
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ConfigError, DataError, DimensionError


logger = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = '<pad>'
UNK_TOKEN = '<unk>'
RESERVED = (PAD_TOKEN, UNK_TOKEN)


def split_query(query):
    return query.lower().split()


class Vocab(object):
    """
    Token <-> id map. Ids 0 and 1 are PAD and UNK; the remaining ids are
    contiguous and bijective with their tokens.
    """

    def __init__(self, tokens):
        tokens = list(tokens)
        if len(set(tokens)) != len(tokens):
            raise DataError('vocabulary tokens must be unique')
        self.id_to_token = list(RESERVED) + tokens
        self.token_to_id = {token: index for index, token in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise DataError('vocabulary may not contain the reserved tokens')

    def __len__(self):
        return len(self.id_to_token)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.id_to_token == other.id_to_token

    def __contains__(self, token):
        return token in self.token_to_id

    def get_id(self, token):
        return self.token_to_id.get(token, UNK_ID)

    @property
    def tokens(self):
        return self.id_to_token[len(RESERVED):]


@dataclass(frozen=True)
class TokenSequence:
    ids: Tuple[int, ...]
    mask: Tuple[bool, ...]
    original_length: int

    @property
    def length(self):
        return len(self.ids)

    @property
    def is_empty(self):
        return self.original_length == 0


def build_vocab(corpus, max_size):
    """
    Ranks lowercased whitespace tokens by frequency, ties broken
    lexicographically, and keeps the first ``max_size - 2``.
    """
    corpus = list(corpus)
    if not corpus:
        raise DataError('cannot build a vocabulary from an empty corpus')
    if max_size < len(RESERVED):
        raise ConfigError('vocabulary size must be at least %d' % len(RESERVED))

    counts = Counter()
    for query in corpus:
        counts.update(split_query(query))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return Vocab(token for token, _ in ranked[:max_size - len(RESERVED)])


def encode(query, vocab, length):
    if length < 1:
        raise DimensionError('sequence length must be at least 1, got %d' % length)
    tokens = split_query(query)
    kept = tokens[:length]
    ids = [vocab.get_id(token) for token in kept]
    padding = length - len(ids)
    if not tokens:
        logger.debug('encoded an empty query as all padding')
    return TokenSequence(
        ids=tuple(ids + [PAD_ID] * padding),
        mask=tuple([True] * len(ids) + [False] * padding),
        original_length=len(tokens),
    )


def decode(sequence, vocab):
    """
    Returns the in-vocabulary tokens of ``sequence`` joined by spaces.
    """
    words = []
    for token_id, real in zip(sequence.ids, sequence.mask):
        if real and token_id != UNK_ID:
            words.append(vocab.id_to_token[token_id])
    return ' '.join(words)


def save_vocab(vocab, path):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
        for token in vocab.tokens:
            handle.write(token + '\n')


def load_vocab(path):
    with io.open(path, 'r', encoding='utf-8') as handle:
        return Vocab(line.rstrip('\n') for line in handle if line.rstrip('\n'))


class BaseTokenizer(object):
    """
    Interface every tokenizer class named by VSI_INTENT_TOKENIZER_CLASS
    implements.
    """

    def __init__(self, vocab):
        self.vocab = vocab

    @classmethod
    def from_corpus(cls, corpus, max_size):
        raise NotImplementedError

    @classmethod
    def load(cls, path):
        raise NotImplementedError

    def save(self, path):
        raise NotImplementedError

    def encode(self, query, length):
        raise NotImplementedError

    def decode(self, sequence):
        raise NotImplementedError

    @property
    def vocab_size(self):
        return len(self.vocab)

    def encode_batch(self, queries, length):
        """
        Returns ``(ids, mask)`` arrays of shape (len(queries), length).
        """
        sequences = [self.encode(query, length) for query in queries]
        ids = np.array([sequence.ids for sequence in sequences], dtype=np.int64).reshape(-1, length)
        mask = np.array([sequence.mask for sequence in sequences], dtype=bool).reshape(-1, length)
        return ids, mask


class WhitespaceTokenizer(BaseTokenizer):

    @classmethod
    def from_corpus(cls, corpus, max_size):
        return cls(build_vocab(corpus, max_size))

    @classmethod
    def load(cls, path):
        return cls(load_vocab(path))

    def save(self, path):
        save_vocab(self.vocab, path)

    def encode(self, query, length):
        return encode(query, self.vocab, length)

    def decode(self, sequence):
        return decode(sequence, self.vocab)
