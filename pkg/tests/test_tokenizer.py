# -*- coding: utf-8 -*-
import os

from django.test import SimpleTestCase, override_settings

from vsi_intent.exceptions import DataError, DimensionError
from vsi_intent.tokenizer import (
    PAD_ID, UNK_ID, Vocab, WhitespaceTokenizer, build_vocab, decode, encode, load_vocab, save_vocab,
)
from vsi_intent.utils import get_tokenizer_class

from .base import TempDirMixin


class VocabTestCase(TempDirMixin, SimpleTestCase):

    def test_frequency_then_lexicographic(self):
        vocab = build_vocab(['b a c', 'a b', 'a d'], 10)
        self.assertEqual(vocab.tokens, ['a', 'b', 'c', 'd'])
        self.assertEqual(vocab.get_id('a'), 2)
        self.assertEqual(len(vocab), 6)

    def test_max_size_truncates(self):
        vocab = build_vocab(['b a c', 'a b', 'a d'], 4)
        self.assertEqual(vocab.tokens, ['a', 'b'])

    def test_unknown_token_maps_to_unk(self):
        vocab = build_vocab(['covid vaccine'], 10)
        self.assertEqual(vocab.get_id('appointment'), UNK_ID)

    def test_duplicate_tokens_rejected(self):
        with self.assertRaises(DataError):
            Vocab(['a', 'a'])

    def test_empty_corpus(self):
        with self.assertRaises(DataError):
            build_vocab([], 10)

    def test_save_load(self):
        vocab = build_vocab(['book covid vaccine', 'covid news'], 10)
        path = os.path.join(self.tmpdir, 'vocab.txt')
        save_vocab(vocab, path)
        self.assertEqual(load_vocab(path), vocab)


class EncodeTestCase(SimpleTestCase):

    def setUp(self):
        self.vocab = build_vocab(['book covid vaccine appointment'], 10)

    def test_padding(self):
        sequence = encode('Book COVID vaccine', self.vocab, 5)
        self.assertEqual(sequence.length, 5)
        self.assertEqual(sequence.mask, (True, True, True, False, False))
        self.assertEqual(sequence.ids[3:], (PAD_ID, PAD_ID))
        self.assertEqual(sequence.original_length, 3)

    def test_truncation(self):
        sequence = encode('book covid vaccine appointment today', self.vocab, 3)
        self.assertEqual(sequence.length, 3)
        self.assertTrue(all(sequence.mask))
        self.assertEqual(sequence.original_length, 5)

    def test_empty_query_is_all_padding(self):
        sequence = encode('', self.vocab, 4)
        self.assertTrue(sequence.is_empty)
        self.assertEqual(sequence.mask, (False,) * 4)

    def test_decode_drops_unknown_words(self):
        sequence = encode('book flu vaccine', self.vocab, 6)
        self.assertEqual(decode(sequence, self.vocab), 'book vaccine')

    def test_length_must_be_positive(self):
        with self.assertRaises(DimensionError):
            encode('book', self.vocab, 0)

    def test_encode_batch(self):
        tokenizer = WhitespaceTokenizer(self.vocab)
        ids, mask = tokenizer.encode_batch(['book', 'covid vaccine'], 3)
        self.assertEqual(ids.shape, (2, 3))
        self.assertEqual(mask.sum(axis=1).tolist(), [1, 2])


class TokenizerClassTestCase(SimpleTestCase):

    def test_default(self):
        self.assertIs(get_tokenizer_class(), WhitespaceTokenizer)

    @override_settings(VSI_INTENT_TOKENIZER_CLASS='tests.base.PoisonOptimizer')
    def test_wrong_base_class(self):
        from django.core.exceptions import ImproperlyConfigured

        with self.assertRaises(ImproperlyConfigured):
            get_tokenizer_class()
