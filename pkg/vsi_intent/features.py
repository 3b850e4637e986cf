# -*- coding: utf-8 -*-
"""
Dense feature vectors, labeled query examples and the datasets built from
them: JSON Lines persistence, stratified splitting and label propagation.
"""
import io
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from sklearn.model_selection import train_test_split

from .exceptions import ConfigError, DataError
from .numeric import DTYPE, Tensor
from .signals import example_dropped
from .utils import sha256_bytes


logger = logging.getLogger(__name__)

PROVENANCES = ('seeded', 'propagated', 'synthetic')
SUBPOPULATIONS = ('text_decidable', 'dense_only', 'both', 'noise')
STRATA = ('high_confidence_positive', 'potential_positive', 'close_negative', 'background')
SPLITS = ('train', 'validation', 'test')

# Similarity slack so that identical vectors reach tau = 1.0.
SIMILARITY_SLACK = 1e-12


@dataclass(frozen=True)
class SparseFeatureVector:
    """
    X_f as (index, score) pairs with strictly increasing indices.
    """
    entries: Tuple[Tuple[int, float], ...]
    d_features: int

    def __post_init__(self):
        if self.d_features < 1:
            raise DataError('d_features must be positive')
        previous = -1
        for index, score in self.entries:
            if index <= previous:
                raise DataError('feature indices must be strictly increasing, got %d after %d' % (index, previous))
            if index >= self.d_features:
                raise DataError('feature index %d outside [0, %d)' % (index, self.d_features))
            if not 0.0 <= score <= 1.0:
                raise DataError('feature score %r outside [0, 1]' % score)
            previous = index

    @classmethod
    def from_pairs(cls, pairs, d_features):
        """
        Canonicalizes arbitrary (index, score) pairs by sorting on index.
        """
        entries = tuple(sorted((int(index), float(score)) for index, score in pairs))
        return cls(entries, d_features)

    @property
    def indices(self):
        return tuple(index for index, _ in self.entries)

    def get(self, index, default=0.0):
        for position, score in self.entries:
            if position == index:
                return score
        return default

    def to_list(self):
        return [[index, score] for index, score in self.entries]


def densify(sparse):
    dense = np.zeros(sparse.d_features, dtype=DTYPE)
    for index, score in sparse.entries:
        if index >= sparse.d_features:
            raise DataError('feature index %d outside [0, %d)' % (index, sparse.d_features))
        dense[index] = score
    return Tensor(dense)


def densify_many(vectors, d_features):
    matrix = np.zeros((len(vectors), d_features), dtype=DTYPE)
    for row, sparse in enumerate(vectors):
        if sparse.d_features != d_features:
            raise DataError('feature width %d does not match %d' % (sparse.d_features, d_features))
        for index, score in sparse.entries:
            matrix[row, index] = score
    return matrix


@dataclass(frozen=True)
class Example:
    query: str
    features: SparseFeatureVector
    label: Optional[int]
    provenance: str = 'seeded'
    subpopulation: str = 'text_decidable'
    stratum: str = 'background'

    def __post_init__(self):
        if self.label not in (None, 0, 1):
            raise DataError('label must be 0 or 1, got %r' % (self.label,))
        if self.provenance not in PROVENANCES:
            raise DataError('unknown provenance %r' % self.provenance)
        if self.subpopulation not in SUBPOPULATIONS:
            raise DataError('unknown subpopulation %r' % self.subpopulation)
        if self.stratum not in STRATA:
            raise DataError('unknown stratum %r' % self.stratum)

    @property
    def key(self):
        return (self.query, self.features.entries)

    def to_record(self):
        return {
            'query': self.query,
            'features': self.features.to_list(),
            'label': self.label,
            'provenance': self.provenance,
            'subpop': self.subpopulation,
            'stratum': self.stratum,
        }

    @classmethod
    def from_record(cls, record, d_features):
        try:
            return cls(
                query=record['query'],
                features=SparseFeatureVector.from_pairs(record['features'], d_features),
                label=record.get('label'),
                provenance=record.get('provenance', 'seeded'),
                subpopulation=record.get('subpop', 'text_decidable'),
                stratum=record.get('stratum', 'background'),
            )
        except (KeyError, TypeError, ValueError) as error:
            raise DataError('malformed example record: %s' % error)


@dataclass
class Dataset:
    examples: list
    d_features: int
    feature_vocabulary: list = field(default_factory=list)
    split: str = 'all'
    seed: Optional[int] = None
    generator: dict = field(default_factory=dict)

    def __post_init__(self):
        for example in self.examples:
            if example.features.d_features != self.d_features:
                raise DataError('example %r has d_features=%d, dataset has %d' % (
                    example.query, example.features.d_features, self.d_features))

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, index):
        return self.examples[index]

    @property
    def queries(self):
        return [example.query for example in self.examples]

    @property
    def subpopulations(self):
        return [example.subpopulation for example in self.examples]

    def labels(self):
        if any(example.label is None for example in self.examples):
            raise DataError('dataset %r contains unlabeled examples' % self.split)
        return np.array([example.label for example in self.examples], dtype=np.int64)

    def feature_matrix(self):
        return densify_many([example.features for example in self.examples], self.d_features)

    def positive_rate(self):
        labels = self.labels()
        return float(labels.mean()) if labels.size else 0.0

    def subset(self, indices, split=None):
        return replace(self, examples=[self.examples[index] for index in indices], split=split or self.split)

    def with_examples(self, examples, split=None):
        return replace(self, examples=list(examples), split=split or self.split)

    def subpopulation_counts(self):
        counts = {name: 0 for name in SUBPOPULATIONS}
        for example in self.examples:
            counts[example.subpopulation] += 1
        return counts

    def header(self):
        return {
            'd_features': self.d_features,
            'seed': self.seed,
            'split': self.split,
            'generator': self.generator,
            'feature_vocabulary': self.feature_vocabulary,
        }

    def to_jsonl(self):
        return ''.join(json.dumps(example.to_record()) + '\n' for example in self.examples)

    def content_hash(self):
        return sha256_bytes(self.to_jsonl().encode('utf-8'))


def header_path(path):
    root, _ = os.path.splitext(path)
    return root + '.header.json'


def write_dataset(dataset, path):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dataset.to_jsonl())
    with io.open(header_path(path), 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(dataset.header(), indent=2, sort_keys=True) + '\n')


def read_dataset(path):
    try:
        with io.open(header_path(path), 'r', encoding='utf-8') as handle:
            header = json.load(handle)
        with io.open(path, 'r', encoding='utf-8') as handle:
            lines = [line for line in handle if line.strip()]
    except (IOError, OSError) as error:
        raise DataError('cannot read dataset %s: %s' % (path, error))
    except ValueError as error:
        raise DataError('malformed dataset header for %s: %s' % (path, error))

    d_features = header.get('d_features')
    if not isinstance(d_features, int):
        raise DataError('dataset header for %s has no d_features' % path)
    examples = []
    for number, line in enumerate(lines, start=1):
        try:
            record = json.loads(line)
        except ValueError as error:
            raise DataError('%s line %d: %s' % (path, number, error))
        examples.append(Example.from_record(record, d_features))
    return Dataset(
        examples=examples,
        d_features=d_features,
        feature_vocabulary=header.get('feature_vocabulary') or [],
        split=header.get('split', 'all'),
        seed=header.get('seed'),
        generator=header.get('generator') or {},
    )


def _unit_rows(matrix):
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return matrix / safe[:, None], norms > 0


def cosine_matrix(left, right):
    """
    Pairwise cosine similarity of the rows of two dense matrices. Pairs
    involving a zero row get -inf.
    """
    left_unit, left_ok = _unit_rows(left)
    right_unit, right_ok = _unit_rows(right)
    similarity = left_unit @ right_unit.T
    similarity[~left_ok, :] = -np.inf
    similarity[:, ~right_ok] = -np.inf
    return similarity


def propagate_labels(labeled, unlabeled, tau):
    """
    Adopts, for every unlabeled example, the label of its most similar
    labeled example when that cosine similarity is at least ``tau``.

    Only seeded (non-propagated) examples act as neighbors, so propagation is
    single hop. Unlabeled examples already present in ``labeled`` are
    skipped; with both rules a second run over the same pool adds nothing.
    """
    if not 0.0 < tau <= 1.0:
        raise ConfigError('propagation threshold must be in (0, 1], got %r' % tau)
    if not len(labeled):
        raise DataError('label propagation needs at least one labeled example')

    anchors = [index for index, example in enumerate(labeled.examples)
               if example.provenance != 'propagated' and example.label is not None]
    if not anchors:
        raise DataError('label propagation needs at least one seeded labeled example')
    anchor_matrix = densify_many([labeled[index].features for index in anchors], labeled.d_features)

    known = set(example.key for example in labeled.examples)
    pending = [example for example in unlabeled if example.key not in known]
    if not pending:
        return labeled.with_examples(labeled.examples)
    similarity = cosine_matrix(densify_many([example.features for example in pending], labeled.d_features),
                               anchor_matrix)

    adopted = []
    for row, example in enumerate(pending):
        if not example.features.entries or not np.any(densify(example.features).data):
            _drop(example, 'zero feature vector, similarity undefined')
            continue
        best = int(np.argmax(similarity[row]))
        score = similarity[row, best]
        if score < tau - SIMILARITY_SLACK:
            _drop(example, 'max similarity %.6f below tau %.6f' % (score, tau))
            continue
        neighbor = labeled[anchors[best]]
        adopted.append(replace(example, label=neighbor.label, provenance='propagated'))

    logger.info('label propagation adopted %d of %d examples (tau=%s)', len(adopted), len(pending), tau)
    return labeled.with_examples(labeled.examples + adopted)


def _drop(example, reason):
    example_dropped.send(sender=Example, example=example, reason=reason)


def split(dataset, fractions, seed):
    """
    Shuffles with ``seed`` and partitions into (train, validation, test),
    stratified on the label.
    """
    fractions = tuple(float(fraction) for fraction in fractions)
    if len(fractions) != 3 or any(fraction <= 0 for fraction in fractions):
        raise ConfigError('split needs three positive fractions, got %r' % (fractions,))
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError('split fractions must sum to 1, got %r' % (fractions,))

    labels = dataset.labels()
    total = len(labels)
    n_train = int(round(fractions[0] * total))
    n_validation = int(round(fractions[1] * total))
    n_test = total - n_train - n_validation
    if min(n_train, n_validation, n_test) < 1:
        raise DataError('dataset of %d examples is too small to split as %r' % (total, fractions))

    indices = np.arange(total)
    try:
        train_idx, rest_idx = train_test_split(
            indices, train_size=n_train, stratify=labels, random_state=seed)
        validation_idx, test_idx = train_test_split(
            rest_idx, train_size=n_validation, stratify=labels[rest_idx], random_state=seed)
    except ValueError as error:
        raise DataError('split too small to stratify: %s' % error)

    return (
        dataset.subset(train_idx, split='train'),
        dataset.subset(validation_idx, split='validation'),
        dataset.subset(test_idx, split='test'),
    )


def find_feature_duplicates(train, test, subpopulations=('text_decidable', 'dense_only', 'both')):
    """
    Returns (test index, train index) pairs whose feature vectors have cosine
    similarity 1, restricted to ``subpopulations``.
    """
    train_rows = [index for index, example in enumerate(train) if example.subpopulation in subpopulations]
    test_rows = [index for index, example in enumerate(test) if example.subpopulation in subpopulations]
    if not train_rows or not test_rows:
        return []
    similarity = cosine_matrix(
        densify_many([test[index].features for index in test_rows], test.d_features),
        densify_many([train[index].features for index in train_rows], train.d_features),
    )
    pairs = np.argwhere(similarity >= 1.0 - SIMILARITY_SLACK)
    return [(test_rows[i], train_rows[j]) for i, j in pairs]
