# -*- coding: utf-8 -*-
"""
Discrete AdaBoost over decision stumps on the dense feature vector only.

A stump on feature ``j`` with threshold ``theta`` votes ``polarity`` when
``x[j] > theta`` and ``-polarity`` otherwise. Every round searches all
(feature, midpoint threshold, polarity) candidates exhaustively; ties go to
the lowest feature index, then the lowest threshold, then polarity +1.
"""
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .exceptions import ConfigError, DataError, DimensionError


logger = logging.getLogger(__name__)

FORMAT = 'vsi-intent-adaboost/1'
# Upper bound on the error accepted for a weak learner.
MAX_ERROR = 0.5 - 1e-12
# Floor applied to the error of a perfect stump, which caps its weight.
MIN_ERROR = 1e-10


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ConfigError('stump polarity must be +1 or -1, got %r' % (self.polarity,))
        if self.feature < 0:
            raise ConfigError('stump feature index must not be negative')

    def predict(self, features):
        """
        Returns +1/-1 votes for every row of ``features``.
        """
        column = np.asarray(features, dtype=np.float64)[..., self.feature]
        return np.where(column > self.threshold, self.polarity, -self.polarity)


@dataclass
class Ensemble:
    d_features: int
    n_estimators: int
    stumps: List[Tuple[Stump, float]] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.stumps)

    def training_bound(self):
        """
        Product over rounds of 2 sqrt(eps (1 - eps)); an upper bound on the
        training error rate.
        """
        bound = 1.0
        for error in self.errors:
            error = max(error, MIN_ERROR)
            bound *= 2.0 * math.sqrt(error * (1.0 - error))
        return bound

    def scaled(self, factor):
        if factor <= 0:
            raise ConfigError('scale factor must be positive')
        return Ensemble(self.d_features, self.n_estimators,
                        [(stump, alpha * factor) for stump, alpha in self.stumps], list(self.errors))

    def to_dict(self):
        return {
            'format': FORMAT,
            'd_features': self.d_features,
            'n_estimators': self.n_estimators,
            'stumps': [
                {'feature': stump.feature, 'threshold': stump.threshold, 'polarity': stump.polarity, 'alpha': alpha}
                for stump, alpha in self.stumps
            ],
            'errors': list(self.errors),
        }

    @classmethod
    def from_dict(cls, data):
        if data.get('format') != FORMAT:
            raise DataError('unsupported ensemble format %r' % data.get('format'))
        try:
            stumps = [
                (Stump(int(item['feature']), float(item['threshold']), int(item['polarity'])), float(item['alpha']))
                for item in data['stumps']
            ]
            ensemble = cls(int(data['d_features']), int(data['n_estimators']), stumps,
                           [float(error) for error in data.get('errors', [])])
        except (KeyError, TypeError, ValueError) as error:
            raise DataError('malformed ensemble: %s' % error)
        for stump, alpha in ensemble.stumps:
            if stump.feature >= ensemble.d_features or not math.isfinite(alpha):
                raise DataError('ensemble stump %r is inconsistent with d_features=%d' % (
                    stump, ensemble.d_features))
        return ensemble


def _as_signs(labels):
    labels = np.asarray(labels, dtype=np.int64)
    if np.any((labels != 0) & (labels != 1)):
        raise DataError('AdaBoost labels must be 0 or 1')
    return 2 * labels - 1


class _StumpSearch(object):
    """
    Sorted view of the training matrix, computed once and reused every round.
    """

    def __init__(self, features, signs):
        self.order = np.argsort(features, axis=0, kind='stable')
        self.sorted_values = np.take_along_axis(features, self.order, axis=0)
        self.valid = self.sorted_values[:-1] < self.sorted_values[1:]
        if not self.valid.any():
            raise DataError('every feature is constant, no stump threshold exists')
        self.thresholds = (self.sorted_values[:-1] + self.sorted_values[1:]) / 2.0
        self.positive = signs[self.order] > 0

    def best(self, weights):
        sorted_weights = weights[self.order]
        positive_left = np.cumsum(np.where(self.positive, sorted_weights, 0.0), axis=0)[:-1]
        negative_left = np.cumsum(np.where(self.positive, 0.0, sorted_weights), axis=0)[:-1]
        total_positive = np.where(self.positive, sorted_weights, 0.0).sum(axis=0)
        total_negative = np.where(self.positive, 0.0, sorted_weights).sum(axis=0)

        # polarity +1 errs on positives at or below theta and negatives above.
        error_plus = positive_left + (total_negative - negative_left)
        error_minus = negative_left + (total_positive - positive_left)
        errors = np.stack([error_plus, error_minus], axis=-1)
        errors[~self.valid] = np.inf

        # Flattened as (feature, threshold position, polarity) so argmin
        # applies the tie order.
        flat = np.transpose(errors, (1, 0, 2)).reshape(-1)
        best = int(np.argmin(flat))
        feature, rest = divmod(best, errors.shape[0] * 2)
        position, polarity_slot = divmod(rest, 2)
        return Stump(int(feature), float(self.thresholds[position, feature]), 1 if polarity_slot == 0 else -1)


def exponential_loss(ensemble, features, labels):
    """
    (1/m) sum exp(-y F(x)) with y in {-1, +1}.
    """
    signs = _as_signs(labels)
    return float(np.mean(np.exp(-signs * decision_function(ensemble, features))))


def train_adaboost(features, labels, n_estimators):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DimensionError('AdaBoost needs a 2-d feature matrix, got shape %s' % (features.shape,))
    if n_estimators < 1:
        raise ConfigError('n_estimators must be at least 1')
    signs = _as_signs(labels)
    if signs.shape != (features.shape[0],):
        raise DimensionError('%d labels for %d rows' % (signs.size, features.shape[0]))
    if len(set(signs.tolist())) < 2:
        raise DataError('AdaBoost needs examples of both classes')

    count = features.shape[0]
    weights = np.full(count, 1.0 / count)
    search = _StumpSearch(features, signs)
    ensemble = Ensemble(d_features=features.shape[1], n_estimators=n_estimators)

    for round_number in range(1, n_estimators + 1):
        stump = search.best(weights)
        votes = stump.predict(features)
        raw_error = float(weights[votes != signs].sum())
        if raw_error >= MAX_ERROR:
            logger.info('AdaBoost stopped at round %d: weighted error %.6f', round_number, raw_error)
            break
        error = max(raw_error, MIN_ERROR)
        alpha = 0.5 * math.log((1.0 - error) / error)
        ensemble.stumps.append((stump, alpha))
        ensemble.errors.append(raw_error)
        logger.debug('round %d: feature %d, threshold %.6f, polarity %+d, error %.6f, alpha %.6f',
                     round_number, stump.feature, stump.threshold, stump.polarity, raw_error, alpha)
        if raw_error == 0.0:
            break
        weights = weights * np.exp(-alpha * signs * votes)
        weights /= weights.sum()
    return ensemble


def train_on_dataset(dataset, n_estimators):
    return train_adaboost(dataset.feature_matrix(), dataset.labels(), n_estimators)


def decision_function(ensemble, features):
    """
    Margins sum(alpha_n h_n(x)) for one vector or every row of a matrix.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != ensemble.d_features:
        raise DimensionError('features of width %d for an ensemble over %d' % (
            features.shape[-1], ensemble.d_features))
    margin = np.zeros(features.shape[:-1])
    for stump, alpha in ensemble.stumps:
        margin = margin + alpha * stump.predict(features)
    return margin


def predict(ensemble, features):
    """
    Returns ``(classes, margins)``. A positive margin is class 1; zero and
    negative margins are class 0.
    """
    margins = decision_function(ensemble, features)
    classes = (margins > 0).astype(np.int64)
    if np.ndim(margins) == 0:
        return int(classes), float(margins)
    return classes, margins


def save_ensemble(ensemble, path):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(ensemble.to_dict(), indent=2, sort_keys=True) + '\n')


def load_ensemble(path):
    try:
        with io.open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except (IOError, OSError, ValueError) as error:
        raise DataError('cannot read ensemble %s: %s' % (path, error))
    return Ensemble.from_dict(data)
