# -*- coding: utf-8 -*-
"""
Synthetic vaccine-access query dataset.

Four subpopulations control which modality carries the label:

``text_decidable``
    a decisive phrase in the query; dense features are label independent.
``dense_only``
    "covid vaccine <noun>" queries whose text distribution is the same for
    both labels; only the location-entity feature decides.
``both``
    decisive phrase in the query and decisive dense features.
``noise``
    neutral queries with label-independent, low-score features.
"""
import logging
from dataclasses import asdict, dataclass, field
from itertools import permutations
from typing import Dict

import numpy as np

from .exceptions import DataError
from .features import SUBPOPULATIONS, Dataset, Example, SparseFeatureVector


logger = logging.getLogger(__name__)

N_RESERVED = 16

# Reserved signal indices.
APPOINTMENT = 0
PHARMACY = 1
WALK_IN = 2
VACCINE_APPOINTMENT = 3
BOOK = 4
CLINIC = 5
DOSE = 6
ELIGIBILITY = 7
LOCATION = 8
EFFECTIVENESS = 9
TRAVEL = 10
PROOF = 11
SIDE_EFFECTS = 12
STATISTICS = 13
COVID_VACCINE = 14
COVID = 15

POSITIVE_SIGNALS = (APPOINTMENT, PHARMACY, WALK_IN, VACCINE_APPOINTMENT, BOOK, CLINIC, DOSE, ELIGIBILITY)
NEGATIVE_SIGNALS = (EFFECTIVENESS, TRAVEL, PROOF, SIDE_EFFECTS, STATISTICS)

SIGNAL_PHRASES = {
    'us': (
        'appointment', 'pharmacy', 'walk in', 'vaccine appointment', 'book', 'cvs pharmacy',
        'second dose', 'vaccine eligibility', 'location entity', 'vaccine effectiveness',
        'travel', 'proof of vaccination', 'side effects', 'covid stats', 'covid vaccine', 'covid',
    ),
    'gb': (
        'appointment', 'vaccination centre', 'walk in', 'vaccine appointment', 'book', 'nhs',
        'dose', 'booking', 'location entity', 'vaccine effectiveness',
        'travel', 'proof of vaccination', 'side effects', 'covid stats', 'covid vaccination', 'coronavirus',
    ),
    'ca': (
        'appointment', 'drug mart', 'walk in', 'vaccine appointment', 'booking', 'vaccine clinic',
        'dose', 'registration', 'location entity', 'vaccine effectiveness',
        'travel', 'proof of vaccination', 'side effects', 'covid stats', 'covid vaccine', 'covid',
    ),
}

FILLER_WORDS = (
    'weather', 'news', 'recipe', 'score', 'movie', 'price', 'school', 'traffic', 'music', 'hotel',
    'flight', 'garden', 'election', 'football', 'stock', 'review', 'map', 'jobs', 'games', 'lyrics',
    'tickets', 'holiday', 'car', 'phone', 'bank', 'library', 'museum', 'pizza', 'coffee', 'yoga',
    'camera', 'laptop',
)

ACTIVE_SCORE = (0.3, 1.0)
NOISE_SCORE = (0.0, 0.1)

# Slot fillers shared by the templates below.
SLOTS = {
    'verb': ('book', 'schedule', 'make', 'get'),
    'when': ('today', 'tomorrow', 'this week', 'now', 'saturday'),
    'provider': ('nhs', 'cvs', 'walgreens', 'rexall'),
    'slot': ('appointment', 'slots', 'dates'),
    'finding': ('against delta', 'study', 'data', 'rates'),
    'rules': ('rules', 'requirements', 'restrictions'),
    'form': ('card', 'app', 'certificate'),
    'region': ('country', 'state', 'county'),
    'who': ('in kids', 'after second dose', 'headache'),
    'noun': (
        'jackson', 'lincoln', 'madison', 'franklin', 'clinton', 'washington', 'jefferson', 'hamilton',
        'monroe', 'austin', 'dallas', 'orlando', 'charlotte', 'florence', 'georgia', 'victoria',
        'sydney', 'aurora', 'denver', 'phoenix', 'savannah', 'chester', 'preston', 'camden',
    ),
    'topic': ('news', 'update', 'headlines', 'history'),
}

# Per-locale replacements for the shared slot fillers.
LOCALE_SLOTS = {
    'us': {},
    'gb': {
        'provider': ('nhs', 'boots', 'superdrug', 'gp surgery'),
        'when': ('today', 'tomorrow', 'this week', 'now', 'at the weekend'),
        'slot': ('appointment', 'slots', 'booking'),
        'region': ('country', 'region', 'council'),
        'noun': (
            'lincoln', 'chester', 'preston', 'camden', 'victoria', 'florence', 'york', 'durham',
            'bristol', 'reading', 'bath', 'derby', 'stafford', 'warwick', 'hastings', 'kendal',
        ),
    },
    'ca': {
        'provider': ('shoppers', 'rexall', 'london drugs', 'jean coutu'),
        'region': ('country', 'province', 'region'),
        'noun': (
            'victoria', 'hamilton', 'london', 'kingston', 'windsor', 'regina', 'halifax', 'moncton',
            'guelph', 'barrie', 'sudbury', 'kelowna', 'nanaimo', 'lethbridge', 'aurora', 'brampton',
        ),
    },
}

DECISIVE_TEMPLATES = {
    1: (
        '{verb} covid vaccine appointment',
        'where can i get covid vaccine {when}',
        'walk-in covid vaccine near me',
        '{provider} book covid vaccine',
        'book covid jab {when}',
        'covid vaccine appointment {when}',
        'covid booster {slot} available',
    ),
    0: (
        'covid vaccine effectiveness {finding}',
        'fully vaccinated travel {rules}',
        'proof of covid vaccination {form}',
        'how long does the vaccine last',
        'covid stats by {region}',
        'covid vaccine side effects {who}',
    ),
}

AMBIGUOUS_TEMPLATES = (
    'covid vaccine {noun}',
    '{noun} covid vaccine',
)

NEUTRAL_TEMPLATES = (
    'covid {topic} {when}',
    'vaccine {topic}',
)

# The dense-only templates are the same object for both labels.
TEMPLATES = {
    'text_decidable': DECISIVE_TEMPLATES,
    'both': DECISIVE_TEMPLATES,
    'dense_only': {1: AMBIGUOUS_TEMPLATES, 0: AMBIGUOUS_TEMPLATES},
    'noise': {1: NEUTRAL_TEMPLATES, 0: NEUTRAL_TEMPLATES},
}

DEFAULT_MIXTURE = {'text_decidable': 0.5, 'dense_only': 0.3, 'both': 0.2, 'noise': 0.0}


@dataclass
class GeneratorConfig:
    size: int
    sizes: Dict[str, int]
    positive_rate: float = 0.5
    d_features: int = 512
    noise_features: int = 4
    locale: str = 'us'
    max_resample: int = 100

    @classmethod
    def from_mixture(cls, size, mixture=None, **kwargs):
        """
        Allocates ``size`` examples over subpopulations by ``mixture``
        fractions (largest remainder, ties by subpopulation order).
        """
        mixture = dict(DEFAULT_MIXTURE if mixture is None else mixture)
        unknown = set(mixture) - set(SUBPOPULATIONS)
        if unknown:
            raise DataError('unknown subpopulations in mixture: %s' % ', '.join(sorted(unknown)))
        if any(value < 0 for value in mixture.values()) or abs(sum(mixture.values()) - 1.0) > 1e-9:
            raise DataError('mixture fractions must be non-negative and sum to 1, got %r' % mixture)
        exact = [mixture.get(name, 0.0) * size for name in SUBPOPULATIONS]
        counts = [int(np.floor(value)) for value in exact]
        remainders = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
        for i in remainders[:size - sum(counts)]:
            counts[i] += 1
        return cls(size=size, sizes=dict(zip(SUBPOPULATIONS, counts)), **kwargs)

    def validate(self):
        unknown = set(self.sizes) - set(SUBPOPULATIONS)
        if unknown:
            raise DataError('unknown subpopulations: %s' % ', '.join(sorted(unknown)))
        if any(count < 0 for count in self.sizes.values()):
            raise DataError('subpopulation sizes must be non-negative')
        if sum(self.sizes.values()) != self.size:
            raise DataError('subpopulation sizes %r do not sum to %d' % (self.sizes, self.size))
        if self.d_features <= N_RESERVED:
            raise DataError('d_features=%d leaves no room beyond the %d reserved signal indices' % (
                self.d_features, N_RESERVED))
        if not 0.0 < self.positive_rate < 1.0:
            raise DataError('positive_rate must be in (0, 1), got %r' % self.positive_rate)
        if not 1 <= self.noise_features <= self.d_features - N_RESERVED:
            raise DataError('noise_features must be in [1, %d]' % (self.d_features - N_RESERVED))
        if self.locale not in SIGNAL_PHRASES:
            raise DataError('unknown locale %r (known: %s)' % (self.locale, ', '.join(sorted(SIGNAL_PHRASES))))

    def to_dict(self):
        return asdict(self)


def feature_vocabulary(d_features, locale='us'):
    """
    Phrase per feature index: the locale's reserved signal phrases followed
    by filler phrases.
    """
    fillers = [' '.join(pair) for pair in permutations(FILLER_WORDS, 2)]
    needed = d_features - N_RESERVED
    if needed > len(fillers):
        fillers += ['phrase %d' % index for index in range(len(fillers), needed)]
    return list(SIGNAL_PHRASES[locale]) + fillers[:needed]


def direction_key(vector, digits=9):
    """
    Support and unit-normalised scores of ``vector``; positive multiples of
    one vector share a key.
    """
    norm = float(np.sqrt(sum(score * score for _, score in vector.entries)))
    if norm == 0.0:
        return tuple(index for index, _ in vector.entries)
    return tuple((index, round(score / norm, digits)) for index, score in vector.entries)


def template_inventory(subpopulation, label):
    return TEMPLATES[subpopulation][label]


@dataclass
class _Builder:
    config: GeneratorConfig
    rng: np.random.Generator
    seen: set = field(default_factory=set)

    def score(self, bounds):
        return round(float(self.rng.uniform(*bounds)), 6)

    @property
    def slots(self):
        return dict(SLOTS, **LOCALE_SLOTS[self.config.locale])

    def fill(self, template):
        values = {}
        for name, options in self.slots.items():
            if '{%s}' % name in template:
                values[name] = options[int(self.rng.integers(len(options)))]
        return template.format(**values)

    def query(self, subpopulation, label):
        templates = TEMPLATES[subpopulation][label]
        return self.fill(templates[int(self.rng.integers(len(templates)))])

    def noise(self):
        count = self.config.noise_features
        indices = self.rng.choice(np.arange(N_RESERVED, self.config.d_features), size=count, replace=False)
        return {int(index): self.score(NOISE_SCORE) for index in indices}

    def signals(self, subpopulation, label):
        features = {}
        if subpopulation == 'noise':
            return features
        features[COVID_VACCINE] = self.score(ACTIVE_SCORE)
        if self.rng.random() < 0.5:
            features[COVID] = self.score(ACTIVE_SCORE)
        if subpopulation in ('dense_only', 'both') and label == 1:
            features[LOCATION] = self.score(ACTIVE_SCORE)
        if subpopulation == 'both':
            pool = POSITIVE_SIGNALS if label == 1 else NEGATIVE_SIGNALS
            count = int(self.rng.integers(1, 3))
            for index in self.rng.choice(pool, size=count, replace=False):
                features[int(index)] = self.score(ACTIVE_SCORE)
        return features

    def features(self, subpopulation, label):
        for _ in range(self.config.max_resample):
            pairs = self.noise()
            pairs.update(self.signals(subpopulation, label))
            vector = SparseFeatureVector.from_pairs(pairs.items(), self.config.d_features)
            key = direction_key(vector)
            if subpopulation == 'noise' or key not in self.seen:
                self.seen.add(key)
                return vector
        raise DataError('could not draw a unique feature vector after %d attempts' % self.config.max_resample)


def stratum_for(subpopulation, label):
    if subpopulation == 'noise':
        return 'background'
    if subpopulation == 'dense_only':
        return 'potential_positive'
    return 'high_confidence_positive' if label == 1 else 'close_negative'


def generate_synthetic_dataset(config, seed):
    """
    Returns a Dataset that is byte-identical for identical (config, seed).
    """
    config.validate()
    rng = np.random.default_rng(seed)
    builder = _Builder(config, rng)

    examples = []
    for subpopulation in SUBPOPULATIONS:
        count = config.sizes.get(subpopulation, 0)
        positives = int(round(count * config.positive_rate))
        labels = np.array([1] * positives + [0] * (count - positives))
        rng.shuffle(labels)
        for label in labels:
            label = int(label)
            examples.append(Example(
                query=builder.query(subpopulation, label),
                features=builder.features(subpopulation, label),
                label=label,
                provenance='seeded',
                subpopulation=subpopulation,
                stratum=stratum_for(subpopulation, label),
            ))

    order = rng.permutation(len(examples))
    logger.info('generated %d examples (seed=%s): %s', len(examples), seed, config.sizes)
    return Dataset(
        examples=[examples[index] for index in order],
        d_features=config.d_features,
        feature_vocabulary=feature_vocabulary(config.d_features, config.locale),
        split='all',
        seed=seed,
        generator=config.to_dict(),
    )


def generate_unlabeled_pool(dataset, size, seed, jitter=0.02, far_fraction=0.25, noise_features=4):
    """
    Returns unlabeled examples for label propagation: jittered copies of
    seeded examples (near neighbors) and examples carrying only noise
    features (far from every labeled example).
    """
    rng = np.random.default_rng(seed)
    candidates = [example for example in dataset if example.subpopulation != 'noise']
    if not candidates:
        raise DataError('cannot draw an unlabeled pool from a dataset without signal examples')
    d_features = dataset.d_features

    pool = []
    for _ in range(size):
        if rng.random() < far_fraction:
            count = min(noise_features, d_features - N_RESERVED)
            indices = rng.choice(np.arange(N_RESERVED, d_features), size=count, replace=False)
            pairs = [(int(index), round(float(rng.uniform(*NOISE_SCORE)), 6)) for index in indices]
            source_query = 'vaccine %s' % SLOTS['topic'][int(rng.integers(len(SLOTS['topic'])))]
            subpopulation = 'noise'
        else:
            source = candidates[int(rng.integers(len(candidates)))]
            pairs = []
            for index, score in source.features.entries:
                factor = 1.0 + float(rng.uniform(-jitter, jitter))
                pairs.append((index, round(min(1.0, max(0.0, score * factor)), 6)))
            source_query = source.query
            subpopulation = source.subpopulation
        pool.append(Example(
            query=source_query,
            features=SparseFeatureVector.from_pairs(pairs, d_features),
            label=None,
            provenance='synthetic',
            subpopulation=subpopulation,
            stratum='background',
        ))
    return pool
