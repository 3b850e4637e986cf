# -*- coding: utf-8 -*-
import json
import logging
import os

import numpy as np

from ...checkpoint import load_checkpoint
from ...exceptions import ConfigError, DataError
from ...features import SparseFeatureVector, densify
from ...utils import format_float, sha256_bytes
from ..base import VsiIntentCommand


logger = logging.getLogger(__name__)


def parse_features(text, d_features):
    """
    Parses inline JSON ``[[index, score], ...]`` pairs.
    """
    try:
        pairs = json.loads(text)
    except ValueError as error:
        raise DataError('--features is not valid JSON: %s' % error)
    if not isinstance(pairs, list) or any(not isinstance(pair, list) or len(pair) != 2 for pair in pairs):
        raise DataError('--features must be a list of [index, score] pairs')
    return SparseFeatureVector.from_pairs(pairs, d_features)


def request_digest(query, features):
    payload = json.dumps({'query': query, 'features': features}, sort_keys=True)
    return sha256_bytes(payload.encode('utf-8'))[:12]


class Command(VsiIntentCommand):
    help = 'Classifies one query with a trained checkpoint.'

    def add_arguments(self, parser):
        parser.add_argument('checkpoint', help='Checkpoint directory.')
        parser.add_argument('--query', required=True)
        parser.add_argument('--features', default=None, help='Sparse dense features as JSON [[index, score], ...].')
        parser.add_argument(
            '--output-dir', dest='output_dir', default=None,
            help='Root for the prediction record (default: the directory holding the checkpoint).')

    def run(self, *args, **options):
        checkpoint_path = os.path.abspath(options['checkpoint'])
        checkpoint = load_checkpoint(checkpoint_path)
        config = checkpoint.config
        query, raw_features, features = options['query'], options['features'], None
        if config.uses_features:
            if raw_features is None:
                raise ConfigError('a %s model needs --features' % config.variant)
            features = densify(parse_features(raw_features, config.d_features)).data[None, :]
        elif raw_features is not None:
            logger.warning('query_only model: ignoring --features')
            self.stderr.write('warning: query_only model ignores --features')
            raw_features = None

        if checkpoint.tokenizer.encode(query, config.seq_len).is_empty:
            logger.warning('empty query: only the dense features can decide')
        ids, mask = checkpoint.tokenizer.encode_batch([query], config.seq_len)
        probabilities = checkpoint.model.predict_proba(ids, mask, features)[0]
        label = int(np.argmax(probabilities))
        self.stdout.write('label=%d probability=%s' % (label, format_float(probabilities[label])))

        run_path = os.path.join('predict', request_digest(query, raw_features))
        directory = os.path.join(options['output_dir'] or os.path.dirname(checkpoint_path), run_path)
        os.makedirs(directory, exist_ok=True)
        self.write_json(os.path.join(directory, 'prediction.json'), {
            'query': query,
            'features': raw_features,
            'label': label,
            'probabilities': [float(value) for value in probabilities],
        })
        self.finish_run(directory, run_path, ['prediction.json'], args=[checkpoint_path],
                        options={'query': query, 'features': raw_features})
