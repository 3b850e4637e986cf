# -*- coding: utf-8 -*-
"""
Checkpoint directories.

A checkpoint holds three files:

``params.json``
    format tag, model config, tokenizer class and an ordered list of
    ``{name, shape, offset}`` entries (byte offsets into params.bin).
``params.bin``
    every tensor as little-endian float64, C order, back to back.
``vocab.txt``
    the tokenizer vocabulary.

Loading a checkpoint and saving it again reproduces identical bytes.
"""
import io
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from . import numeric as nx
from .exceptions import CheckpointError, ConfigError, DimensionError
from .model import ModelConfig, Params, build_model, check_params
from .utils import get_callable


logger = logging.getLogger(__name__)

FORMAT = 'vsi-intent-checkpoint/1'
MANIFEST_NAME = 'params.json'
WEIGHTS_NAME = 'params.bin'
VOCAB_NAME = 'vocab.txt'
WIRE_DTYPE = np.dtype('<f8')


@dataclass
class Checkpoint:
    config: ModelConfig
    params: Params
    tokenizer: object

    @property
    def model(self):
        return build_model(self.config, self.params)


def _class_path(obj):
    klass = type(obj)
    return '%s.%s' % (klass.__module__, klass.__name__)


def save_checkpoint(directory, config, params, tokenizer):
    check_params(config, params)
    os.makedirs(directory, exist_ok=True)

    entries = []
    offset = 0
    with io.open(os.path.join(directory, WEIGHTS_NAME), 'wb') as handle:
        for name, tensor in params.items():
            data = np.ascontiguousarray(tensor.data, dtype=WIRE_DTYPE)
            handle.write(data.tobytes(order='C'))
            entries.append({'name': name, 'shape': list(tensor.shape), 'offset': offset})
            offset += data.nbytes

    manifest = {
        'format': FORMAT,
        'config': config.to_dict(),
        'tokenizer': _class_path(tokenizer),
        'tensors': entries,
    }
    with io.open(os.path.join(directory, MANIFEST_NAME), 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(manifest, indent=2, sort_keys=True))
        handle.write('\n')
    tokenizer.save(os.path.join(directory, VOCAB_NAME))
    logger.debug('saved %d tensors (%d bytes) to %s', len(entries), offset, directory)


def _read_manifest(directory):
    path = os.path.join(directory, MANIFEST_NAME)
    try:
        with io.open(path, 'r', encoding='utf-8') as handle:
            manifest = json.load(handle)
    except (IOError, OSError) as error:
        raise CheckpointError('cannot read %s: %s' % (path, error))
    except ValueError as error:
        raise CheckpointError('%s is not valid JSON: %s' % (path, error))
    if manifest.get('format') != FORMAT:
        raise CheckpointError('%s has unsupported format %r' % (path, manifest.get('format')))
    return manifest


def load_checkpoint(directory):
    manifest = _read_manifest(directory)
    try:
        config = ModelConfig.from_dict(manifest['config'])
    except (KeyError, TypeError, ConfigError) as error:
        raise CheckpointError('bad model config in %s: %s' % (directory, error))

    try:
        with io.open(os.path.join(directory, WEIGHTS_NAME), 'rb') as handle:
            blob = handle.read()
    except (IOError, OSError) as error:
        raise CheckpointError('cannot read weights in %s: %s' % (directory, error))

    params = Params()
    expected_offset = 0
    for entry in manifest.get('tensors', []):
        shape = tuple(entry['shape'])
        count = int(np.prod(shape))
        if entry['offset'] != expected_offset or entry['offset'] + count * WIRE_DTYPE.itemsize > len(blob):
            raise CheckpointError('tensor %s has an inconsistent offset' % entry['name'])
        data = np.frombuffer(blob, dtype=WIRE_DTYPE, count=count, offset=entry['offset']).reshape(shape)
        params[entry['name']] = nx.parameter(data.astype(nx.DTYPE), entry['name'])
        expected_offset += count * WIRE_DTYPE.itemsize
    if expected_offset != len(blob):
        raise CheckpointError('%s has %d trailing bytes' % (WEIGHTS_NAME, len(blob) - expected_offset))
    try:
        check_params(config, params)
    except DimensionError as error:
        raise CheckpointError(str(error))

    try:
        tokenizer_class = get_callable(manifest['tokenizer'])
        tokenizer = tokenizer_class.load(os.path.join(directory, VOCAB_NAME))
    except (KeyError, AttributeError, ImportError, ValueError, IOError, OSError) as error:
        raise CheckpointError('cannot load tokenizer from %s: %s' % (directory, error))
    if tokenizer.vocab_size != config.vocab_size:
        raise CheckpointError('vocab.txt has %d entries, config says %d' % (tokenizer.vocab_size, config.vocab_size))
    return Checkpoint(config=config, params=params, tokenizer=tokenizer)
