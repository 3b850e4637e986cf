# -*- coding: utf-8 -*-
"""
Experiment configs, data preparation and run manifests.

A config file is YAML with up to five sections (generator, model, train,
experiment, ablation); see ``docs/reference/config.rst``. Runs write into a
seed-keyed directory under the output root and leave a ``manifest.json``
that is enough to rerun them.
"""
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass

import yaml

from . import __version__
from .ablation import Splits
from .exceptions import ConfigError, DataError
from .features import read_dataset, split
from .forms import SECTION_FORMS
from .model import ModelConfig
from .synthetic import GeneratorConfig, generate_synthetic_dataset
from .training import TrainConfig
from .utils import content_hash, get_tokenizer_class, sha256_file


logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
# Stands in for the config file path in recorded command arguments.
CONFIG_ARG = '<config>'
MIXTURE_FIELDS = ('text_decidable', 'dense_only', 'both', 'noise')


@dataclass
class ExperimentConfig:
    generator: dict
    model: dict
    train: dict
    experiment: dict
    ablation: dict

    def to_dict(self):
        return {name: dict(getattr(self, name)) for name in SECTION_FORMS}

    @property
    def seeds(self):
        return list(self.experiment['seeds'])

    @property
    def output_dir(self):
        return self.experiment['output_dir']

    @property
    def dataset_path(self):
        return self.experiment.get('dataset') or None

    @property
    def split_fractions(self):
        return tuple(self.experiment['split_fractions'])

    @property
    def data_seed(self):
        return self.generator['seed']

    def generator_config(self, size=None):
        mixture = {name: self.generator[name] for name in MIXTURE_FIELDS}
        return GeneratorConfig.from_mixture(
            size or self.generator['size'],
            mixture,
            positive_rate=self.generator['positive_rate'],
            d_features=self.generator['d_features'],
            noise_features=self.generator['noise_features'],
            locale=self.generator['locale'],
        )

    def model_config(self, vocab_size, d_features, **overrides):
        values = dict(self.model)
        values.update(overrides)
        try:
            return ModelConfig(vocab_size=vocab_size, d_features=d_features, **values)
        except TypeError as error:
            raise ConfigError('bad model section: %s' % error)

    def train_config(self, seed, **overrides):
        values = dict(self.train)
        values.update(overrides)
        return TrainConfig(seed=seed, **values)


def _form_errors(section, form, unknown):
    messages = ['%s.%s: unknown key' % (section, key) for key in unknown]
    if not form.is_valid():
        for field_name, errors in sorted(form.errors.items()):
            label = section if field_name == '__all__' else '%s.%s' % (section, field_name)
            messages.extend('%s: %s' % (label, error) for error in errors)
    return messages


def validate_config(raw, base_dir=None):
    """
    Validates a parsed config mapping. Every problem is collected into one
    ConfigError.
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError('config must be a mapping of sections, got %s' % type(raw).__name__)
    messages = ['%s: unknown section' % name for name in sorted(set(raw) - set(SECTION_FORMS))]

    sections = {}
    for name, form_class in SECTION_FORMS.items():
        data = raw.get(name) or {}
        if not isinstance(data, dict):
            messages.append('%s: section must be a mapping' % name)
            continue
        form, unknown = form_class.bind(data)
        errors = _form_errors(name, form, unknown)
        messages.extend(errors)
        if not errors:
            sections[name] = dict(form.cleaned_data)

    experiment = sections.get('experiment')
    if experiment and experiment.get('dataset'):
        path = experiment['dataset']
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        path = os.path.abspath(path)
        if not os.path.exists(path):
            messages.append('experiment.dataset: %s does not exist' % path)
        experiment['dataset'] = path

    if messages:
        raise ConfigError('invalid config:\n  ' + '\n  '.join(messages))
    return ExperimentConfig(**sections)


def load_config(path=None):
    if path is None:
        return validate_config({})
    try:
        with io.open(path, 'r', encoding='utf-8') as handle:
            raw = yaml.safe_load(handle)
    except (IOError, OSError) as error:
        raise ConfigError('cannot read config %s: %s' % (path, error))
    except yaml.YAMLError as error:
        raise ConfigError('config %s is not valid YAML: %s' % (path, error))
    return validate_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def dump_config(config, path):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
        yaml.safe_dump(config.to_dict(), handle, default_flow_style=False, sort_keys=True)


@dataclass
class PreparedData:
    dataset: object
    splits: Splits


def prepare_data(config):
    """
    Loads or generates the dataset, splits it and builds the tokenizer from
    the training queries.
    """
    if config.dataset_path:
        dataset = read_dataset(config.dataset_path)
    else:
        dataset = generate_synthetic_dataset(config.generator_config(), config.data_seed)
    train_set, validation_set, test_set = split(dataset, config.split_fractions, config.data_seed)
    tokenizer = get_tokenizer_class().from_corpus(train_set.queries, config.experiment['vocab_size'])
    logger.info('prepared %d/%d/%d examples, vocabulary of %d',
                len(train_set), len(validation_set), len(test_set), tokenizer.vocab_size)
    return PreparedData(dataset=dataset, splits=Splits(train_set, validation_set, test_set, tokenizer))


def seed_directory(seed):
    return 'seed-%d' % seed


def run_directory(root, *parts):
    path = os.path.join(root, *parts)
    os.makedirs(path, exist_ok=True)
    return path


def build_manifest(command, run_path, args=(), options=None, config=None, seed=None, dataset_hash=None):
    return {
        'command': command,
        'run_path': run_path,
        'args': list(args),
        'options': dict(options or {}),
        'config': config.to_dict() if config is not None else None,
        'seed': seed,
        'dataset_sha256': dataset_hash,
        'code_version': __version__,
        'code_hash': content_hash(__version__),
    }


def write_manifest(directory, manifest, outputs):
    """
    Records the sha256 of every file in ``outputs`` (paths relative to
    ``directory``) and writes the manifest next to them.
    """
    manifest = dict(manifest)
    manifest['outputs'] = {name: sha256_file(os.path.join(directory, name)) for name in sorted(outputs)}
    path = os.path.join(directory, MANIFEST_NAME)
    with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
    return path


def read_manifest(path):
    try:
        with io.open(path, 'r', encoding='utf-8') as handle:
            manifest = json.load(handle)
    except (IOError, OSError, ValueError) as error:
        raise DataError('cannot read manifest %s: %s' % (path, error))
    for key in ('command', 'run_path', 'args', 'options', 'outputs'):
        if key not in manifest:
            raise DataError('manifest %s has no %r entry' % (path, key))
    return manifest


def replay(path, stdout=None, stderr=None):
    """
    Reruns the command recorded in a manifest into a scratch directory and
    returns the names of outputs whose hashes differ.
    """
    from django.core.management import call_command

    manifest = read_manifest(path)
    with tempfile.TemporaryDirectory() as scratch:
        config_path = os.path.join(scratch, 'config.yaml')
        if manifest.get('config') is not None:
            with io.open(config_path, 'w', encoding='utf-8', newline='\n') as handle:
                yaml.safe_dump(manifest['config'], handle, default_flow_style=False, sort_keys=True)
        args = [config_path if arg == CONFIG_ARG else arg for arg in manifest['args']]
        output_dir = os.path.join(scratch, 'out')
        options = dict(manifest['options'])
        options['output_dir'] = output_dir
        kwargs = {'stdout': stdout, 'stderr': stderr} if stdout is not None else {}
        call_command(manifest['command'], *args, **dict(options, **kwargs))
        rerun = read_manifest(os.path.join(output_dir, manifest['run_path'], MANIFEST_NAME))

    expected, actual = manifest['outputs'], rerun['outputs']
    return sorted(name for name in set(expected) | set(actual) if expected.get(name) != actual.get(name))
