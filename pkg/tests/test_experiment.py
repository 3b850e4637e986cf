# -*- coding: utf-8 -*-
import os

from django.test import SimpleTestCase, override_settings

import yaml

from vsi_intent import __version__
from vsi_intent.exceptions import ConfigError, DataError
from vsi_intent.experiment import (
    build_manifest, dump_config, load_config, prepare_data, read_manifest, validate_config, write_manifest,
)
from vsi_intent.forms import AblationForm, GeneratorForm, TrainForm
from vsi_intent.utils import content_hash

from .base import TempDirMixin


class SectionFormTestCase(SimpleTestCase):

    def test_defaults_follow_settings(self):
        self.assertEqual(GeneratorForm.defaults()['d_features'], 512)
        with override_settings(VSI_INTENT_D_FEATURES=64):
            self.assertEqual(GeneratorForm.defaults()['d_features'], 64)

    def test_unknown_keys(self):
        form, unknown = TrainForm.bind({'learning_rate': 0.1, 'momentum': 0.9})
        self.assertEqual(unknown, ['momentum'])
        self.assertTrue(form.is_valid())
        self.assertEqual(form.cleaned_data['learning_rate'], 0.1)

    def test_mixture_must_sum_to_one(self):
        form, _ = GeneratorForm.bind({'text_decidable': 0.9})
        self.assertFalse(form.is_valid())

    def test_list_fields(self):
        form, _ = AblationForm.bind({'n_memory_values': '0, 2, 4', 'adaboost_estimators': []})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['n_memory_values'], [0, 2, 4])
        self.assertEqual(form.cleaned_data['adaboost_estimators'], [])

    def test_list_field_ranges(self):
        form, _ = AblationForm.bind({'n_memory_values': [0, 9], 'sizes': ['huge'], 'depth_variants': ['cnn']})
        self.assertFalse(form.is_valid())
        self.assertEqual(sorted(form.errors), ['depth_variants', 'n_memory_values', 'sizes'])

    def test_optimizer_choices_follow_settings(self):
        form, _ = TrainForm.bind({'optimizer': 'rmsprop'})
        self.assertFalse(form.is_valid())
        with override_settings(VSI_INTENT_OPTIMIZERS={'rmsprop': 'tests.base.PoisonOptimizer'}):
            form, _ = TrainForm.bind({'optimizer': 'rmsprop'})
            self.assertTrue(form.is_valid(), form.errors)


class ConfigTestCase(TempDirMixin, SimpleTestCase):

    def write(self, data, name='config.yaml'):
        path = os.path.join(self.tmpdir, name)
        with open(path, 'w') as handle:
            handle.write(data if isinstance(data, str) else yaml.safe_dump(data))
        return path

    def test_empty_config_uses_defaults(self):
        config = load_config(self.write(''))
        self.assertEqual(config.seeds, [0, 1, 2, 3, 4])
        self.assertEqual(config.model['d_model'], 64)
        self.assertEqual(config.split_fractions, (0.76, 0.04, 0.20))
        self.assertIsNone(config.dataset_path)

    def test_all_errors_reported_together(self):
        path = self.write({
            'model': {'d_model': 10, 'n_heads': 4, 'layers': 2},
            'train': {'batch_size': 0},
            'extras': {},
        })
        with self.assertRaises(ConfigError) as context:
            load_config(path)
        message = str(context.exception)
        for fragment in ('extras: unknown section', 'model.layers: unknown key', 'divisible', 'train.batch_size'):
            self.assertIn(fragment, message)
        self.assertEqual(context.exception.exit_code, 2)

    def test_dataset_relative_to_config(self):
        open(os.path.join(self.tmpdir, 'data.jsonl'), 'w').close()
        config = load_config(self.write({'experiment': {'dataset': 'data.jsonl'}}))
        self.assertEqual(config.dataset_path, os.path.join(os.path.abspath(self.tmpdir), 'data.jsonl'))

    def test_missing_dataset(self):
        with self.assertRaises(ConfigError):
            load_config(self.write({'experiment': {'dataset': 'missing.jsonl'}}))

    def test_bad_yaml(self):
        with self.assertRaises(ConfigError):
            load_config(self.write('model: [unclosed'))
        with self.assertRaises(ConfigError):
            validate_config(['not', 'a', 'mapping'])

    def test_dump_load(self):
        config = validate_config({'model': {'n_memory': 3}, 'train': {'clip_norm': None}})
        path = os.path.join(self.tmpdir, 'dumped.yaml')
        dump_config(config, path)
        self.assertEqual(load_config(path).to_dict(), config.to_dict())
        self.assertIsNone(config.train['clip_norm'])

    def test_typed_configs(self):
        config = validate_config({'model': {'variant': 'late_fusion', 'n_memory': 2}, 'train': {'max_steps': 7}})
        model_config = config.model_config(100, 32)
        self.assertEqual((model_config.variant, model_config.n_memory, model_config.d_features),
                         ('late_fusion', 0, 32))
        self.assertEqual(config.train_config(seed=4).seed, 4)
        self.assertEqual(config.train_config(seed=4).max_steps, 7)
        self.assertEqual(config.generator_config(size=10).size, 10)

    def test_prepare_data(self):
        config = validate_config({
            'generator': {'size': 100, 'd_features': 32},
            'experiment': {'split_fractions': [0.6, 0.2, 0.2], 'vocab_size': 50},
        })
        data = prepare_data(config)
        self.assertEqual(len(data.dataset), 100)
        self.assertEqual((len(data.splits.train), len(data.splits.validation), len(data.splits.test)), (60, 20, 20))
        self.assertLessEqual(data.splits.tokenizer.vocab_size, 50)


class ManifestTestCase(TempDirMixin, SimpleTestCase):

    def test_write_read(self):
        with open(os.path.join(self.tmpdir, 'out.txt'), 'w') as handle:
            handle.write('hello\n')
        manifest = build_manifest('train', 'train/vsi/seed-0', args=['<config>'], options={'seed': 0}, seed=0)
        path = write_manifest(self.tmpdir, manifest, ['out.txt'])
        loaded = read_manifest(path)
        self.assertEqual(loaded['code_version'], __version__)
        self.assertEqual(loaded['code_hash'], content_hash(__version__))
        self.assertEqual(loaded['outputs'],
                         {'out.txt': '5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03'})

    def test_incomplete_manifest(self):
        path = os.path.join(self.tmpdir, 'manifest.json')
        with open(path, 'w') as handle:
            handle.write('{"command": "train"}')
        with self.assertRaises(DataError):
            read_manifest(path)
