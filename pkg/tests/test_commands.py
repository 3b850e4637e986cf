# -*- coding: utf-8 -*-
import io
import json
import os
import shutil
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

import yaml

from vsi_intent.checkpoint import save_checkpoint
from vsi_intent.features import write_dataset
from vsi_intent.training import TrainConfig, train

from .base import tiny_config, toy_dataset, toy_tokenizer


SMALL_CONFIG = {
    'generator': {'size': 200, 'd_features': 32, 'seed': 0},
    'model': {'d_model': 16, 'n_layers': 1, 'n_heads': 2, 'd_ff': 32, 'seq_len': 8},
    'train': {'learning_rate': 0.01, 'batch_size': 16, 'max_steps': 20, 'eval_interval': 10},
    'experiment': {'seeds': [0], 'split_fractions': [0.6, 0.2, 0.2], 'vocab_size': 200},
    'ablation': {'n_memory_values': [0, 1], 'adaboost_estimators': [5]},
}


def run(name, *args, **options):
    stdout, stderr = io.StringIO(), io.StringIO()
    call_command(name, *args, stdout=stdout, stderr=stderr, **options)
    return stdout.getvalue(), stderr.getvalue()


def read(*parts):
    with open(os.path.join(*parts), 'rb') as handle:
        return handle.read()


class CommandTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmpdir = tempfile.mkdtemp(prefix='vsi-intent-commands-')
        cls.output_dir = os.path.join(cls.tmpdir, 'runs')
        cls.config_path = cls.write_config(SMALL_CONFIG)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmpdir, ignore_errors=True)
        super().tearDownClass()

    @classmethod
    def write_config(cls, data, name='config.yaml'):
        data = dict(data, experiment=dict(data.get('experiment', {}), output_dir=cls.output_dir))
        path = os.path.join(cls.tmpdir, name)
        with open(path, 'w') as handle:
            yaml.safe_dump(data, handle)
        return path

    def trained(self, variant):
        directory = os.path.join(self.output_dir, 'train', variant, 'seed-0')
        if not os.path.exists(os.path.join(directory, 'manifest.json')):
            run('train', self.config_path, variant=variant)
        return directory

    def generated(self):
        directory = os.path.join(self.tmpdir, 'data')
        if not os.path.exists(os.path.join(directory, 'manifest.json')):
            run('gen_data', self.config_path, output_dir=directory)
        return directory


class GenDataTestCase(CommandTestCase):

    def test_output_is_byte_identical(self):
        first = os.path.join(self.tmpdir, 'gen-a')
        second = os.path.join(self.tmpdir, 'gen-b')
        stdout, _ = run('gen_data', self.config_path, output_dir=first)
        run('gen_data', self.config_path, output_dir=second)
        self.assertIn('dense_only', stdout)
        for name in ('dataset.jsonl', 'train.jsonl', 'validation.jsonl', 'test.jsonl', 'dataset.header.json',
                     'manifest.json'):
            self.assertEqual(read(first, name), read(second, name), name)

    def test_size_option(self):
        directory = os.path.join(self.tmpdir, 'gen-size')
        run('gen_data', self.config_path, size=1000, output_dir=directory)
        self.assertEqual(read(directory, 'dataset.jsonl').count(b'\n'), 1000)

    def test_seed_changes_data(self):
        first = os.path.join(self.tmpdir, 'gen-seed-1')
        second = os.path.join(self.tmpdir, 'gen-seed-2')
        run('gen_data', self.config_path, seed=1, output_dir=first)
        run('gen_data', self.config_path, seed=2, output_dir=second)
        self.assertNotEqual(read(first, 'dataset.jsonl'), read(second, 'dataset.jsonl'))

    def test_invalid_config_writes_nothing(self):
        path = self.write_config(dict(SMALL_CONFIG, model={'d_model': 10, 'n_heads': 4}), name='invalid.yaml')
        directory = os.path.join(self.tmpdir, 'gen-invalid')
        with self.assertRaises(CommandError) as context:
            run('gen_data', path, output_dir=directory)
        self.assertEqual(context.exception.returncode, 2)
        self.assertIn('divisible', str(context.exception))
        self.assertFalse(os.path.exists(directory))

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as context:
            run('gen_data', os.path.join(self.tmpdir, 'missing.yaml'))
        self.assertEqual(context.exception.returncode, 2)


class TrainEvalPredictTestCase(CommandTestCase):

    def test_train_outputs(self):
        directory = self.trained('vsi')
        for name in ('train_log.csv', 'metrics.json', 'checkpoint/params.json', 'checkpoint/params.bin',
                     'checkpoint/vocab.txt'):
            self.assertTrue(os.path.exists(os.path.join(directory, name)), name)
        self.assertTrue(read(directory, 'train_log.csv').startswith(b'step,train_loss,val_f1,val_precision\n'))
        metrics = json.loads(read(directory, 'metrics.json'))
        self.assertIn(metrics['best_step'], (10, 20))
        manifest = json.loads(read(directory, 'manifest.json'))
        self.assertEqual(manifest['command'], 'train')
        self.assertEqual(manifest['args'], ['<config>'])
        self.assertEqual(manifest['options'], {'variant': 'vsi', 'seed': 0})
        self.assertEqual(sorted(manifest['outputs']), [
            'checkpoint/params.bin', 'checkpoint/params.json', 'checkpoint/vocab.txt', 'metrics.json',
            'train_log.csv'])

    def test_eval(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        dataset = os.path.join(self.generated(), 'test.jsonl')
        directory = os.path.join(self.tmpdir, 'eval-out')
        stdout, _ = run('eval', checkpoint, dataset, as_json=True, output_dir=directory)
        self.assertIn('overall', stdout)
        self.assertIn('"by_subpopulation"', stdout)
        metrics = json.loads(read(directory, 'eval', 'test', 'metrics.json'))
        self.assertEqual(metrics['tp'] + metrics['fp'] + metrics['fn'] + metrics['tn'], 40)
        manifest = json.loads(read(directory, 'eval', 'test', 'manifest.json'))
        self.assertEqual(manifest['args'], [checkpoint, dataset])
        self.assertEqual(sorted(manifest['outputs']), ['metrics.json'])

    def test_eval_records_next_to_the_checkpoint(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        dataset = os.path.join(self.generated(), 'validation.jsonl')
        stdout, _ = run('eval', checkpoint, dataset)
        manifest = os.path.join(self.trained('vsi'), 'eval', 'validation', 'manifest.json')
        self.assertEqual(stdout.strip().splitlines()[-1], 'manifest: %s' % manifest)
        self.assertIn('replay matches', run('replay', manifest)[0])

    def test_eval_missing_checkpoint(self):
        with self.assertRaises(CommandError) as context:
            run('eval', os.path.join(self.tmpdir, 'nowhere'), os.path.join(self.generated(), 'test.jsonl'))
        self.assertEqual(context.exception.returncode, 3)

    def test_predict(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        stdout, _ = run('predict', checkpoint, query='book covid vaccine appointment',
                        features='[[8, 0.9], [14, 0.7]]')
        self.assertRegex(stdout.splitlines()[0], r'^label=[01] probability=\d\.\d{6}$')

    def test_predict_record_replays(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        stdout, _ = run('predict', checkpoint, query='covid vaccine austin', features='[[8, 0.9]]')
        manifest = stdout.strip().splitlines()[-1][len('manifest: '):]
        self.assertEqual(os.path.dirname(os.path.dirname(os.path.dirname(manifest))), self.trained('vsi'))
        prediction = json.loads(read(os.path.dirname(manifest), 'prediction.json'))
        self.assertEqual(prediction['query'], 'covid vaccine austin')
        self.assertEqual(stdout.splitlines()[0].split()[0], 'label=%d' % prediction['label'])
        self.assertIn('replay matches', run('replay', manifest)[0])

    def test_predict_rejects_empty_query_without_memory(self):
        checkpoint = os.path.join(self.trained('query_only'), 'checkpoint')
        with self.assertRaises(CommandError) as context:
            run('predict', checkpoint, query='')
        self.assertEqual(context.exception.returncode, 3)
        self.assertIn('empty query', str(context.exception))

    def test_predict_needs_features(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        with self.assertRaises(CommandError) as context:
            run('predict', checkpoint, query='covid vaccine austin')
        self.assertEqual(context.exception.returncode, 2)

    def test_predict_rejects_bad_features(self):
        checkpoint = os.path.join(self.trained('vsi'), 'checkpoint')
        with self.assertRaises(CommandError) as context:
            run('predict', checkpoint, query='covid vaccine austin', features='[[40, 0.5]]')
        self.assertEqual(context.exception.returncode, 3)

    def test_query_only_ignores_features(self):
        checkpoint = os.path.join(self.trained('query_only'), 'checkpoint')
        stdout, stderr = run('predict', checkpoint, query='covid vaccine austin', features='[[8, 0.9]]')
        self.assertIn('ignores --features', stderr)
        plain, _ = run('predict', checkpoint, query='covid vaccine austin')
        self.assertEqual(stdout, plain)


class ReplayTestCase(CommandTestCase):

    def test_gen_data_replay(self):
        stdout, _ = run('replay', os.path.join(self.generated(), 'manifest.json'))
        self.assertIn('replay matches', stdout)

    def test_train_replay(self):
        stdout, _ = run('replay', os.path.join(self.trained('query_only'), 'manifest.json'))
        self.assertIn('replay matches', stdout)

    def test_tampered_manifest(self):
        manifest = json.loads(read(self.generated(), 'manifest.json'))
        manifest['outputs']['test.jsonl'] = '0' * 64
        path = os.path.join(self.tmpdir, 'tampered.json')
        with open(path, 'w') as handle:
            json.dump(manifest, handle)
        with self.assertRaises(CommandError) as context:
            run('replay', path)
        self.assertEqual(context.exception.returncode, 3)
        self.assertIn('test.jsonl', str(context.exception))


class BaselineCommandTestCase(CommandTestCase):

    def test_boost(self):
        stdout, _ = run('boost', self.config_path, estimators=5)
        directory = os.path.join(self.output_dir, 'boost', 'adaboost-5')
        ensemble = json.loads(read(directory, 'ensemble.json'))
        self.assertLessEqual(len(ensemble['stumps']), 5)
        self.assertIn('AdaBoost', stdout)

    def test_propagate(self):
        dataset = os.path.join(self.generated(), 'train.jsonl')
        directory = os.path.join(self.tmpdir, 'propagated')
        stdout, _ = run('propagate', dataset, pool_size=20, tau=0.9, output_dir=directory)
        self.assertIn('adopted', stdout)
        lines = read(directory, 'propagated.jsonl').count(b'\n')
        self.assertGreaterEqual(lines, 120)
        self.assertLessEqual(lines, 140)
        self.assertIn('replay matches', run('replay', os.path.join(directory, 'manifest.json'))[0])

    def test_propagate_threshold_from_config(self):
        dataset = os.path.join(self.generated(), 'train.jsonl')
        path = self.write_config(dict(SMALL_CONFIG, experiment=dict(SMALL_CONFIG['experiment'], tau=0.5)),
                                 name='tau.yaml')
        directory = os.path.join(self.tmpdir, 'propagated-config')
        stdout, _ = run('propagate', dataset, pool_size=20, config=path, output_dir=directory)
        self.assertIn('tau=0.5', stdout)
        self.assertEqual(json.loads(read(directory, 'manifest.json'))['options']['tau'], 0.5)
        plain = os.path.join(self.tmpdir, 'propagated-default')
        run('propagate', dataset, pool_size=20, output_dir=plain)
        self.assertEqual(json.loads(read(plain, 'manifest.json'))['options']['tau'], 0.95)
        explicit = os.path.join(self.tmpdir, 'propagated-explicit')
        run('propagate', dataset, pool_size=20, config=path, tau=0.8, output_dir=explicit)
        self.assertEqual(json.loads(read(explicit, 'manifest.json'))['options']['tau'], 0.8)

    def test_propagate_needs_one_pool(self):
        dataset = os.path.join(self.generated(), 'train.jsonl')
        with self.assertRaises(CommandError) as context:
            run('propagate', dataset)
        self.assertEqual(context.exception.returncode, 2)

    def test_ablate_memory(self):
        directory = os.path.join(self.tmpdir, 'ablate-out')
        stdout, _ = run('ablate', 'memory', self.config_path, output_dir=directory)
        self.assertIn('median-of-1-seeds', stdout)
        rows = read(directory, 'ablate', 'memory', 'rows.csv').decode('utf-8').splitlines()
        self.assertEqual(len(rows), 3)
        self.assertTrue(rows[0].startswith('n_memory,variant,seed,f1,precision'))
        self.assertTrue(os.path.exists(os.path.join(directory, 'ablate', 'memory', 'summary.csv')))


class FittedCheckpointTestCase(SimpleTestCase):
    """
    A vsi checkpoint trained to fit the toy set, saved the way the train
    command saves it.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmpdir = tempfile.mkdtemp(prefix='vsi-intent-fitted-')
        dataset = toy_dataset()
        tokenizer = toy_tokenizer(dataset)
        config = tiny_config('vsi', vocab_size=tokenizer.vocab_size, d_model=16, d_ff=32, seq_len=6)
        train_config = TrainConfig(learning_rate=1e-2, batch_size=20, max_steps=500, eval_interval=100, seed=0)
        cls.result = train(config, train_config, dataset, dataset, tokenizer)
        cls.checkpoint = os.path.join(cls.tmpdir, 'checkpoint')
        save_checkpoint(cls.checkpoint, cls.result.config, cls.result.params, cls.result.tokenizer)
        cls.dataset = os.path.join(cls.tmpdir, 'toy.jsonl')
        write_dataset(dataset, cls.dataset)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmpdir, ignore_errors=True)
        super().tearDownClass()

    def test_appointment_query_is_positive(self):
        self.assertEqual(self.result.best_f1, 1.0)
        stdout, _ = run('predict', self.checkpoint, query='book covid vaccine appointment',
                        features='[[8, 0.9], [14, 0.5], [15, 0.1]]')
        self.assertRegex(stdout.splitlines()[0], r'^label=1 probability=\d\.\d{6}$')

    def test_side_effects_query_is_negative(self):
        stdout, _ = run('predict', self.checkpoint, query='covid vaccine side effects',
                        features='[[14, 0.5], [15, 0.1]]')
        self.assertRegex(stdout.splitlines()[0], r'^label=0 probability=\d\.\d{6}$')

    def test_eval_reports_perfect_scores(self):
        stdout, _ = run('eval', self.checkpoint, self.dataset, as_json=True)
        overall = next(line for line in stdout.splitlines() if 'overall' in line)
        self.assertEqual(overall.count('1.000000'), 4)
        self.assertIn(' 20 ', overall)
        self.assertIn('"f1": 1.0', stdout)
        metrics = json.loads(read(self.tmpdir, 'eval', 'toy', 'metrics.json'))
        self.assertEqual((metrics['tp'], metrics['fp'], metrics['fn'], metrics['tn']), (10, 0, 0, 10))
        self.assertEqual(metrics['f1'], 1.0)
        self.assertEqual(metrics['accuracy'], 1.0)
