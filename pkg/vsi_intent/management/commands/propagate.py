# -*- coding: utf-8 -*-
import os

from ...exceptions import ConfigError
from ...features import propagate_labels, read_dataset, write_dataset
from ...synthetic import generate_unlabeled_pool
from ...utils import sha256_file
from ..base import VsiIntentCommand


class Command(VsiIntentCommand):
    help = 'Labels an unlabeled pool by cosine similarity to the seeded examples of a dataset.'

    def add_arguments(self, parser):
        parser.add_argument('dataset', help='Labeled dataset JSONL file.')
        parser.add_argument('--pool', default=None, help='Unlabeled pool JSONL file.')
        parser.add_argument('--pool-size', type=int, default=None, dest='pool_size',
                            help='Draw a synthetic pool of this size instead of reading --pool.')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the synthetic pool.')
        parser.add_argument('--config', default=None, help='Experiment config; its experiment.tau is the default.')
        parser.add_argument('--tau', type=float, default=None,
                            help='Similarity threshold (default: experiment.tau, VSI_INTENT_PROPAGATION_TAU).')
        self.add_output_argument(parser, '--out', '--output-dir')

    def run(self, *args, **options):
        if (options['pool'] is None) == (options['pool_size'] is None):
            raise ConfigError('give exactly one of --pool and --pool-size')
        tau = options['tau']
        if tau is None:
            tau = self.load_config(options['config']).experiment['tau']
        dataset_path = os.path.abspath(options['dataset'])
        labeled = read_dataset(dataset_path)
        if options['pool'] is not None:
            pool_path = os.path.abspath(options['pool'])
            pool = read_dataset(pool_path).examples
        else:
            pool_path = None
            pool = generate_unlabeled_pool(labeled, options['pool_size'], options['seed'])

        merged = propagate_labels(labeled, pool, tau)
        adopted = len(merged) - len(labeled)
        output_dir = options['output_dir'] or os.path.join(os.path.dirname(dataset_path), 'propagated')
        os.makedirs(output_dir, exist_ok=True)
        write_dataset(merged.with_examples(merged.examples, split='propagated'),
                      os.path.join(output_dir, 'propagated.jsonl'))

        self.stdout.write('adopted %d of %d pool examples (tau=%s), %d examples written' % (
            adopted, len(pool), tau, len(merged)))
        self.finish_run(
            output_dir, '.', ['propagated.jsonl', 'propagated.header.json'],
            args=[dataset_path],
            options={'pool': pool_path, 'pool_size': options['pool_size'], 'seed': options['seed'], 'tau': tau},
            dataset_hash=sha256_file(dataset_path),
        )
