# -*- coding: utf-8 -*-
import os

from ...adaboost import predict, save_ensemble, train_on_dataset
from ...experiment import CONFIG_ARG, prepare_data, run_directory
from ...metrics import compute_metrics, metrics_table
from ..base import VsiIntentCommand


class Command(VsiIntentCommand):
    help = 'Trains the dense-features-only AdaBoost baseline and scores it on the test split.'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Experiment config (YAML).')
        parser.add_argument('--estimators', type=int, default=None,
                            help='Boosting rounds (default: the largest of ablation.adaboost_estimators).')
        self.add_output_argument(parser)

    def run(self, *args, **options):
        config = self.load_config(options['config'])
        estimators = options['estimators'] or max(config.ablation['adaboost_estimators'] or [50])
        data = prepare_data(config)
        splits = data.splits

        ensemble = train_on_dataset(splits.train, estimators)
        predictions, _ = predict(ensemble, splits.test.feature_matrix())
        metrics = compute_metrics(splits.test.labels(), predictions, splits.test.subpopulations)

        run_path = os.path.join('boost', 'adaboost-%d' % estimators)
        directory = run_directory(options['output_dir'] or config.output_dir, run_path)
        save_ensemble(ensemble, os.path.join(directory, 'ensemble.json'))
        self.write_json(os.path.join(directory, 'metrics.json'), {
            'rounds': len(ensemble),
            'training_bound': ensemble.training_bound(),
            'test': metrics.to_dict(),
        })

        self.print_table(metrics_table(metrics, title='AdaBoost, %d rounds, test split' % len(ensemble)))
        self.finish_run(
            directory, run_path, ['ensemble.json', 'metrics.json'],
            args=[CONFIG_ARG], options={'estimators': estimators},
            config=config, seed=config.data_seed, dataset_hash=data.dataset.content_hash(),
        )
