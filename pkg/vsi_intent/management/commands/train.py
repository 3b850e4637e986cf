# -*- coding: utf-8 -*-
import os

from ...checkpoint import save_checkpoint
from ...experiment import CONFIG_ARG, prepare_data, run_directory, seed_directory
from ...metrics import metrics_table
from ...training import evaluate, train, write_train_log
from ..base import VsiIntentCommand


class Command(VsiIntentCommand):
    help = 'Trains one model variant and keeps the best-validation-F1 checkpoint.'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Experiment config (YAML).')
        parser.add_argument('--variant', default=None, choices=('query_only', 'late_fusion', 'vsi'),
                            help='Model variant (default: model.variant).')
        parser.add_argument('--seed', type=int, default=None,
                            help='Training seed (default: the first of experiment.seeds).')
        self.add_output_argument(parser)

    def run(self, *args, **options):
        config = self.load_config(options['config'])
        variant = options['variant'] or config.model['variant']
        seed = config.seeds[0] if options['seed'] is None else options['seed']

        data = prepare_data(config)
        splits = data.splits
        model_config = config.model_config(splits.tokenizer.vocab_size, data.dataset.d_features, variant=variant)
        result = train(model_config, config.train_config(seed), splits.train, splits.validation, splits.tokenizer)

        run_path = os.path.join('train', variant, seed_directory(seed))
        directory = run_directory(options['output_dir'] or config.output_dir, run_path)
        save_checkpoint(os.path.join(directory, 'checkpoint'), model_config, result.params, splits.tokenizer)
        write_train_log(result.history, os.path.join(directory, 'train_log.csv'))
        metrics = evaluate(result.checkpoint, splits.test)
        self.write_json(os.path.join(directory, 'metrics.json'), {
            'best_step': result.best_step,
            'best_validation_f1': result.best_f1,
            'test': metrics.to_dict(),
        })

        self.print_table(metrics_table(metrics, title='%s seed %d, test split' % (variant, seed)))
        outputs = ['train_log.csv', 'metrics.json'] + [
            os.path.join('checkpoint', name) for name in ('params.json', 'params.bin', 'vocab.txt')
        ]
        self.finish_run(
            directory, run_path, outputs,
            args=[CONFIG_ARG], options={'variant': variant, 'seed': seed},
            config=config, seed=seed, dataset_hash=data.dataset.content_hash(),
        )
