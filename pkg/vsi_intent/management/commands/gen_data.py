# -*- coding: utf-8 -*-
import os

from rich.table import Table

from ...experiment import CONFIG_ARG
from ...features import SPLITS, SUBPOPULATIONS, split, write_dataset
from ...synthetic import generate_synthetic_dataset
from ..base import VsiIntentCommand


def subpopulation_counts_table(datasets):
    table = Table(title='examples per subpopulation', header_style='bold')
    table.add_column('split')
    for name in SUBPOPULATIONS:
        table.add_column(name, justify='right')
    table.add_column('total', justify='right')
    for name, dataset in datasets:
        counts = dataset.subpopulation_counts()
        table.add_row(name, *[str(counts[key]) for key in SUBPOPULATIONS], str(len(dataset)))
    return table


class Command(VsiIntentCommand):
    help = 'Generates the synthetic dataset and its train/validation/test splits.'

    def add_arguments(self, parser):
        parser.add_argument('config', nargs='?', default=None, help='Experiment config (YAML).')
        parser.add_argument('--seed', type=int, default=None, help='Generator seed (default: generator.seed).')
        parser.add_argument('--size', type=int, default=None, help='Number of examples (default: generator.size).')
        self.add_output_argument(parser, '--out', '--output-dir')

    def run(self, *args, **options):
        config = self.load_config(options['config'])
        seed = config.data_seed if options['seed'] is None else options['seed']
        generator_config = config.generator_config(size=options['size'])
        output_dir = options['output_dir'] or os.path.join(config.output_dir, 'data', 'seed-%d' % seed)

        dataset = generate_synthetic_dataset(generator_config, seed)
        parts = split(dataset, config.split_fractions, seed)
        os.makedirs(output_dir, exist_ok=True)

        outputs = []
        for name, item in [('dataset', dataset)] + list(zip(SPLITS, parts)):
            filename = '%s.jsonl' % name
            write_dataset(item, os.path.join(output_dir, filename))
            outputs += [filename, '%s.header.json' % name]

        self.print_table(subpopulation_counts_table(list(zip(SPLITS, parts)) + [('all', dataset)]))
        self.finish_run(
            output_dir, '.', outputs,
            args=[CONFIG_ARG], options={'seed': seed, 'size': generator_config.size},
            config=config, seed=seed, dataset_hash=dataset.content_hash(),
        )
