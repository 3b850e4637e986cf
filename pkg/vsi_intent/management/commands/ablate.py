# -*- coding: utf-8 -*-
import io
import os

from rich.table import Table

from ... import ablation
from ...experiment import CONFIG_ARG, prepare_data, run_directory
from ...utils import format_float
from ..base import VsiIntentCommand


KINDS = ('memory', 'mlp_depth', 'size', 'compare')


def summary_table(result, title):
    summary = result.annotated_summary()
    columns = list(result.key_columns) + ['variant'] + result.metric_columns + list(result.extra_columns)
    table = Table(title=title, header_style='bold')
    for column in columns:
        table.add_column(column, justify='right' if column not in ('variant', 'size') else 'left')
    for item in summary:
        table.add_row(*[format_float(item[column]) if isinstance(item[column], float) else str(item[column])
                        for column in columns])
    return table


class Command(VsiIntentCommand):
    help = 'Runs an ablation (memory, mlp_depth, size) or the model comparison and writes CSV tables.'

    def add_arguments(self, parser):
        parser.add_argument('kind', choices=KINDS)
        parser.add_argument('config', help='Experiment config (YAML).')
        parser.add_argument('--workers', type=int, default=None,
                            help='Parallel ablation cells (default: VSI_INTENT_ABLATION_WORKERS).')
        self.add_output_argument(parser)

    def run(self, *args, **options):
        kind = options['kind']
        config = self.load_config(options['config'])
        data = prepare_data(config)
        splits = data.splits
        base = config.model_config(splits.tokenizer.vocab_size, data.dataset.d_features)
        train_config = config.train_config(config.seeds[0])
        settings = config.ablation
        workers = options['workers']

        if kind == 'memory':
            result = ablation.ablate_memory(
                base, train_config, splits, settings['n_memory_values'], config.seeds, workers=workers)
        elif kind == 'mlp_depth':
            result = ablation.ablate_mlp_depth(
                base, train_config, splits, settings['depths'], config.seeds,
                variants=settings['depth_variants'], workers=workers)
        elif kind == 'size':
            result = ablation.ablate_size(
                base, train_config, splits, {name: name for name in settings['sizes']}, config.seeds,
                variants=settings['size_variants'], workers=workers)
        else:
            result = ablation.compare_models(
                base, train_config, splits, config.seeds, adaboost_estimators=settings['adaboost_estimators'],
                variants=settings['compare_variants'], workers=workers)

        run_path = os.path.join('ablate', kind)
        directory = run_directory(options['output_dir'] or config.output_dir, run_path)
        files = {'rows.csv': result.rows_csv(), 'summary.csv': result.summary_csv()}
        if kind == 'compare':
            files['improvements.csv'] = result.improvements_csv()
        for name, text in files.items():
            with io.open(os.path.join(directory, name), 'w', encoding='utf-8', newline='') as handle:
                handle.write(text)

        self.print_table(summary_table(result, '%s ablation (%s)' % (kind, result.protocol)))
        self.finish_run(
            directory, run_path, sorted(files),
            args=[kind, CONFIG_ARG], options={'workers': workers},
            config=config, seed=config.seeds[0], dataset_hash=data.dataset.content_hash(),
        )
