# -*- coding: utf-8 -*-
"""
Ablation harnesses: memory token count, head MLP depth, model size and the
cross-model comparison. Every harness trains one model per (setting, seed)
cell on fixed train/validation/test splits, scores it on the test split and
reports the median over seeds.
"""
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .adaboost import predict as adaboost_predict
from .adaboost import train_on_dataset
from .conf import settings
from .exceptions import ConfigError
from .features import SUBPOPULATIONS
from .metrics import compute_metrics
from .training import evaluate, train
from .utils import format_float


logger = logging.getLogger(__name__)

SIZE_FIELDS = ('d_model', 'n_layers', 'd_ff', 'n_heads')
SIZE_PRESETS = {
    'tiny': {'d_model': 16, 'n_layers': 1, 'n_heads': 2, 'd_ff': 32},
    'small': {'d_model': 64, 'n_layers': 2, 'n_heads': 4, 'd_ff': 128},
}
ADABOOST_PREFIX = 'adaboost-'


@dataclass(frozen=True)
class Splits:
    train: object
    validation: object
    test: object
    tokenizer: object


@dataclass(frozen=True)
class Cell:
    key: tuple
    variant: str
    seed: int
    model_config: object = None
    train_config: object = None
    n_estimators: int = 0


def _subpopulation_columns(dataset):
    present = set(dataset.subpopulations)
    return [name for name in SUBPOPULATIONS if name in present]


def _row(cell, metrics, subpopulations):
    row = dict(cell.key)
    row.update({'variant': cell.variant, 'seed': cell.seed, 'f1': metrics.f1, 'precision': metrics.precision})
    for name in subpopulations:
        report = metrics.by_subpopulation.get(name)
        row['f1_%s' % name] = report.f1 if report else 0.0
        row['accuracy_%s' % name] = report.accuracy if report else 0.0
    return row


def run_cell(cell, splits):
    """
    Trains and scores one cell; returns its result row.
    """
    subpopulations = _subpopulation_columns(splits.test)
    if cell.n_estimators:
        ensemble = train_on_dataset(splits.train, cell.n_estimators)
        predictions, _ = adaboost_predict(ensemble, splits.test.feature_matrix())
        metrics = compute_metrics(splits.test.labels(), predictions, splits.test.subpopulations)
    else:
        model_config = cell.model_config.replace(variant=cell.variant)
        train_config = cell.train_config.replace(seed=cell.seed)
        result = train(model_config, train_config, splits.train, splits.validation, splits.tokenizer)
        metrics = evaluate(result.checkpoint, splits.test)
    logger.info('cell %s %s seed %d: test f1 %.6f', dict(cell.key), cell.variant, cell.seed, metrics.f1)
    return _row(cell, metrics, subpopulations)


def run_cells(cells, splits, workers=None):
    """
    Runs ``cells`` and returns their rows in input order. With more than one
    worker the cells run in a process pool.
    """
    workers = workers or settings.VSI_INTENT_ABLATION_WORKERS
    if workers <= 1 or len(cells) <= 1:
        return [run_cell(cell, splits) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(partial(run_cell, splits=splits), cells))


@dataclass
class AblationResult:
    kind: str
    key_columns: tuple
    rows: list
    seeds: tuple
    extra_columns: tuple = field(default=())

    @property
    def protocol(self):
        return 'median-of-%d-seeds' % len(self.seeds)

    @property
    def metric_columns(self):
        columns = ['f1', 'precision']
        if self.rows:
            columns += sorted(key for key in self.rows[0] if key.startswith(('f1_', 'accuracy_')))
        return columns

    def summary(self):
        """
        One row per (key, variant), metrics replaced by their median over
        seeds.
        """
        groups = {}
        for row in self.rows:
            group_key = tuple(row[column] for column in self.key_columns) + (row['variant'],)
            groups.setdefault(group_key, []).append(row)
        summary = []
        for group_key, rows in groups.items():
            item = dict(zip(self.key_columns + ('variant',), group_key))
            for column in self.metric_columns:
                item[column] = float(np.median([row[column] for row in rows]))
            item['seeds'] = len(rows)
            item['protocol'] = self.protocol
            summary.append(item)
        return summary

    def median(self, variant, **key):
        for item in self.summary():
            if item['variant'] == variant and all(item[name] == value for name, value in key.items()):
                return item
        raise KeyError('no %s row for %r' % (variant, key))

    def rows_csv(self):
        columns = list(self.key_columns) + ['variant', 'seed'] + self.metric_columns
        return _to_csv(columns, self.rows)

    def summary_csv(self):
        columns = list(self.key_columns) + ['variant'] + self.metric_columns + list(self.extra_columns)
        columns += ['seeds', 'protocol']
        return _to_csv(columns, self.annotated_summary())

    def annotated_summary(self):
        return self.summary()


def _to_csv(columns, rows):
    handle = io.StringIO()
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(row[column]) if isinstance(row[column], float) else row[column]
                         for column in columns])
    return handle.getvalue()


def relative_gain(value, reference):
    if reference == 0:
        return 0.0
    return (value - reference) / reference


@dataclass
class SizeAblationResult(AblationResult):
    extra_columns: tuple = field(default=('relative_f1_gain',))

    def annotated_summary(self):
        summary = self.summary()
        baselines = {item['size']: item['f1'] for item in summary if item['variant'] == 'query_only'}
        for item in summary:
            item['relative_f1_gain'] = relative_gain(item['f1'], baselines.get(item['size'], 0.0))
        return summary

    def gain(self, size, variant='vsi'):
        return relative_gain(self.median(variant, size=size)['f1'], self.median('query_only', size=size)['f1'])


@dataclass
class ComparisonResult(AblationResult):
    extra_columns: tuple = field(default=('relative_f1_vs_query_only',))

    def annotated_summary(self):
        summary = self.summary()
        reference = next((item['f1'] for item in summary if item['variant'] == 'query_only'), 0.0)
        for item in summary:
            item['relative_f1_vs_query_only'] = relative_gain(item['f1'], reference)
        return summary

    def improvements(self, variant='vsi'):
        """
        Relative F1 and precision of ``variant`` against query_only, the best
        AdaBoost and the best baseline overall.
        """
        summary = {item['variant']: item for item in self.summary()}
        target = summary[variant]
        boosted = [item for name, item in summary.items() if name.startswith(ADABOOST_PREFIX)]
        baselines = [item for name, item in summary.items() if name != variant]
        references = [('query_only', summary.get('query_only'))]
        if boosted:
            references.append(('best_adaboost', max(boosted, key=lambda item: item['f1'])))
        if baselines:
            references.append(('best_baseline', max(baselines, key=lambda item: item['f1'])))
        return [
            {
                'comparison': '%s vs %s' % (variant, label),
                'reference': item['variant'],
                'f1_gain': relative_gain(target['f1'], item['f1']),
                'precision_gain': relative_gain(target['precision'], item['precision']),
            }
            for label, item in references if item is not None
        ]

    def improvements_csv(self, variant='vsi'):
        return _to_csv(['comparison', 'reference', 'f1_gain', 'precision_gain'], self.improvements(variant))


def _check_seeds(seeds):
    seeds = tuple(int(seed) for seed in seeds)
    if not seeds:
        raise ConfigError('ablations need at least one seed')
    return seeds


def ablate_memory(base_config, train_config, splits, n_memory_values, seeds, workers=None):
    seeds = _check_seeds(seeds)
    for value in n_memory_values:
        if not 0 <= value <= 8:
            raise ConfigError('n_memory values must be in [0, 8], got %r' % value)
    cells = [
        Cell((('n_memory', value),), 'vsi', seed, base_config.replace(variant='vsi', n_memory=value), train_config)
        for value in n_memory_values for seed in seeds
    ]
    return AblationResult('memory', ('n_memory',), run_cells(cells, splits, workers), seeds)


def ablate_mlp_depth(base_config, train_config, splits, depths, seeds, variants=('late_fusion', 'vsi'), workers=None):
    seeds = _check_seeds(seeds)
    cells = [
        Cell((('n_mlp_layers', depth),), variant, seed,
             base_config.replace(variant=variant, n_mlp_layers=depth), train_config)
        for depth in depths for variant in variants for seed in seeds
    ]
    return AblationResult('mlp_depth', ('n_mlp_layers',), run_cells(cells, splits, workers), seeds)


def size_config(base_config, size):
    if isinstance(size, str):
        if size not in SIZE_PRESETS:
            raise ConfigError('unknown size preset %r' % size)
        size = SIZE_PRESETS[size]
    unexpected = set(size) - set(SIZE_FIELDS)
    if unexpected:
        raise ConfigError('size configs may only change %s, got %s' % (
            ', '.join(SIZE_FIELDS), ', '.join(sorted(unexpected))))
    return base_config.replace(**size)


def ablate_size(base_config, train_config, splits, sizes, seeds, variants=('query_only', 'vsi'), workers=None):
    """
    ``sizes`` maps a size name to a preset name or a dict of the size fields.
    """
    seeds = _check_seeds(seeds)
    configs = [(name, size_config(base_config, size)) for name, size in sizes.items()]
    cells = [
        Cell((('size', name),), variant, seed, config, train_config)
        for name, config in configs for variant in variants for seed in seeds
    ]
    return SizeAblationResult('size', ('size',), run_cells(cells, splits, workers), seeds)


def compare_models(base_config, train_config, splits, seeds, adaboost_estimators=(20, 50),
                   variants=('query_only', 'late_fusion', 'vsi'), workers=None):
    seeds = _check_seeds(seeds)
    cells = [Cell((), variant, seed, base_config, train_config) for variant in variants for seed in seeds]
    # AdaBoost is deterministic, one run per ensemble size.
    cells += [
        Cell((), '%s%d' % (ADABOOST_PREFIX, count), seeds[0], n_estimators=count)
        for count in adaboost_estimators
    ]
    rows = run_cells(cells, splits, workers)
    boosted = [row for row in rows if row['variant'].startswith(ADABOOST_PREFIX)]
    for row in boosted:
        for seed in seeds[1:]:
            copy = dict(row)
            copy['seed'] = seed
            rows.append(copy)
    return ComparisonResult('compare', (), rows, seeds)
