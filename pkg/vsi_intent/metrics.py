# -*- coding: utf-8 -*-
"""
Binary classification metrics with the positive class = 1.
"""
import io
from dataclasses import dataclass, field

import numpy as np
from rich.console import Console
from rich.table import Table
from sklearn.metrics import confusion_matrix

from .exceptions import DimensionError
from .utils import format_float


@dataclass(frozen=True)
class MetricsReport:
    """
    Confusion counts plus the metrics derived from them.

    Precision and recall are 0 when their denominator is 0; the
    ``precision_undefined`` / ``recall_undefined`` flags say when that
    happened.
    """
    tp: int
    fp: int
    fn: int
    tn: int
    by_subpopulation: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp, fp, fn, tn=0):
        return cls(tp=int(tp), fp=int(fp), fn=int(fn), tn=int(tn))

    @property
    def support(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision_undefined(self):
        return self.tp + self.fp == 0

    @property
    def recall_undefined(self):
        return self.tp + self.fn == 0

    @property
    def precision(self):
        return 0.0 if self.precision_undefined else self.tp / float(self.tp + self.fp)

    @property
    def recall(self):
        return 0.0 if self.recall_undefined else self.tp / float(self.tp + self.fn)

    @property
    def f1(self):
        precision, recall = self.precision, self.recall
        if precision + recall == 0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)

    @property
    def accuracy(self):
        if not self.support:
            return 0.0
        return (self.tp + self.tn) / float(self.support)

    def to_dict(self):
        data = {
            'tp': self.tp,
            'fp': self.fp,
            'fn': self.fn,
            'tn': self.tn,
            'precision': self.precision,
            'recall': self.recall,
            'f1': self.f1,
            'accuracy': self.accuracy,
            'precision_undefined': self.precision_undefined,
            'recall_undefined': self.recall_undefined,
        }
        if self.by_subpopulation:
            data['by_subpopulation'] = {
                name: report.to_dict() for name, report in sorted(self.by_subpopulation.items())
            }
        return data


def _counts(labels, predictions):
    if not labels.size:
        return 0, 0, 0, 0
    (tn, fp), (fn, tp) = confusion_matrix(labels, predictions, labels=[0, 1])
    return tp, fp, fn, tn


def compute_metrics(labels, predictions, subpopulations=None):
    """
    Returns a MetricsReport for {0, 1} ``labels`` against ``predictions``,
    with a per-subpopulation breakdown when ``subpopulations`` is given.
    """
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.shape != predictions.shape:
        raise DimensionError('%d labels for %d predictions' % (labels.size, predictions.size))

    breakdown = {}
    if subpopulations is not None:
        subpopulations = np.asarray(subpopulations)
        if subpopulations.shape != labels.shape:
            raise DimensionError('%d subpopulation tags for %d labels' % (subpopulations.size, labels.size))
        for name in sorted(set(subpopulations.tolist())):
            selected = subpopulations == name
            breakdown[name] = MetricsReport.from_counts(*_counts(labels[selected], predictions[selected]))
    tp, fp, fn, tn = _counts(labels, predictions)
    return MetricsReport(tp=int(tp), fp=int(fp), fn=int(fn), tn=int(tn), by_subpopulation=breakdown)


def metrics_table(report, title=None):
    table = Table(title=title, show_header=True, header_style='bold')
    for column in ('subset', 'n', 'precision', 'recall', 'f1', 'accuracy'):
        table.add_column(column, justify='left' if column == 'subset' else 'right')

    def add(name, item):
        table.add_row(name, str(item.support), format_float(item.precision), format_float(item.recall),
                      format_float(item.f1), format_float(item.accuracy))

    add('overall', report)
    for name, item in sorted(report.by_subpopulation.items()):
        add(name, item)
    return table


def render_table(table, width=100):
    """
    Renders a rich table to plain text.
    """
    console = Console(file=io.StringIO(), width=width, record=True, color_system=None)
    console.print(table)
    return console.export_text()
