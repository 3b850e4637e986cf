# -*- coding: utf-8 -*-
import json
import os

from ...checkpoint import load_checkpoint
from ...experiment import run_directory
from ...features import read_dataset
from ...metrics import metrics_table
from ...training import evaluate
from ...utils import sha256_file
from ..base import VsiIntentCommand


def dataset_stem(path):
    name = os.path.basename(path)
    return name[:-len('.jsonl')] if name.endswith('.jsonl') else name


class Command(VsiIntentCommand):
    help = 'Evaluates a checkpoint on a dataset: metrics JSON plus a table.'

    def add_arguments(self, parser):
        parser.add_argument('checkpoint', help='Checkpoint directory.')
        parser.add_argument('dataset', help='Dataset JSONL file (with its .header.json).')
        parser.add_argument('--json', action='store_true', dest='as_json', help='Also print the metrics as JSON.')
        parser.add_argument(
            '--output-dir', dest='output_dir', default=None,
            help='Root for the evaluation record (default: the directory holding the checkpoint).')

    def run(self, *args, **options):
        checkpoint_path = os.path.abspath(options['checkpoint'])
        dataset_path = os.path.abspath(options['dataset'])
        checkpoint = load_checkpoint(checkpoint_path)
        metrics = evaluate(checkpoint, read_dataset(dataset_path))

        self.print_table(metrics_table(metrics, title=os.path.basename(dataset_path)))
        if options['as_json']:
            self.stdout.write(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
        run_path = os.path.join('eval', dataset_stem(dataset_path))
        directory = run_directory(options['output_dir'] or os.path.dirname(checkpoint_path), run_path)
        self.write_json(os.path.join(directory, 'metrics.json'), metrics.to_dict())
        self.finish_run(
            directory, run_path, ['metrics.json'],
            args=[checkpoint_path, dataset_path],
            dataset_hash=sha256_file(dataset_path),
        )
