# -*- coding: utf-8 -*-
import io
import json
import logging

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from ..exceptions import ConfigError, VsiIntentError
from ..experiment import build_manifest, load_config, write_manifest
from ..metrics import render_table


VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG, 3: logging.DEBUG}


class VsiIntentCommand(BaseCommand):
    """
    Base for the vsi_intent commands. Subclasses implement ``run``; package
    errors leave through CommandError with the error's exit code.
    """

    def handle(self, *args, **options):
        logging.getLogger('vsi_intent').setLevel(VERBOSITY_LEVELS.get(options.get('verbosity', 1), logging.DEBUG))
        try:
            self.run(*args, **options)
        except VsiIntentError as error:
            raise CommandError(str(error), returncode=error.exit_code)
        except ImproperlyConfigured as error:
            raise CommandError(str(error), returncode=ConfigError.exit_code)

    def run(self, *args, **options):
        raise NotImplementedError

    def add_output_argument(self, parser, *flags):
        parser.add_argument(
            *(flags or ('--output-dir',)), dest='output_dir', default=None,
            help='Root directory for run outputs (default: experiment.output_dir).')

    def load_config(self, path):
        return load_config(path)

    def print_table(self, table):
        self.stdout.write(render_table(table), ending='')

    def write_json(self, path, data):
        with io.open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(json.dumps(data, indent=2, sort_keys=True) + '\n')

    def finish_run(self, directory, run_path, outputs, **manifest_fields):
        manifest = build_manifest(self.command_name, run_path, **manifest_fields)
        path = write_manifest(directory, manifest, outputs)
        self.stdout.write('manifest: %s' % path)

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]
