# -*- coding: utf-8 -*-
from ...exceptions import DataError
from ...experiment import replay
from ..base import VsiIntentCommand


class Command(VsiIntentCommand):
    help = 'Reruns the command recorded in a run manifest and checks its outputs are byte-identical.'

    def add_arguments(self, parser):
        parser.add_argument('manifest', help='manifest.json of an earlier run.')

    def run(self, *args, **options):
        mismatched = replay(options['manifest'], stdout=self.stdout, stderr=self.stderr)
        if mismatched:
            raise DataError('replay differs in: %s' % ', '.join(mismatched))
        self.stdout.write('replay matches %s' % options['manifest'])
