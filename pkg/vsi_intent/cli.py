# -*- coding: utf-8 -*-
"""
``vsi-intent`` console script.

Inside a Django project the commands are available through ``manage.py``;
stand-alone, this entry point configures a minimal settings object first.
"""
import os
import sys

import django
from django.conf import settings
from django.core.management import ManagementUtility


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        'vsi_intent': {'handlers': ['console'], 'level': 'INFO', 'propagate': False},
    },
}

STANDALONE_SETTINGS = {
    'INSTALLED_APPS': ['vsi_intent'],
    'LOGGING': LOGGING,
    'USE_TZ': True,
}


def configure():
    if not settings.configured and not os.environ.get('DJANGO_SETTINGS_MODULE'):
        settings.configure(**STANDALONE_SETTINGS)
    django.setup()


def main(argv=None):
    configure()
    argv = list(sys.argv if argv is None else argv)
    ManagementUtility(argv).execute()


if __name__ == '__main__':
    main()
