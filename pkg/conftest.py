# -*- coding: utf-8 -*-
"""
Configure Django for plain pytest runs, mirroring what django-app-helper
does for ``setup.py test`` using tests/settings.py.
"""
import django
from django.conf import settings


def pytest_configure(config):
    if settings.configured:
        return
    from tests.settings import HELPER_SETTINGS
    settings.configure(
        INSTALLED_APPS=[
            'django.contrib.contenttypes',
            'django.contrib.auth',
            'vsi_intent',
        ],
        DATABASES={'default': {'ENGINE': 'django.db.backends.sqlite3', 'NAME': ':memory:'}},
        **HELPER_SETTINGS
    )
    django.setup()
