# -*- coding: utf-8 -*-
__version__ = '1.0.0'

default_app_config = 'vsi_intent.apps.VsiIntentConfig'
