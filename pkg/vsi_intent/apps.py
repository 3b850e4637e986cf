from django.apps import AppConfig


class VsiIntentConfig(AppConfig):
    name = 'vsi_intent'
    verbose_name = 'VSI intent classification'

    def ready(self):
        from . import conf  # noqa
        from . import receivers  # noqa
