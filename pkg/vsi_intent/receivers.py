# -*- coding: utf-8 -*-
import logging

from django.dispatch.dispatcher import receiver

from .signals import checkpoint_selected, evaluation_logged, example_dropped


logger = logging.getLogger(__name__)


@receiver(evaluation_logged, dispatch_uid='log_evaluation')
def log_evaluation(sender, step, train_loss, metrics, **kwargs):
    logger.info('step %d: train loss %.6f, validation f1 %.6f, precision %.6f',
                step, train_loss, metrics.f1, metrics.precision)


@receiver(checkpoint_selected, dispatch_uid='log_checkpoint_selected')
def log_checkpoint_selected(sender, step, f1, **kwargs):
    logger.debug('new best checkpoint at step %d (validation f1 %.6f)', step, f1)


@receiver(example_dropped, dispatch_uid='log_example_dropped')
def log_example_dropped(sender, example, reason, **kwargs):
    logger.info('label propagation dropped %r: %s', example.query, reason)
