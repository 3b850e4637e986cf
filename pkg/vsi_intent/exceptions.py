# -*- coding: utf-8 -*-


class VsiIntentError(Exception):
    """
    Base class for every error raised by vsi_intent.

    ``exit_code`` is what the command line surface exits with.
    """
    exit_code = 1


class DimensionError(VsiIntentError, ValueError):
    exit_code = 3


class InvalidMaskError(VsiIntentError, ValueError):
    exit_code = 3


class NonFiniteError(VsiIntentError, FloatingPointError):
    exit_code = 3


class ConfigError(VsiIntentError):
    exit_code = 2


class DataError(VsiIntentError):
    exit_code = 3


class CheckpointError(DataError):
    pass


class TrainingDiverged(VsiIntentError):
    exit_code = 4

    def __init__(self, step, loss, reason=''):
        self.step = step
        self.loss = loss
        message = 'training diverged at step %d (loss=%r)' % (step, loss)
        if reason:
            message = '%s: %s' % (message, reason)
        super().__init__(message)
