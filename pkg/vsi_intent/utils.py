# -*- coding: utf-8 -*-
import hashlib
import importlib

from django.core.exceptions import ImproperlyConfigured

from .conf import settings


CSV_FLOAT_FORMAT = '{:.6f}'


def get_callable(string_or_callable):
    """
    If given a callable then it returns it, otherwise it resolves the path
    and returns an object.
    """
    if callable(string_or_callable):
        return string_or_callable
    else:
        module_name, object_name = string_or_callable.rsplit('.', 1)
        module = importlib.import_module(module_name)
        return getattr(module, object_name)


def get_class_from_setting(setting_name, path_or_class, base_class):
    """
    Resolves ``path_or_class`` and checks it is a subclass of ``base_class``.
    Any problem is reported as ImproperlyConfigured naming ``setting_name``.
    """
    try:
        klass = get_callable(path_or_class)
    except (AttributeError, ImportError, ValueError) as error:
        raise ImproperlyConfigured('%s: %s' % (setting_name, str(error)))

    if not isinstance(klass, type) or not issubclass(klass, base_class):
        exception_message = '%s: %s is not a subclass of %s.%s'
        raise ImproperlyConfigured(exception_message % (
            setting_name, path_or_class, base_class.__module__, base_class.__name__))
    return klass


def get_tokenizer_class():
    from .tokenizer import BaseTokenizer

    return get_class_from_setting(
        'VSI_INTENT_TOKENIZER_CLASS', settings.VSI_INTENT_TOKENIZER_CLASS, BaseTokenizer)


def get_optimizer_class(name):
    from .optim import Optimizer

    optimizers = settings.VSI_INTENT_OPTIMIZERS
    if name not in optimizers:
        raise ImproperlyConfigured(
            'VSI_INTENT_OPTIMIZERS: no optimizer registered as %r (known: %s)' % (name, ', '.join(sorted(optimizers))))
    return get_class_from_setting('VSI_INTENT_OPTIMIZERS[%r]' % name, optimizers[name], Optimizer)


def get_model_class(variant):
    from .model import IntentTransformer

    model_classes = settings.VSI_INTENT_MODEL_CLASSES
    if variant not in model_classes:
        raise ImproperlyConfigured('VSI_INTENT_MODEL_CLASSES: no model registered for variant %r' % variant)
    return get_class_from_setting('VSI_INTENT_MODEL_CLASSES[%r]' % variant, model_classes[variant], IntentTransformer)


def format_float(value):
    return CSV_FLOAT_FORMAT.format(value)


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def content_hash(text):
    """
    Returns the git blob hash of ``text``.
    """
    data = text.encode('utf-8')
    header = ('blob %d\0' % len(data)).encode('ascii')
    return hashlib.sha1(header + data).hexdigest()
