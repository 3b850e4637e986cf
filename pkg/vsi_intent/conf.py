# -*- coding: utf-8 -*-
from django.conf import settings  # noqa

from appconf import AppConf


class VsiIntentAppConf(AppConf):

    # Model defaults (desk scale).
    D_MODEL = 64
    N_LAYERS = 2
    N_HEADS = 4
    D_FF = 128
    SEQ_LEN = 16
    N_MEMORY = 1
    N_MLP_LAYERS = 1
    VOCAB_SIZE = 2000

    # Training defaults.
    LEARNING_RATE = 1e-3
    BATCH_SIZE = 32
    MAX_STEPS = 3000
    EVAL_INTERVAL = 100
    OPTIMIZER = 'adam'
    CLIP_NORM = 1.0
    DROPOUT = 0.0
    EVAL_BATCH_SIZE = 256

    # Data defaults.
    D_FEATURES = 512
    PROPAGATION_TAU = 0.95
    SPLIT_FRACTIONS = (0.76, 0.04, 0.20)

    ABLATION_WORKERS = 1

    TOKENIZER_CLASS = 'vsi_intent.tokenizer.WhitespaceTokenizer'
    OPTIMIZERS = {
        'sgd': 'vsi_intent.optim.SGD',
        'adam': 'vsi_intent.optim.Adam',
    }
    MODEL_CLASSES = {
        'query_only': 'vsi_intent.model.QueryOnlyTransformer',
        'late_fusion': 'vsi_intent.model.LateFusionTransformer',
        'vsi': 'vsi_intent.model.VSITransformer',
    }

    class Meta:
        prefix = 'VSI_INTENT'
