# -*- coding: utf-8 -*-
"""
Mini-batch training with best-validation-F1 checkpoint selection.
"""
import csv
import io
import logging
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .checkpoint import Checkpoint
from .conf import settings
from .exceptions import ConfigError, DataError, NonFiniteError, TrainingDiverged
from .metrics import compute_metrics
from .model import build_model, init_params
from .numeric import ComputationTape
from .optim import clip_grad_norm
from .signals import checkpoint_selected, evaluation_logged
from .utils import format_float, get_optimizer_class


logger = logging.getLogger(__name__)

LOG_COLUMNS = ('step', 'train_loss', 'val_f1', 'val_precision')


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_steps: int = 3000
    eval_interval: int = 100
    seed: int = 0
    optimizer: str = 'adam'
    clip_norm: Optional[float] = 1.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError('learning rate must not be negative')
        if self.batch_size < 1:
            raise ConfigError('batch size must be at least 1')
        if self.max_steps < 1 or self.eval_interval < 1:
            raise ConfigError('max_steps and eval_interval must be positive')
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError('clip_norm must be positive or None')

    @classmethod
    def from_settings(cls, **overrides):
        values = {
            'learning_rate': settings.VSI_INTENT_LEARNING_RATE,
            'batch_size': settings.VSI_INTENT_BATCH_SIZE,
            'max_steps': settings.VSI_INTENT_MAX_STEPS,
            'eval_interval': settings.VSI_INTENT_EVAL_INTERVAL,
            'optimizer': settings.VSI_INTENT_OPTIMIZER,
            'clip_norm': settings.VSI_INTENT_CLIP_NORM,
        }
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_dict(cls, data):
        known = set(field.name for field in fields(cls))
        return cls(**{key: value for key, value in data.items() if key in known})

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        values = self.to_dict()
        values.update(changes)
        return TrainConfig(**values)


@dataclass
class EncodedDataset:
    ids: np.ndarray
    mask: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    subpopulations: list

    def __len__(self):
        return self.ids.shape[0]

    def take(self, rows):
        return self.ids[rows], self.mask[rows], self.features[rows], self.labels[rows]


def encode_dataset(dataset, tokenizer, config):
    if config.uses_features and dataset.d_features != config.d_features:
        raise ConfigError('dataset has d_features=%d, model expects %d' % (dataset.d_features, config.d_features))
    ids, mask = tokenizer.encode_batch(dataset.queries, config.seq_len)
    return EncodedDataset(
        ids=ids,
        mask=mask,
        features=dataset.feature_matrix(),
        labels=dataset.labels(),
        subpopulations=dataset.subpopulations,
    )


@dataclass
class TrainResult:
    config: object
    train_config: TrainConfig
    params: object
    tokenizer: object
    history: list
    best_step: int
    best_f1: float

    @property
    def checkpoint(self):
        return Checkpoint(config=self.config, params=self.params, tokenizer=self.tokenizer)


def batch_schedule(count, batch_size, seed):
    """
    Yields index arrays of ``batch_size`` rows drawn from consecutive seeded
    permutations of ``range(count)``.
    """
    rng = np.random.default_rng(seed)
    pending = np.zeros(0, dtype=np.int64)
    while True:
        while pending.size < batch_size:
            pending = np.concatenate([pending, rng.permutation(count)])
        yield pending[:batch_size]
        pending = pending[batch_size:]


def predict_labels(model, encoded, batch_size=None):
    batch_size = batch_size or settings.VSI_INTENT_EVAL_BATCH_SIZE
    features = encoded.features if model.config.uses_features else None
    probabilities = model.predict_proba(encoded.ids, encoded.mask, features, batch_size=batch_size)
    return np.argmax(probabilities, axis=1)


def evaluate_encoded(model, encoded, batch_size=None):
    return compute_metrics(encoded.labels, predict_labels(model, encoded, batch_size), encoded.subpopulations)


def evaluate(checkpoint, dataset, batch_size=None):
    """
    Argmax predictions of ``checkpoint`` on ``dataset``, overall and per
    subpopulation.
    """
    encoded = encode_dataset(dataset, checkpoint.tokenizer, checkpoint.config)
    return evaluate_encoded(checkpoint.model, encoded, batch_size)


def train(config, train_config, train_set, validation_set, tokenizer, params=None):
    if not len(train_set):
        raise DataError('training set is empty')
    if not len(validation_set):
        raise DataError('validation set is empty')
    if tokenizer.vocab_size != config.vocab_size:
        raise ConfigError('tokenizer has %d entries, model config expects vocab_size=%d' % (
            tokenizer.vocab_size, config.vocab_size))
    if train_config.learning_rate == 0:
        logger.warning('learning rate is 0, parameters will not change')

    train_data = encode_dataset(train_set, tokenizer, config)
    validation_data = encode_dataset(validation_set, tokenizer, config)
    params = params if params is not None else init_params(config, train_config.seed)
    model = build_model(config, params)
    optimizer = get_optimizer_class(train_config.optimizer)(params, train_config.learning_rate)
    dropout_rng = np.random.default_rng([train_config.seed, 1])
    schedule = batch_schedule(len(train_data), train_config.batch_size, train_config.seed)

    history = []
    best_params, best_step, best_f1 = params.copy(), 0, -1.0
    for step in range(1, train_config.max_steps + 1):
        ids, mask, features, labels = train_data.take(next(schedule))
        try:
            with ComputationTape() as tape:
                loss = model.loss(ids, mask, features, labels, training=True, rng=dropout_rng)
            grads = tape.backward(loss, params)
        except NonFiniteError as error:
            raise TrainingDiverged(step, float('nan'), str(error))
        loss_value = loss.item()
        clip_grad_norm(grads, train_config.clip_norm)
        optimizer.step(grads)
        if not params.is_finite():
            raise TrainingDiverged(step, loss_value, 'parameters became non-finite')

        if step % train_config.eval_interval == 0 or step == train_config.max_steps:
            metrics = evaluate_encoded(model, validation_data)
            history.append({
                'step': step,
                'train_loss': loss_value,
                'val_f1': metrics.f1,
                'val_precision': metrics.precision,
            })
            evaluation_logged.send(sender=TrainResult, step=step, train_loss=loss_value, metrics=metrics)
            if metrics.f1 > best_f1:
                best_params, best_step, best_f1 = params.copy(), step, metrics.f1
                checkpoint_selected.send(sender=TrainResult, step=step, f1=metrics.f1)

    return TrainResult(
        config=config,
        train_config=train_config,
        params=best_params,
        tokenizer=tokenizer,
        history=history,
        best_step=best_step,
        best_f1=best_f1,
    )


def format_train_log(history):
    handle = io.StringIO()
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(LOG_COLUMNS)
    for row in history:
        writer.writerow([row['step']] + [format_float(row[column]) for column in LOG_COLUMNS[1:]])
    return handle.getvalue()


def write_train_log(history, path):
    with io.open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(format_train_log(history))
