# -*- coding: utf-8 -*-
"""
Transformer encoder classifiers over query tokens and dense features.

Three variants share one encoder:

``query_only``
    tokens only.
``late_fusion``
    X_f is concatenated to the pooled encoder output before the head MLP.
``vsi``
    X_f is projected into ``n_memory`` memory tokens,
    M_i = ReLU(X_f W_i + b_i), appended after the query positions. Memory
    tokens are injected once and flow through every layer like query tokens.
"""
import math
import zlib
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import numeric as nx
from .conf import settings
from .exceptions import ConfigError, DataError, DimensionError
from .tokenizer import TokenSequence


VARIANTS = ('query_only', 'late_fusion', 'vsi')
MAX_MEMORY = 8
MAX_MLP_LAYERS = 3
INIT_STD = 0.02


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_features: int = 512
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    seq_len: int = 16
    n_memory: int = 1
    n_class: int = 2
    n_mlp_layers: int = 1
    variant: str = 'vsi'
    pool_memory: bool = True
    share_sequence_budget: bool = False
    dropout: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError('unknown model variant %r' % self.variant)
        if self.variant != 'vsi' and self.n_memory:
            object.__setattr__(self, 'n_memory', 0)
        for name in ('vocab_size', 'd_model', 'n_layers', 'n_heads', 'd_ff', 'seq_len', 'n_class'):
            if getattr(self, name) < 1:
                raise ConfigError('%s must be positive' % name)
        if self.d_model % self.n_heads:
            raise ConfigError('d_model=%d is not divisible by n_heads=%d' % (self.d_model, self.n_heads))
        if not 0 <= self.n_memory <= MAX_MEMORY:
            raise ConfigError('n_memory must be in [0, %d]' % MAX_MEMORY)
        if not 1 <= self.n_mlp_layers <= MAX_MLP_LAYERS:
            raise ConfigError('n_mlp_layers must be in [1, %d]' % MAX_MLP_LAYERS)
        if self.variant != 'query_only' and self.d_features < 1:
            raise ConfigError('variant %s needs d_features > 0' % self.variant)
        if self.share_sequence_budget and self.n_memory >= self.seq_len:
            raise ConfigError('n_memory=%d leaves no query positions out of seq_len=%d' % (
                self.n_memory, self.seq_len))
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError('dropout must be in [0, 1)')

    @property
    def d_head(self):
        return self.d_model // self.n_heads

    @property
    def uses_features(self):
        return self.variant != 'query_only'

    @property
    def query_positions(self):
        if self.share_sequence_budget:
            return self.seq_len - self.n_memory
        return self.seq_len

    @classmethod
    def from_settings(cls, vocab_size, **overrides):
        values = {
            'd_features': settings.VSI_INTENT_D_FEATURES,
            'd_model': settings.VSI_INTENT_D_MODEL,
            'n_layers': settings.VSI_INTENT_N_LAYERS,
            'n_heads': settings.VSI_INTENT_N_HEADS,
            'd_ff': settings.VSI_INTENT_D_FF,
            'seq_len': settings.VSI_INTENT_SEQ_LEN,
            'n_memory': settings.VSI_INTENT_N_MEMORY,
            'n_mlp_layers': settings.VSI_INTENT_N_MLP_LAYERS,
            'dropout': settings.VSI_INTENT_DROPOUT,
        }
        values.update(overrides)
        return cls(vocab_size=vocab_size, **values)

    @classmethod
    def from_dict(cls, data):
        known = set(field.name for field in fields(cls))
        unknown = set(data) - known
        if unknown:
            raise ConfigError('unknown model config keys: %s' % ', '.join(sorted(unknown)))
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        values = self.to_dict()
        values.update(changes)
        return ModelConfig(**values)


class Params(dict):
    """
    Named learnable tensors, in creation order.
    """

    def copy(self):
        return Params((name, nx.parameter(tensor.data.copy(), name)) for name, tensor in self.items())

    def num_scalars(self):
        return sum(tensor.size for tensor in self.values())

    def layer(self, index):
        prefix = 'layers.%d.' % index
        return {name[len(prefix):]: tensor for name, tensor in self.items() if name.startswith(prefix)}

    def is_finite(self):
        return all(np.all(np.isfinite(tensor.data)) for tensor in self.values())


def param_shapes(config):
    """
    Returns ``(name, shape, init)`` triples; ``init`` is one of 'normal',
    'zeros' or 'ones'.
    """
    d, ff = config.d_model, config.d_ff
    specs = [
        ('embedding.tokens', (config.vocab_size, d), 'normal'),
        ('embedding.positions', (config.seq_len, d), 'normal'),
    ]
    for index in range(config.n_layers):
        prefix = 'layers.%d.' % index
        specs += [
            (prefix + 'attention.norm.gain', (d,), 'ones'),
            (prefix + 'attention.norm.bias', (d,), 'zeros'),
            (prefix + 'attention.query', (d, d), 'normal'),
            (prefix + 'attention.key', (d, d), 'normal'),
            (prefix + 'attention.value', (d, d), 'normal'),
            (prefix + 'attention.output', (d, d), 'normal'),
            (prefix + 'feed_forward.norm.gain', (d,), 'ones'),
            (prefix + 'feed_forward.norm.bias', (d,), 'zeros'),
            (prefix + 'feed_forward.gate', (d, ff), 'normal'),
            (prefix + 'feed_forward.linear', (d, ff), 'normal'),
            (prefix + 'feed_forward.output', (ff, d), 'normal'),
        ]
    specs += [
        ('final_norm.gain', (d,), 'ones'),
        ('final_norm.bias', (d,), 'zeros'),
    ]
    for index in range(config.n_memory):
        specs += [
            ('memory.%d.weight' % index, (config.d_features, d), 'normal'),
            ('memory.%d.bias' % index, (d,), 'zeros'),
        ]
    width = d + (config.d_features if config.variant == 'late_fusion' else 0)
    for index in range(config.n_mlp_layers):
        specs += [
            ('head.%d.weight' % index, (width, d), 'normal'),
            ('head.%d.bias' % index, (d,), 'zeros'),
        ]
        width = d
    specs += [
        ('classifier.weight', (d, config.n_class), 'normal'),
        ('classifier.bias', (config.n_class,), 'zeros'),
    ]
    return specs


def parameter_count(config):
    return sum(int(np.prod(shape)) for _, shape, _ in param_shapes(config))


def _truncated_normal(rng, shape, std=INIT_STD, bound=2.0):
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > bound * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > bound * std
    return values


def init_params(config, seed):
    """
    Weights ~ Normal(0, 0.02^2) truncated at two standard deviations, biases
    zero, norm gains one. Each tensor draws from its own generator keyed by
    (seed, name), so tensors shared by two configs start out identical.
    """
    params = Params()
    for name, shape, init in param_shapes(config):
        if init == 'normal':
            rng = np.random.default_rng([seed, zlib.crc32(name.encode('utf-8'))])
            data = _truncated_normal(rng, shape)
        elif init == 'ones':
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = nx.parameter(data, name)
    return params


def check_params(config, params):
    expected = param_shapes(config)
    names = [name for name, _, _ in expected]
    if list(params) != names:
        missing = sorted(set(names) - set(params))
        extra = sorted(set(params) - set(names))
        raise DimensionError('parameters do not match config (missing: %s, unexpected: %s)' % (missing, extra))
    for name, shape, _ in expected:
        if params[name].shape != shape:
            raise DimensionError('%s has shape %s, config needs %s' % (name, params[name].shape, shape))


def make_memory_tokens(x_f, params, config):
    """
    Row i is ReLU(X_f W_i + b_i), with W_i stored as (d_features, d_model).
    ``x_f`` is one vector (d_features,) or a batch (B, d_features); the result
    is (n_memory, d_model) or (B, n_memory, d_model).
    """
    if config.variant == 'query_only':
        raise ConfigError('query_only models have no memory tokens')
    x_f = nx.as_tensor(x_f)
    if x_f.shape[-1] != config.d_features or x_f.ndim not in (1, 2):
        raise DimensionError('dense features of shape %s do not match d_features=%d' % (
            x_f.shape, config.d_features))
    single = x_f.ndim == 1
    batch = 1 if single else x_f.shape[0]
    if single:
        x_f = nx.reshape(x_f, (1, config.d_features))

    tokens = None
    for index in range(config.n_memory):
        projected = nx.matmul(x_f, params['memory.%d.weight' % index])
        token = nx.relu(nx.add(projected, params['memory.%d.bias' % index]))
        token = nx.reshape(token, (batch, 1, config.d_model))
        tokens = token if tokens is None else nx.concat_rows(tokens, token)
    if tokens is None:
        tokens = nx.Tensor(np.zeros((batch, 0, config.d_model)))
    if single:
        tokens = nx.reshape(tokens, (config.n_memory, config.d_model))
    return tokens


def _split_heads(x, n_heads):
    batch, length, width = x.shape
    x = nx.reshape(x, (batch, length, n_heads, width // n_heads))
    return nx.permute(x, (0, 2, 1, 3))


def _merge_heads(x):
    batch, n_heads, length, d_head = x.shape
    x = nx.permute(x, (0, 2, 1, 3))
    return nx.reshape(x, (batch, length, n_heads * d_head))


def attention_layer(h, mask, layer_params, n_heads, dropout=0.0, rng=None, attention_probs=None):
    """
    Pre-norm multi-head self-attention block with residual connection.

    ``h`` is (T, d) or (B, T, d) and ``mask`` (T,) or (B, T) marks the
    positions every row may attend to. Memory positions are ordinary rows
    here: projected by the same W_Q, W_K, W_V, attending and attended to.
    When ``attention_probs`` is a list, the (B, heads, T, T) probabilities
    are appended to it.
    """
    h = nx.as_tensor(h)
    mask = np.asarray(mask, dtype=bool)
    single = h.ndim == 2
    if single:
        h = nx.reshape(h, (1,) + h.shape)
        mask = mask[None, :]
    if mask.shape != h.shape[:2]:
        raise DimensionError('attention mask %s does not fit hidden states %s' % (mask.shape, h.shape))

    normed = nx.layer_norm(h, layer_params['attention.norm.gain'], layer_params['attention.norm.bias'])
    query = _split_heads(nx.matmul(normed, layer_params['attention.query']), n_heads)
    key = _split_heads(nx.matmul(normed, layer_params['attention.key']), n_heads)
    value = _split_heads(nx.matmul(normed, layer_params['attention.value']), n_heads)

    d_head = h.shape[-1] // n_heads
    scores = nx.scale(nx.matmul(query, nx.transpose(key)), 1.0 / math.sqrt(d_head))
    probs = nx.softmax_rows(scores, mask[:, None, None, :])
    if attention_probs is not None:
        attention_probs.append(probs.data)
    context = _merge_heads(nx.matmul(probs, value))
    out = nx.matmul(context, layer_params['attention.output'])
    if dropout:
        out = nx.dropout(out, dropout, rng)
    out = nx.add(h, out)
    if single:
        out = nx.reshape(out, out.shape[1:])
    return out


def feed_forward(h, layer_params, dropout=0.0, rng=None):
    """
    Pre-norm GEGLU block: (GELU(x W_gate) * x W_linear) W_output + h.
    """
    normed = nx.layer_norm(h, layer_params['feed_forward.norm.gain'], layer_params['feed_forward.norm.bias'])
    gate = nx.gelu(nx.matmul(normed, layer_params['feed_forward.gate']))
    linear = nx.matmul(normed, layer_params['feed_forward.linear'])
    out = nx.matmul(nx.mul(gate, linear), layer_params['feed_forward.output'])
    if dropout:
        out = nx.dropout(out, dropout, rng)
    return nx.add(h, out)


def pool(y, mask):
    """
    Mean over the unmasked rows of ``y``.
    """
    return nx.masked_mean_rows(y, mask)


def mlp_head(x, params, config):
    for index in range(config.n_mlp_layers):
        x = nx.gelu(nx.add(nx.matmul(x, params['head.%d.weight' % index]), params['head.%d.bias' % index]))
    return nx.add(nx.matmul(x, params['classifier.weight']), params['classifier.bias'])


def loss(logits, labels):
    """
    Softmax cross-entropy, averaged over the batch.
    """
    logits = nx.as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim == 1:
        logits = nx.reshape(logits, (1, logits.shape[0]))
        labels = labels.reshape(1)
    return nx.softmax_cross_entropy(logits, labels)


def _token_arrays(tokens):
    if isinstance(tokens, TokenSequence):
        return np.array([tokens.ids], dtype=np.int64), np.array([tokens.mask], dtype=bool), True
    ids, mask = tokens
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if ids.ndim == 1:
        return ids[None, :], mask[None, :], True
    return ids, mask, False


def _feature_array(x_f):
    if x_f is None:
        return None
    data = x_f.data if isinstance(x_f, nx.Tensor) else np.asarray(x_f, dtype=nx.DTYPE)
    if data.ndim == 1:
        data = data[None, :]
    return nx.Tensor(data)


class IntentTransformer(object):
    """
    Encoder + pooling + MLP head. Subclasses decide how dense features enter
    through ``extend_sequence`` (before the encoder layers) and
    ``head_input`` (after pooling).
    """
    variant = None

    def __init__(self, config, params):
        if self.variant is not None and config.variant != self.variant:
            raise ConfigError('%s cannot run a %s config' % (type(self).__name__, config.variant))
        check_params(config, params)
        self.config = config
        self.params = params

    def extend_sequence(self, h, mask, features):
        return h, mask

    def head_input(self, pooled, features):
        return pooled

    def query_mask(self, mask):
        if self.config.share_sequence_budget:
            mask = mask.copy()
            mask[:, self.config.query_positions:] = False
        return mask

    def encode(self, ids, mask, features=None, training=False, rng=None, attention_probs=None):
        """
        Returns the final hidden states (B, T, d) and the (B, T) mask of the
        positions they cover.
        """
        config, params = self.config, self.params
        if ids.shape[1:] != (config.seq_len,) or mask.shape != ids.shape:
            raise DimensionError('token ids %s do not match seq_len=%d' % (ids.shape, config.seq_len))
        dropout = config.dropout if training else 0.0

        mask = self.query_mask(mask)
        h = nx.add(nx.take_rows(params['embedding.tokens'], ids), params['embedding.positions'])
        if dropout:
            h = nx.dropout(h, dropout, rng)
        h, mask = self.extend_sequence(h, mask, features)
        for index in range(config.n_layers):
            layer_params = params.layer(index)
            h = attention_layer(h, mask, layer_params, config.n_heads, dropout, rng, attention_probs)
            h = feed_forward(h, layer_params, dropout, rng)
        h = nx.layer_norm(h, params['final_norm.gain'], params['final_norm.bias'])
        return h, mask

    def pooling_mask(self, mask):
        if not self.config.pool_memory and self.config.n_memory:
            mask = mask.copy()
            mask[:, self.config.seq_len:] = False
        return mask

    def logits(self, ids, mask, features=None, training=False, rng=None, attention_probs=None):
        features = _feature_array(features)
        h, full_mask = self.encode(ids, mask, features, training, rng, attention_probs)
        pooled = pool(h, self.pooling_mask(full_mask))
        return mlp_head(self.head_input(pooled, features), self.params, self.config)

    def loss(self, ids, mask, features, labels, training=False, rng=None):
        return loss(self.logits(ids, mask, features, training, rng), labels)

    def check_queries(self, mask):
        """
        Rejects empty queries unless memory tokens give them positions to
        attend to and pool over.
        """
        empty = np.flatnonzero(~np.asarray(mask, dtype=bool).any(axis=1))
        if empty.size and not (self.config.n_memory and self.config.pool_memory):
            raise DataError('%d empty quer%s (row %d first) cannot be classified by a %s model without memory '
                            'tokens' % (empty.size, 'y' if empty.size == 1 else 'ies', empty[0], self.config.variant))

    def predict_proba(self, ids, mask, features=None, batch_size=256):
        """
        Class probabilities (N, n_class), evaluated in order without a tape.
        """
        self.check_queries(mask)
        chunks = []
        for start in range(0, ids.shape[0], batch_size):
            stop = start + batch_size
            batch_features = None if features is None else features[start:stop]
            logits = self.logits(ids[start:stop], mask[start:stop], batch_features).data
            shifted = logits - logits.max(axis=1, keepdims=True)
            exps = np.exp(shifted)
            chunks.append(exps / exps.sum(axis=1, keepdims=True))
        if not chunks:
            return np.zeros((0, self.config.n_class))
        return np.concatenate(chunks, axis=0)


class QueryOnlyTransformer(IntentTransformer):
    variant = 'query_only'


class LateFusionTransformer(IntentTransformer):
    variant = 'late_fusion'

    def head_input(self, pooled, features):
        if features is None:
            raise ConfigError('late_fusion models need dense features')
        if features.shape[-1] != self.config.d_features or features.shape[0] != pooled.shape[0]:
            raise DimensionError('dense features %s do not match d_features=%d' % (
                features.shape, self.config.d_features))
        return nx.concat_cols(pooled, features)


class VSITransformer(IntentTransformer):
    variant = 'vsi'

    def extend_sequence(self, h, mask, features):
        if features is None:
            raise ConfigError('vsi models need dense features')
        if not self.config.n_memory:
            return h, mask
        memory = make_memory_tokens(features, self.params, self.config)
        if memory.shape[0] != h.shape[0]:
            raise DimensionError('%d feature rows for %d queries' % (memory.shape[0], h.shape[0]))
        full_mask = np.concatenate([mask, np.ones((mask.shape[0], self.config.n_memory), dtype=bool)], axis=1)
        return nx.concat_rows(h, memory), full_mask


def build_model(config, params):
    from .utils import get_model_class

    return get_model_class(config.variant)(config, params)


def encoder_forward(tokens, x_f, config, params):
    """
    Final hidden states for one TokenSequence, (L + n_memory, d_model), or
    for an ``(ids, mask)`` batch, (B, L + n_memory, d_model).
    """
    ids, mask, single = _token_arrays(tokens)
    h, _ = build_model(config, params).encode(ids, mask, _feature_array(x_f))
    if single:
        h = nx.reshape(h, h.shape[1:])
    return h


def classify(pooled, x_f, config, params):
    """
    Logits from a pooled vector (d_model,) or batch (B, d_model).
    """
    pooled = nx.as_tensor(pooled)
    single = pooled.ndim == 1
    if single:
        pooled = nx.reshape(pooled, (1, pooled.shape[0]))
    model = build_model(config, params)
    logits = mlp_head(model.head_input(pooled, _feature_array(x_f)), params, config)
    if single:
        logits = nx.reshape(logits, (config.n_class,))
    return logits
