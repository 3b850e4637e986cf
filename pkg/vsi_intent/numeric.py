# -*- coding: utf-8 -*-
"""
Dense 64-bit tensors with a reverse-mode computation tape.

Every primitive below computes its value with numpy and, when a tape is
active and one of its inputs requires a gradient, records a closure mapping
the output gradient to the input gradients. ``ComputationTape.backward``
replays those closures in exact reverse order.

Broadcasting is limited to the row-wise rule: the second operand of ``add``
and ``mul`` may have a shape equal to the trailing dimensions of the first
(bias vectors, position tables shared over a batch).
"""
import contextvars
import math

import numpy as np

from .exceptions import DimensionError, InvalidMaskError, NonFiniteError


DTYPE = np.float64

# tanh approximation of GELU.
GELU_SCALE = math.sqrt(2.0 / math.pi)
GELU_CUBIC = 0.044715

LAYER_NORM_EPS = 1e-6

_active_tape = contextvars.ContextVar('vsi_intent_tape', default=None)


class Tensor(object):
    __slots__ = ('data', 'name', 'requires_grad')

    def __init__(self, data, name=None, requires_grad=False):
        self.data = np.array(data, dtype=DTYPE)
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data.copy()

    def __repr__(self):
        label = ' %s' % self.name if self.name else ''
        return '<Tensor%s shape=%s>' % (label, self.shape)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data, name):
    return Tensor(data, name=name, requires_grad=True)


class ComputationTape(object):
    """
    Ordered record of the primitive ops run while the tape is active.

    Usage::

        with ComputationTape() as tape:
            loss = model_loss(...)
        grads = tape.backward(loss, params)
    """

    def __init__(self):
        self.entries = []
        self._token = None

    def __enter__(self):
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc_info):
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self):
        return len(self.entries)

    def record(self, output, inputs, backward_fn):
        self.entries.append((output, inputs, backward_fn))

    def leaves(self):
        """
        Returns the named tensors requiring gradients that were read by the
        recorded ops, in first-use order.
        """
        produced = set(id(output) for output, _, _ in self.entries)
        seen = {}
        for _, inputs, _ in self.entries:
            for tensor in inputs:
                if tensor.requires_grad and tensor.name and id(tensor) not in produced:
                    seen.setdefault(tensor.name, tensor)
        return seen

    def backward(self, loss, params=None):
        """
        Returns a map of parameter name to gradient Tensor.

        When ``params`` (name -> Tensor) is given every one of them gets an
        entry, zero if the loss does not depend on it.
        """
        if loss.size != 1 or loss.ndim > 1:
            raise DimensionError('backward needs a scalar loss, got shape %s' % (loss.shape,))

        grads = {id(loss): np.ones_like(loss.data)}
        for output, inputs, backward_fn in reversed(self.entries):
            upstream = grads.get(id(output))
            if upstream is None:
                continue
            for tensor, grad in zip(inputs, backward_fn(upstream)):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad

        targets = params if params is not None else self.leaves()
        result = {}
        for name, tensor in targets.items():
            grad = grads.get(id(tensor))
            if grad is None:
                grad = np.zeros_like(tensor.data)
            result[name] = Tensor(grad, name=name)
        return result


def current_tape():
    return _active_tape.get()


def _result(data, op_name, inputs, backward_fn):
    if not np.all(np.isfinite(data)):
        raise NonFiniteError('%s produced a non-finite value' % op_name)
    out = Tensor(data, requires_grad=any(tensor.requires_grad for tensor in inputs))
    tape = _active_tape.get()
    if tape is not None and out.requires_grad:
        tape.record(out, inputs, backward_fn)
    return out


def _check_rowwise(a, b, op_name):
    if a.shape == b.shape:
        return
    if b.ndim < a.ndim and a.shape[a.ndim - b.ndim:] == b.shape:
        return
    raise DimensionError('%s: shapes %s and %s do not agree' % (op_name, a.shape, b.shape))


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    return grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_rowwise(a, b, 'add')

    def backward(grad):
        return grad, _unbroadcast(grad, b.shape)

    return _result(a.data + b.data, 'add', (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_rowwise(a, b, 'sub')

    def backward(grad):
        return grad, -_unbroadcast(grad, b.shape)

    return _result(a.data - b.data, 'sub', (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_rowwise(a, b, 'mul')

    def backward(grad):
        return grad * b.data, _unbroadcast(grad * a.data, b.shape)

    return _result(a.data * b.data, 'mul', (a, b), backward)


def scale(x, factor):
    x = as_tensor(x)
    factor = float(factor)

    def backward(grad):
        return (grad * factor,)

    return _result(x.data * factor, 'scale', (x,), backward)


def matmul(a, b):
    """
    Matrix product over the last two axes.

    ``a`` may carry leading batch axes; ``b`` is either a plain matrix shared
    across the batch or has exactly the same leading axes as ``a``.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError('matmul needs matrices, got %s and %s' % (a.shape, b.shape))
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError('matmul: inner dimensions %s and %s differ' % (a.shape, b.shape))
    if b.ndim > 2 and b.shape[:-2] != a.shape[:-2]:
        raise DimensionError('matmul: batch axes %s and %s differ' % (a.shape, b.shape))

    def backward(grad):
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return grad_a, _unbroadcast(grad_b, b.shape)

    return _result(np.matmul(a.data, b.data), 'matmul', (a, b), backward)


def transpose(x):
    x = as_tensor(x)

    def backward(grad):
        return (np.swapaxes(grad, -1, -2),)

    return _result(np.swapaxes(x.data, -1, -2), 'transpose', (x,), backward)


def reshape(x, shape):
    x = as_tensor(x)
    original = x.shape
    try:
        data = x.data.reshape(shape)
    except ValueError as error:
        raise DimensionError('reshape: %s' % error)

    def backward(grad):
        return (grad.reshape(original),)

    return _result(data, 'reshape', (x,), backward)


def permute(x, axes):
    x = as_tensor(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError('permute: %s is not a permutation of %d axes' % (axes, x.ndim))
    inverse = tuple(np.argsort(axes))

    def backward(grad):
        return (np.transpose(grad, inverse),)

    return _result(np.transpose(x.data, axes), 'permute', (x,), backward)


def _concat(a, b, axis, op_name):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != b.ndim or a.ndim < 2:
        raise DimensionError('%s: ranks of %s and %s differ' % (op_name, a.shape, b.shape))
    other_a = a.shape[:axis % a.ndim] + a.shape[axis % a.ndim + 1:]
    other_b = b.shape[:axis % b.ndim] + b.shape[axis % b.ndim + 1:]
    if other_a != other_b:
        raise DimensionError('%s: shapes %s and %s do not agree' % (op_name, a.shape, b.shape))
    split = a.shape[axis]

    def backward(grad):
        return np.split(grad, [split], axis=axis)

    return _result(np.concatenate([a.data, b.data], axis=axis), op_name, (a, b), backward)


def concat_rows(a, b):
    return _concat(a, b, -2, 'concat_rows')


def concat_cols(a, b):
    return _concat(a, b, -1, 'concat_cols')


def slice_rows(x, start, stop):
    x = as_tensor(x)
    if x.ndim < 2 or not 0 <= start <= stop <= x.shape[-2]:
        raise DimensionError('slice_rows: [%d:%d] out of range for %s' % (start, stop, x.shape))

    def backward(grad):
        full = np.zeros_like(x.data)
        full[..., start:stop, :] = grad
        return (full,)

    return _result(x.data[..., start:stop, :].copy(), 'slice_rows', (x,), backward)


def take_rows(table, ids):
    """
    Embedding lookup: gathers rows of ``table`` for every integer in ``ids``.
    """
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError('take_rows needs a 2-d table, got %s' % (table.shape,))
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError('take_rows: ids outside [0, %d)' % table.shape[0])

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, grad)
        return (full,)

    return _result(table.data[ids], 'take_rows', (table,), backward)


def relu(x):
    x = as_tensor(x)
    active = x.data > 0

    def backward(grad):
        return (grad * active,)

    return _result(np.where(active, x.data, 0.0), 'relu', (x,), backward)


def gelu(x):
    x = as_tensor(x)
    inner = GELU_SCALE * (x.data + GELU_CUBIC * x.data ** 3)
    tanh = np.tanh(inner)

    def backward(grad):
        d_inner = GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x.data ** 2)
        local = 0.5 * (1.0 + tanh) + 0.5 * x.data * (1.0 - tanh ** 2) * d_inner
        return (grad * local,)

    return _result(0.5 * x.data * (1.0 + tanh), 'gelu', (x,), backward)


def softmax_rows(x, mask=None):
    """
    Softmax over the last axis.

    ``mask`` is a boolean array broadcastable to ``x`` (True = attendable).
    Masked entries come out exactly 0; a row with nothing attendable raises
    InvalidMaskError.
    """
    x = as_tensor(x)
    if mask is None:
        mask = np.ones(x.shape, dtype=bool)
    else:
        try:
            mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        except ValueError:
            raise DimensionError('softmax_rows: mask %s does not fit %s' % (np.shape(mask), x.shape))
    if not mask.any(axis=-1).all():
        raise InvalidMaskError('softmax_rows: a row has every entry masked')

    shifted = np.where(mask, x.data, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    exps = np.where(mask, np.exp(shifted), 0.0)
    probs = exps / exps.sum(axis=-1, keepdims=True)

    def backward(grad):
        inner = (grad * probs).sum(axis=-1, keepdims=True)
        return (probs * (grad - inner),)

    return _result(probs, 'softmax_rows', (x,), backward)


def layer_norm(x, gamma, beta, eps=LAYER_NORM_EPS):
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise DimensionError('layer_norm: gain/bias must be (%d,)' % x.shape[-1])
    width = x.shape[-1]
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def backward(grad):
        g_normed = grad * gamma.data
        grad_x = inv_std / width * (
            width * g_normed
            - g_normed.sum(axis=-1, keepdims=True)
            - normed * (g_normed * normed).sum(axis=-1, keepdims=True)
        )
        flat = grad.reshape(-1, width)
        grad_gamma = (flat * normed.reshape(-1, width)).sum(axis=0)
        grad_beta = flat.sum(axis=0)
        return grad_x, grad_gamma, grad_beta

    return _result(normed * gamma.data + beta.data, 'layer_norm', (x, gamma, beta), backward)


def masked_mean_rows(x, mask):
    """
    Mean over the row axis (-2) of ``x`` restricted to rows where ``mask``
    (shape ``x.shape[:-1]``) is True. Masked rows never reach the output.
    """
    x = as_tensor(x)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[:-1]:
        raise DimensionError('masked_mean_rows: mask %s does not fit %s' % (mask.shape, x.shape))
    counts = mask.sum(axis=-1)
    if np.any(counts == 0):
        raise InvalidMaskError('masked_mean_rows: empty mask')
    weights = mask[..., None] / counts[..., None, None].astype(DTYPE)

    def backward(grad):
        return (grad[..., None, :] * weights,)

    kept = np.where(mask[..., None], x.data, 0.0)
    return _result(kept.sum(axis=-2) / counts[..., None], 'masked_mean_rows', (x,), backward)


def sum_all(x):
    x = as_tensor(x)

    def backward(grad):
        return (np.broadcast_to(grad, x.shape).copy(),)

    return _result(np.array(x.data.sum()), 'sum_all', (x,), backward)


def dropout(x, rate, rng):
    x = as_tensor(x)
    if rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(grad):
        return (grad * keep,)

    return _result(x.data * keep, 'dropout', (x,), backward)


def softmax_cross_entropy(logits, labels):
    """
    Mean over the batch of -log softmax(logits)[label].
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError('softmax_cross_entropy: logits %s vs labels %s' % (logits.shape, labels.shape))
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise DimensionError('softmax_cross_entropy: label outside [0, %d)' % logits.shape[1])

    batch = logits.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(batch)
    value = -log_probs[rows, labels].mean()

    def backward(grad):
        local = np.exp(log_probs)
        local[rows, labels] -= 1.0
        return (grad * local / batch,)

    return _result(np.array(value), 'softmax_cross_entropy', (logits,), backward)


def finite_difference_grad(f, params, eps=1e-5):
    """
    Central-difference gradient of the scalar function ``f(params)`` with
    respect to every scalar of every tensor in ``params`` (name -> Tensor).

    Slow; meant for tests.
    """
    grads = {}
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        grad = np.zeros_like(flat)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + eps
            plus = _scalar(f(params))
            flat[index] = original - eps
            minus = _scalar(f(params))
            flat[index] = original
            grad[index] = (plus - minus) / (2.0 * eps)
        grads[name] = Tensor(grad.reshape(tensor.shape), name=name)
    return grads


def max_relative_error(analytic, numeric):
    """
    max |g_a - g_n| / max(1, |g_a|, |g_n|) over every scalar in both maps.
    """
    worst = 0.0
    for name, tensor in analytic.items():
        a = tensor.data
        n = numeric[name].data
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        if a.size:
            worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def _scalar(value):
    if isinstance(value, Tensor):
        return value.item()
    return float(value)
