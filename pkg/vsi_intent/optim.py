# -*- coding: utf-8 -*-
import math

import numpy as np

from .exceptions import ConfigError


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(grad.data ** 2)) for grad in grads.values()))


def clip_grad_norm(grads, max_norm):
    """
    Scales every gradient by ``max_norm / norm`` when the global L2 norm
    exceeds ``max_norm``. Returns the norm before clipping.
    """
    norm = global_norm(grads)
    if max_norm and norm > max_norm:
        factor = max_norm / norm
        for grad in grads.values():
            grad.data *= factor
    return norm


class Optimizer(object):
    """
    Updates a Params mapping in place from a name -> gradient mapping.
    Subclasses are registered under VSI_INTENT_OPTIMIZERS.
    """

    def __init__(self, params, learning_rate):
        if learning_rate < 0:
            raise ConfigError('learning rate must not be negative, got %r' % learning_rate)
        self.params = params
        self.learning_rate = learning_rate
        self.steps = 0

    def step(self, grads):
        self.steps += 1
        for name, tensor in self.params.items():
            self.update(name, tensor, grads[name].data)

    def update(self, name, tensor, grad):
        raise NotImplementedError


class SGD(Optimizer):

    def update(self, name, tensor, grad):
        tensor.data -= self.learning_rate * grad


class Adam(Optimizer):
    beta1 = 0.9
    beta2 = 0.999
    epsilon = 1e-8

    def __init__(self, params, learning_rate):
        super().__init__(params, learning_rate)
        self.first_moment = {name: np.zeros_like(tensor.data) for name, tensor in params.items()}
        self.second_moment = {name: np.zeros_like(tensor.data) for name, tensor in params.items()}

    def update(self, name, tensor, grad):
        m = self.first_moment[name]
        v = self.second_moment[name]
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1 ** self.steps)
        v_hat = v / (1.0 - self.beta2 ** self.steps)
        tensor.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
