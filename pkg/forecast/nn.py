"""Layers built on the tensor engine.

Modules register ``Parameter`` and child ``Module`` attributes on
assignment, so ``named_parameters`` yields dotted names such as
``encoder.0.W`` which double as snapshot keys.
"""
import logging

import numpy as np

from forecast.exceptions import ShapeError
from forecast.tensor import (
    Parameter,
    as_tensor,
    causal_conv1d,
    concat,
    conv2d,
    matmul,
    softmax_rows,
)

logger = logging.getLogger(__name__)


def glorot_uniform(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def he_normal(rng, fan_in, shape):
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Module:
    def __init__(self):
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)
        object.__setattr__(self, "fitted", False)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def named_parameters(self, prefix=""):
        for name, param in self._parameters.items():
            yield prefix + name, param
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix + name + ".")

    def parameters(self):
        return dict(self.named_parameters())

    def parameter_count(self):
        return sum(param.size for _, param in self.named_parameters())

    def buffers(self, prefix=""):
        for name, module in self._modules.items():
            yield from module.buffers(prefix + name + ".")

    def state_dict(self):
        state = {name: param.data.copy() for name, param in self.named_parameters()}
        for name, value in self.buffers():
            state[name] = np.asarray(value, dtype=float).copy()
        return state

    def load_state_dict(self, state):
        own = self.parameters()
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"missing tensors: {sorted(missing)}")
        for name, param in own.items():
            value = np.asarray(state[name], dtype=float)
            if value.shape != param.shape:
                raise ShapeError(f"load {name}", value.shape, param.shape)
            param.data = value.copy()
            param.grad = None
        self._load_buffers(state)
        self.fitted = True

    def _load_buffers(self, state, prefix=""):
        for name, module in self._modules.items():
            module._load_buffers(state, prefix + name + ".")

    def zero_grad(self):
        for _, param in self.named_parameters():
            param.grad = None

    def train(self, mode=True):
        object.__setattr__(self, "training", mode)
        for module in self._modules.values():
            module.train(mode)
        return self

    def eval(self):
        return self.train(False)


class ModuleList(Module):
    def __init__(self, modules=()):
        super().__init__()
        for module in modules:
            self.append(module)

    def append(self, module):
        setattr(self, str(len(self._modules)), module)

    def __getitem__(self, index):
        return list(self._modules.values())[index]

    def __len__(self):
        return len(self._modules)

    def __iter__(self):
        return iter(self._modules.values())


class Linear(Module):
    def __init__(self, in_features, out_features, rng, bias=True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.W = Parameter(glorot_uniform(rng, in_features, out_features))
        if bias:
            self.b = Parameter(np.zeros(out_features))
        else:
            self.b = None

    def forward(self, x):
        x = as_tensor(x)
        if x.shape[-1] != self.in_features:
            raise ShapeError("linear", x.shape, self.W.shape)
        y = matmul(x, self.W)
        if self.b is not None:
            y = y + self.b
        return y


class RNNCell(Module):
    def __init__(self, input_size, hidden_size, rng):
        super().__init__()
        self.hidden_size = hidden_size
        self.W = Parameter(glorot_uniform(rng, input_size, hidden_size))
        self.U = Parameter(glorot_uniform(rng, hidden_size, hidden_size))
        self.b = Parameter(np.zeros(hidden_size))

    def forward(self, x, h_prev):
        return (matmul(x, self.W) + matmul(h_prev, self.U) + self.b).tanh()


class LayerNorm(Module):
    def __init__(self, features, eps=1e-10):
        super().__init__()
        self.eps = eps
        self.gain = Parameter(np.ones(features))
        self.offset = Parameter(np.zeros(features))

    def normalize(self, x):
        mean = x.mean(axis=-1, keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered * (var + self.eps) ** -0.5

    def forward(self, x):
        return self.normalize(as_tensor(x)) * self.gain + self.offset


class MultiHeadAttention(Module):
    """Scaled dot-product attention over ``heads`` projections of width ``d_k``.

    Inputs are (batch, length, d_model). ``mask`` is a boolean
    (query_len, key_len) array of allowed positions. Per-head weights of the
    last call are kept in ``last_weights`` as (batch, heads, q, k).
    """

    def __init__(self, d_model, heads, d_k, rng, output_size=None):
        super().__init__()
        self.heads = heads
        self.d_k = d_k
        self.W_q = Parameter(glorot_uniform(rng, d_model, heads * d_k))
        self.W_k = Parameter(glorot_uniform(rng, d_model, heads * d_k))
        self.W_v = Parameter(glorot_uniform(rng, d_model, heads * d_k))
        self.W_h = Parameter(glorot_uniform(rng, heads * d_k, output_size or d_model))
        object.__setattr__(self, "last_weights", None)

    def _split(self, x):
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.heads, self.d_k).transpose(0, 2, 1, 3)

    def forward(self, query, key, value, mask=None):
        q = self._split(matmul(query, self.W_q))
        k = self._split(matmul(key, self.W_k))
        v = self._split(matmul(value, self.W_v))
        scores = matmul(q, k.swap_last()) * (1.0 / np.sqrt(self.d_k))
        weights = softmax_rows(scores, mask=mask)
        object.__setattr__(self, "last_weights", weights.data.copy())
        context = matmul(weights, v)
        batch, _, length, _ = context.shape
        merged = context.transpose(0, 2, 1, 3).reshape(batch, length, self.heads * self.d_k)
        return matmul(merged, self.W_h)


class Conv2d(Module):
    def __init__(self, in_channels, out_channels, kernel, rng):
        super().__init__()
        fan_in = in_channels * kernel * kernel
        self.W = Parameter(
            glorot_uniform(
                rng, fan_in, out_channels * kernel * kernel,
                shape=(out_channels, in_channels, kernel, kernel),
            )
        )
        self.b = Parameter(np.zeros(out_channels))

    def forward(self, x):
        return conv2d(x, self.W) + self.b.reshape(1, -1, 1, 1)


class CausalConv1d(Module):
    def __init__(self, in_channels, out_channels, kernel, dilation, rng):
        super().__init__()
        self.dilation = dilation
        self.W = Parameter(
            he_normal(rng, in_channels * kernel, (out_channels, in_channels, kernel))
        )
        self.b = Parameter(np.zeros(out_channels))

    def forward(self, x):
        return causal_conv1d(x, self.W, self.dilation) + self.b.reshape(1, -1, 1)


class BatchNorm1d(Module):
    """Batch norm over (batch, channels, time); statistics per channel."""

    def __init__(self, channels, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gain = Parameter(np.ones(channels))
        self.offset = Parameter(np.zeros(channels))
        object.__setattr__(self, "running_mean", np.zeros(channels))
        object.__setattr__(self, "running_var", np.ones(channels))

    def buffers(self, prefix=""):
        yield prefix + "running_mean", self.running_mean
        yield prefix + "running_var", self.running_var

    def _load_buffers(self, state, prefix=""):
        for name in ("running_mean", "running_var"):
            if prefix + name in state:
                object.__setattr__(self, name, np.asarray(state[prefix + name], dtype=float).copy())

    def forward(self, x):
        gain = self.gain.reshape(1, -1, 1)
        offset = self.offset.reshape(1, -1, 1)
        if not self.training:
            scale = 1.0 / np.sqrt(self.running_var + self.eps)
            shift = -self.running_mean * scale
            return (x * scale.reshape(1, -1, 1) + shift.reshape(1, -1, 1)) * gain + offset
        mean = x.mean(axis=(0, 2), keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=(0, 2), keepdims=True)
        count = x.shape[0] * x.shape[2]
        unbiased = var.data.reshape(-1) * count / max(count - 1, 1)
        object.__setattr__(
            self, "running_mean",
            (1 - self.momentum) * self.running_mean + self.momentum * mean.data.reshape(-1),
        )
        object.__setattr__(
            self, "running_var",
            (1 - self.momentum) * self.running_var + self.momentum * unbiased,
        )
        return centered * (var + self.eps) ** -0.5 * gain + offset


def concat_last(tensors):
    return concat(tensors, axis=-1)
