"""Dense float64 tensors with reverse-mode gradients.

Every op is a ``Function`` subclass with an array-level ``forward`` and a
``backward`` that maps the output gradient to one gradient per input.
``Tensor.backward`` walks the recorded graph in reverse topological order.
"""
import logging
from contextlib import contextmanager

import numpy as np

from forecast.exceptions import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

DTYPE = np.float64

_state = {"grad_enabled": True}


@contextmanager
def no_grad():
    previous = _state["grad_enabled"]
    _state["grad_enabled"] = False
    try:
        yield
    finally:
        _state["grad_enabled"] = previous


def is_grad_enabled():
    return _state["grad_enabled"]


class Tensor:
    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._fn = None

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def T(self):
        return self.transpose()

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward without seed gradient", self.shape)
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=DTYPE)
        if grad.shape != self.shape:
            raise ShapeError("backward seed", grad.shape, self.shape)

        grads = {id(self): grad}
        for node in _reverse_topological_order(self):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node._fn is None:
                if node.requires_grad:
                    if node.grad is None:
                        node.grad = node_grad.copy()
                    else:
                        node.grad = node.grad + node_grad
                continue
            input_grads = node._fn.backward(node_grad)
            for tensor, tensor_grad in zip(node._fn.inputs, input_grads):
                if tensor_grad is None or not tensor.requires_grad:
                    continue
                tensor_grad = _unbroadcast(tensor_grad, tensor.shape)
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + tensor_grad
                else:
                    grads[key] = tensor_grad

    def __add__(self, other):
        return Add.apply(self, as_tensor(other))

    def __radd__(self, other):
        return Add.apply(as_tensor(other), self)

    def __sub__(self, other):
        return Sub.apply(self, as_tensor(other))

    def __rsub__(self, other):
        return Sub.apply(as_tensor(other), self)

    def __mul__(self, other):
        return Mul.apply(self, as_tensor(other))

    def __rmul__(self, other):
        return Mul.apply(as_tensor(other), self)

    def __truediv__(self, other):
        return Div.apply(self, as_tensor(other))

    def __rtruediv__(self, other):
        return Div.apply(as_tensor(other), self)

    def __neg__(self):
        return Neg.apply(self)

    def __pow__(self, exponent):
        return PowScalar.apply(self, exponent=float(exponent))

    def __matmul__(self, other):
        return MatMul.apply(self, as_tensor(other))

    def __getitem__(self, key):
        return GetItem.apply(self, key=key)

    def sum(self, axis=None, keepdims=False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Transpose.apply(self, axes=axes or None)

    def swap_last(self):
        axes = list(range(self.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(tuple(axes))

    def tanh(self):
        return Tanh.apply(self)

    def sigmoid(self):
        return Sigmoid.apply(self)

    def relu(self):
        return Relu.apply(self)

    def exp(self):
        return Exp.apply(self)

    def log(self):
        return Log.apply(self)


class Parameter(Tensor):
    def __init__(self, data, name=None):
        super().__init__(np.array(data, dtype=DTYPE), requires_grad=True, name=name)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _reverse_topological_order(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, finished = stack.pop()
        if finished:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        if node._fn is not None:
            for tensor in node._fn.inputs:
                if tensor.requires_grad and id(tensor) not in seen:
                    stack.append((tensor, False))
    return reversed(order)


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1
    )
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_check(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


class Function:
    def __init__(self, *inputs):
        self.inputs = inputs

    @classmethod
    def apply(cls, *inputs, **params):
        fn = cls(*inputs)
        out = fn.forward(*(tensor.data for tensor in inputs), **params)
        track = is_grad_enabled() and any(t.requires_grad for t in inputs)
        result = Tensor(out, requires_grad=track)
        if track:
            result._fn = fn
        return result

    def forward(self, *arrays, **params):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


class Add(Function):
    def forward(self, a, b):
        _broadcast_check("add", a, b)
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        _broadcast_check("sub", a, b)
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        _broadcast_check("mul", a, b)
        self.saved = (a, b)
        return a * b

    def backward(self, grad):
        a, b = self.saved
        return grad * b, grad * a


class Div(Function):
    def forward(self, a, b):
        _broadcast_check("div", a, b)
        self.saved = (a, b)
        return a / b

    def backward(self, grad):
        a, b = self.saved
        return grad / b, -grad * a / (b * b)


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class PowScalar(Function):
    def forward(self, a, exponent):
        self.saved = (a, exponent)
        return a ** exponent

    def backward(self, grad):
        a, exponent = self.saved
        return (grad * exponent * a ** (exponent - 1.0),)


class Exp(Function):
    def forward(self, a):
        self.out = np.exp(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, a):
        self.saved = a
        return np.log(a)

    def backward(self, grad):
        return (grad / self.saved,)


class Tanh(Function):
    def forward(self, a):
        self.out = np.tanh(a)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class Sigmoid(Function):
    def forward(self, a):
        # split by sign so exp never overflows
        out = np.empty_like(a)
        positive = a >= 0
        out[positive] = 1.0 / (1.0 + np.exp(-a[positive]))
        exp_a = np.exp(a[~positive])
        out[~positive] = exp_a / (1.0 + exp_a)
        self.out = out
        return out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Relu(Function):
    def forward(self, a):
        self.mask = a > 0
        return np.where(self.mask, a, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError("matmul", a.shape, b.shape)
        self.saved = (a, b)
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.saved
        return (
            np.matmul(grad, np.swapaxes(b, -1, -2)),
            np.matmul(np.swapaxes(a, -1, -2), grad),
        )


class Sum(Function):
    def forward(self, a, axis=None, keepdims=False):
        self.saved = (a.shape, axis, keepdims)
        return a.sum(axis=axis, keepdims=keepdims)

    def backward(self, grad):
        shape, axis, keepdims = self.saved
        if not keepdims and axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, shape).copy(),)


class Reshape(Function):
    def forward(self, a, shape):
        self.saved = a.shape
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.saved),)


class Transpose(Function):
    def forward(self, a, axes=None):
        self.axes = axes if axes is not None else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, a, key):
        self.saved = (a.shape, key)
        return a[key]

    def backward(self, grad):
        shape, key = self.saved
        out = np.zeros(shape, dtype=DTYPE)
        parts = key if isinstance(key, tuple) else (key,)
        if any(isinstance(part, (list, np.ndarray)) for part in parts):
            # fancy indices may repeat
            np.add.at(out, key, grad)
        else:
            out[key] = grad
        return (out,)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.sizes = [array.shape[axis] for array in arrays]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError:
            raise ShapeError("concat", *(a.shape for a in arrays)) from None

    def backward(self, grad):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, splits, axis=self.axis))


class Stack(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        try:
            return np.stack(arrays, axis=axis)
        except ValueError:
            raise ShapeError("stack", *(a.shape for a in arrays)) from None

    def backward(self, grad):
        count = grad.shape[self.axis]
        return tuple(np.take(grad, i, axis=self.axis) for i in range(count))


class Softmax(Function):
    def forward(self, a, mask=None):
        if np.isnan(a).any() or np.isposinf(a).any():
            raise NonFiniteError("softmax input contains NaN or +inf")
        if mask is not None:
            a = np.where(mask, a, -np.inf)
        shifted = a - a.max(axis=-1, keepdims=True)
        exp = np.exp(shifted)
        self.out = exp / exp.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        s = self.out
        return (s * (grad - (grad * s).sum(axis=-1, keepdims=True)),)


class Conv2d(Function):
    """Valid, stride-1 cross-correlation over NCHW input."""

    def forward(self, x, w):
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
            raise ShapeError("conv2d", x.shape, w.shape)
        n, c, h, width = x.shape
        out_ch, _, kh, kw = w.shape
        oh, ow = h - kh + 1, width - kw + 1
        if oh < 1 or ow < 1:
            raise ShapeError("conv2d", x.shape, w.shape)
        windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
        self.saved = (x.shape, w, cols, (oh, ow))
        out = cols @ w.reshape(out_ch, -1).T
        return out.reshape(n, oh, ow, out_ch).transpose(0, 3, 1, 2)

    def backward(self, grad):
        x_shape, w, cols, (oh, ow) = self.saved
        n, c, _, _ = x_shape
        out_ch, _, kh, kw = w.shape
        grad2 = grad.transpose(0, 2, 3, 1).reshape(-1, out_ch)
        grad_w = (grad2.T @ cols).reshape(w.shape)
        grad_cols = (grad2 @ w.reshape(out_ch, -1)).reshape(n, oh, ow, c, kh, kw)
        grad_x = np.zeros(x_shape, dtype=DTYPE)
        for i in range(kh):
            for j in range(kw):
                grad_x[:, :, i:i + oh, j:j + ow] += grad_cols[:, :, :, :, i, j].transpose(
                    0, 3, 1, 2
                )
        return grad_x, grad_w


class MaxPool2d(Function):
    """Non-overlapping pooling; trailing rows/columns that do not fill a window are dropped."""

    def forward(self, x, size=2):
        n, c, h, w = x.shape
        oh, ow = h // size, w // size
        if oh < 1 or ow < 1:
            raise ShapeError("max_pool2d", x.shape)
        cropped = x[:, :, :oh * size, :ow * size]
        blocks = cropped.reshape(n, c, oh, size, ow, size).transpose(0, 1, 2, 4, 3, 5)
        blocks = blocks.reshape(n, c, oh, ow, size * size)
        self.argmax = blocks.argmax(axis=-1)
        self.saved = (x.shape, size, oh, ow)
        return np.take_along_axis(blocks, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        x_shape, size, oh, ow = self.saved
        n, c, _, _ = x_shape
        routed = np.zeros((n, c, oh, ow, size * size), dtype=DTYPE)
        np.put_along_axis(routed, self.argmax[..., None], grad[..., None], axis=-1)
        routed = routed.reshape(n, c, oh, ow, size, size).transpose(0, 1, 2, 4, 3, 5)
        grad_x = np.zeros(x_shape, dtype=DTYPE)
        grad_x[:, :, :oh * size, :ow * size] = routed.reshape(n, c, oh * size, ow * size)
        return (grad_x,)


class CausalConv1d(Function):
    """Dilated 1-D convolution over NCT input, left-padded so output t sees inputs <= t."""

    def forward(self, x, w, dilation=1):
        if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
            raise ShapeError("causal_conv1d", x.shape, w.shape)
        n, c, t = x.shape
        out_ch, _, k = w.shape
        pad = (k - 1) * dilation
        padded = np.concatenate([np.zeros((n, c, pad), dtype=DTYPE), x], axis=2)
        index = np.arange(t)[None, :] + dilation * np.arange(k)[:, None]
        cols = padded[:, :, index]  # (n, c, k, t)
        cols = cols.transpose(0, 3, 1, 2).reshape(n * t, c * k)
        self.saved = (x.shape, w, cols, index, pad)
        out = cols @ w.reshape(out_ch, -1).T
        return out.reshape(n, t, out_ch).transpose(0, 2, 1)

    def backward(self, grad):
        x_shape, w, cols, index, pad = self.saved
        n, c, t = x_shape
        out_ch, _, k = w.shape
        grad2 = grad.transpose(0, 2, 1).reshape(n * t, out_ch)
        grad_w = (grad2.T @ cols).reshape(w.shape)
        grad_cols = (grad2 @ w.reshape(out_ch, -1)).reshape(n, t, c, k).transpose(0, 2, 3, 1)
        grad_padded = np.zeros((n, c, t + pad), dtype=DTYPE)
        np.add.at(grad_padded, (slice(None), slice(None), index), grad_cols)
        return grad_padded[:, :, pad:], grad_w


ELEMENTWISE = {
    "add": Add,
    "sub": Sub,
    "mul": Mul,
    "tanh": Tanh,
    "sigmoid": Sigmoid,
    "relu": Relu,
    "exp": Exp,
}


def elementwise(op, *operands):
    try:
        fn = ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn.apply(*(as_tensor(operand) for operand in operands))


def matmul(a, b):
    return MatMul.apply(as_tensor(a), as_tensor(b))


def softmax_rows(x, mask=None):
    """Softmax along the last axis; ``mask`` marks the entries allowed to receive weight."""
    return Softmax.apply(as_tensor(x), mask=mask)


def concat(tensors, axis=0):
    return Concat.apply(*(as_tensor(t) for t in tensors), axis=axis)


def stack(tensors, axis=0):
    return Stack.apply(*(as_tensor(t) for t in tensors), axis=axis)


def conv2d(x, weight):
    return Conv2d.apply(as_tensor(x), weight)


def max_pool2d(x, size=2):
    return MaxPool2d.apply(as_tensor(x), size=size)


def causal_conv1d(x, weight, dilation=1):
    return CausalConv1d.apply(as_tensor(x), weight, dilation=dilation)


def mse_loss(prediction, target):
    diff = prediction - as_tensor(target)
    return (diff * diff).mean()


def mae(prediction, target):
    prediction = prediction.data if isinstance(prediction, Tensor) else prediction
    return float(np.mean(np.abs(np.asarray(prediction) - np.asarray(target))))
