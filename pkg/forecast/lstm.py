"""Sequence-to-sequence LSTM forecasters with optional attention.

The encoder is a stack of LSTM layers over the encoder window; the final
states of its top layers seed the decoder layers. With attention the
decoder state queries the top encoder states and the context vector is
concatenated to the decoder output before the dense head.
"""
import logging
from dataclasses import dataclass

import numpy as np

from forecast.exceptions import NonFiniteError, NotTrainedError, ShapeError
from forecast.nn import Linear, Module, ModuleList, glorot_uniform
from forecast.tensor import (
    Parameter,
    Tensor,
    as_tensor,
    concat,
    matmul,
    mse_loss,
    no_grad,
    softmax_rows,
    stack,
)
from forecast.training import fit

logger = logging.getLogger(__name__)


def lstm_cell(layer, x, h_prev, c_prev):
    """One step of an LSTM layer holding fused ``W``, ``U``, ``b`` (gate order i, f, o, c)."""
    x, h_prev, c_prev = as_tensor(x), as_tensor(h_prev), as_tensor(c_prev)
    units = layer.U.shape[0]
    if x.shape[-1] != layer.W.shape[0] or h_prev.shape[-1] != units:
        raise ShapeError("lstm_cell", x.shape, h_prev.shape, layer.W.shape)
    gates = matmul(x, layer.W) + matmul(h_prev, layer.U) + layer.b
    i = gates[..., :units].sigmoid()
    f = gates[..., units:2 * units].sigmoid()
    o = gates[..., 2 * units:3 * units].sigmoid()
    candidate = gates[..., 3 * units:].tanh()
    c = f * c_prev + i * candidate
    h = o * c.tanh()
    if not np.isfinite(h.data).all():
        raise NonFiniteError("lstm_cell produced a non-finite hidden state")
    return h, c


class LSTMCell(Module):
    def __init__(self, input_size, hidden_size, rng, forget_bias=1.0):
        super().__init__()
        self.hidden_size = hidden_size
        self.W = Parameter(glorot_uniform(rng, input_size, 4 * hidden_size))
        self.U = Parameter(glorot_uniform(rng, hidden_size, 4 * hidden_size))
        bias = np.zeros(4 * hidden_size)
        bias[hidden_size:2 * hidden_size] = forget_bias
        self.b = Parameter(bias)

    def forward(self, x, h_prev, c_prev):
        return lstm_cell(self, x, h_prev, c_prev)

    def zero_state(self, batch):
        return (
            Tensor(np.zeros((batch, self.hidden_size))),
            Tensor(np.zeros((batch, self.hidden_size))),
        )


@dataclass
class LstmConfig:
    input_size: int
    encoder_units: tuple = (64, 64)
    decoder_units: tuple = (64,)
    attention: bool = True
    d_k: int = 32
    output_size: int = 2
    seed: int = 0

    def __post_init__(self):
        self.encoder_units = tuple(self.encoder_units)
        self.decoder_units = tuple(self.decoder_units)
        if not self.encoder_units or not self.decoder_units:
            raise ValueError("encoder and decoder need at least one layer")
        if len(self.decoder_units) > len(self.encoder_units):
            raise ValueError("decoder cannot have more layers than the encoder")
        paired = self.encoder_units[len(self.encoder_units) - len(self.decoder_units):]
        if paired != self.decoder_units:
            raise ValueError(
                f"decoder units {self.decoder_units} must match the top encoder "
                f"layers {paired}"
            )


class Seq2SeqLSTM(Module):
    def __init__(self, config):
        super().__init__()
        self.config = config
        self.kind = "mm_attention_lstm" if config.attention else "sts_lstm"
        rng = np.random.default_rng(config.seed)

        sizes = (config.input_size,) + config.encoder_units
        self.encoder = ModuleList(
            LSTMCell(sizes[i], sizes[i + 1], rng) for i in range(len(config.encoder_units))
        )
        sizes = (config.output_size,) + config.decoder_units
        self.decoder = ModuleList(
            LSTMCell(sizes[i], sizes[i + 1], rng) for i in range(len(config.decoder_units))
        )
        top = config.decoder_units[-1]
        if config.attention:
            memory = config.encoder_units[-1]
            self.W_q = Parameter(glorot_uniform(rng, top, config.d_k))
            self.W_k = Parameter(glorot_uniform(rng, memory, config.d_k))
            self.W_v = Parameter(glorot_uniform(rng, memory, config.d_k))
            self.head = Linear(top + config.d_k, config.output_size, rng)
        else:
            self.head = Linear(top, config.output_size, rng)
        self.last_attention = None

    @staticmethod
    def _batched(x, width, label):
        x = as_tensor(x)
        if x.ndim == 2:
            x = x.reshape(1, *x.shape)
        if x.ndim != 3 or x.shape[-1] != width:
            raise ShapeError(label, x.shape, (None, None, width))
        return x

    def encode(self, X_e):
        """Run the encoder stack; returns top-layer states H and per-layer final (h, c)."""
        X_e = self._batched(X_e, self.config.input_size, "encode")
        batch, length, _ = X_e.shape
        if length < 1:
            raise ShapeError("encode", X_e.shape)
        states = [cell.zero_state(batch) for cell in self.encoder]
        top_outputs = []
        for t in range(length):
            layer_input = X_e[:, t, :]
            for index, cell in enumerate(self.encoder):
                h, c = cell(layer_input, *states[index])
                states[index] = (h, c)
                layer_input = h
            top_outputs.append(layer_input)
        return stack(top_outputs, axis=1), states

    def initial_decoder_state(self, encoder_states):
        offset = len(self.encoder) - len(self.decoder)
        return [encoder_states[offset + j] for j in range(len(self.decoder))]

    def _memory(self, H):
        if not self.config.attention:
            return None
        if H is None:
            raise ValueError("attention decoding needs the encoder states H")
        return matmul(H, self.W_k), matmul(H, self.W_v)

    def decode_step(self, y_prev, states, memory):
        layer_input = y_prev
        new_states = []
        for cell, (h, c) in zip(self.decoder, states):
            h, c = cell(layer_input, h, c)
            new_states.append((h, c))
            layer_input = h
        weights = None
        if memory is not None:
            keys, values = memory
            batch = layer_input.shape[0]
            query = matmul(layer_input, self.W_q).reshape(batch, 1, self.config.d_k)
            scores = matmul(query, keys.swap_last()) * (1.0 / np.sqrt(self.config.d_k))
            weights = softmax_rows(scores)
            context = matmul(weights, values).reshape(batch, self.config.d_k)
            layer_input = concat([layer_input, context], axis=-1)
            weights = weights.data[:, 0, :]
        return self.head(layer_input), new_states, weights

    def decode(self, Y_d, states, H=None):
        """Teacher-forced decoding of every row of ``Y_d``."""
        Y_d = self._batched(Y_d, self.config.output_size, "decode")
        memory = self._memory(H)
        outputs, attention = [], []
        for u in range(Y_d.shape[1]):
            out, states, weights = self.decode_step(Y_d[:, u, :], states, memory)
            outputs.append(out)
            attention.append(weights)
        if memory is not None:
            self.last_attention = np.stack(attention, axis=1)
        return stack(outputs, axis=1)

    def forward(self, X_e, Y_d):
        H, states = self.encode(X_e)
        return self.decode(Y_d, self.initial_decoder_state(states), H)

    def forecast(self, X_e, horizon, teacher_forced=None):
        """Autoregressive forecast from a zero start token.

        Passing ``teacher_forced`` decoder inputs instead returns the
        teacher-forced outputs, a diagnostic that leaks ground truth.
        """
        if not self.fitted:
            raise NotTrainedError(f"{self.kind} has not been trained or loaded")
        if horizon < 1:
            raise ValueError(f"horizon must be positive, got {horizon}")
        single = np.ndim(X_e) == 2
        with no_grad():
            if teacher_forced is not None:
                result = self.forward(X_e, teacher_forced).data
            else:
                H, states = self.encode(X_e)
                states = self.initial_decoder_state(states)
                memory = self._memory(H)
                batch = H.shape[0]
                y_prev = Tensor(np.zeros((batch, self.config.output_size)))
                outputs = []
                for _ in range(horizon):
                    y_prev, states, _ = self.decode_step(y_prev, states, memory)
                    outputs.append(y_prev.data)
                result = np.stack(outputs, axis=1)
        return result[0] if single else result


def train_seq2seq(model, arrays, config):
    """Teacher-forced MSE training of a Seq2SeqLSTM on ``SequenceArrays``."""
    if len(arrays) == 0:
        raise ValueError("cannot train on an empty dataset")

    def batch_loss(indices):
        prediction = model(arrays.X_e[indices], arrays.Y_d[indices])
        return mse_loss(prediction, arrays.Y_out[indices])

    return fit(model, batch_loss, len(arrays), config)
