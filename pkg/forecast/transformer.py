"""Encoder/decoder Transformer forecaster.

Inputs are embedded, offset by a sinusoidal positional encoding and layer
normalized. The encoder block applies multi-head self-attention and a
position-wise feed-forward network, each followed by layer norm; the
decoder block applies causally masked self-attention, cross-attention on
the encoder output and a feed-forward network, each with add & norm.
"""
import logging
from dataclasses import dataclass

import numpy as np

from forecast.exceptions import NotTrainedError, ShapeError
from forecast.nn import LayerNorm, Linear, Module, ModuleList, MultiHeadAttention
from forecast.tensor import Tensor, as_tensor, concat, mse_loss, no_grad
from forecast.training import fit

logger = logging.getLogger(__name__)


def positional_encoding(length, d_model):
    if d_model % 2:
        raise ValueError(f"d_model must be even, got {d_model}")
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    positions = np.arange(length)[:, None]
    rates = 10000.0 ** (np.arange(0, d_model, 2) / d_model)
    encoding = np.empty((length, d_model))
    encoding[:, 0::2] = np.sin(positions / rates)
    encoding[:, 1::2] = np.cos(positions / rates)
    return encoding


def causal_mask(length):
    return np.tril(np.ones((length, length), dtype=bool))


@dataclass
class TransformerConfig:
    input_size: int
    d_model: int = 64
    heads: int = 4
    d_k: int = None
    ffn_units: int = 128
    encoder_blocks: int = 1
    decoder_blocks: int = 1
    output_size: int = 2
    symmetric_residuals: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d_model % 2:
            raise ValueError("d_model must be even")
        if self.d_k is None:
            if self.d_model % self.heads:
                raise ValueError("d_model must be divisible by heads when d_k is unset")
            self.d_k = self.d_model // self.heads


class FeedForward(Module):
    def __init__(self, d_model, units, rng):
        super().__init__()
        self.inner = Linear(d_model, units, rng)
        self.outer = Linear(units, d_model, rng)

    def forward(self, x):
        return self.outer(self.inner(x).relu())


class EncoderBlock(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.residual = config.symmetric_residuals
        self.attention = MultiHeadAttention(config.d_model, config.heads, config.d_k, rng)
        self.attention_norm = LayerNorm(config.d_model)
        self.ffn = FeedForward(config.d_model, config.ffn_units, rng)
        self.ffn_norm = LayerNorm(config.d_model)

    def forward(self, z):
        attended = self.attention(z, z, z)
        z = self.attention_norm(z + attended if self.residual else attended)
        transformed = self.ffn(z)
        return self.ffn_norm(z + transformed if self.residual else transformed)


class DecoderBlock(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.self_attention = MultiHeadAttention(config.d_model, config.heads, config.d_k, rng)
        self.self_norm = LayerNorm(config.d_model)
        self.cross_attention = MultiHeadAttention(config.d_model, config.heads, config.d_k, rng)
        self.cross_norm = LayerNorm(config.d_model)
        self.ffn = FeedForward(config.d_model, config.ffn_units, rng)
        self.ffn_norm = LayerNorm(config.d_model)

    def forward(self, d, memory):
        mask = causal_mask(d.shape[1])
        d = self.self_norm(d + self.self_attention(d, d, d, mask=mask))
        d = self.cross_norm(d + self.cross_attention(d, memory, memory))
        return self.ffn_norm(d + self.ffn(d))


class Seq2SeqTransformer(Module):
    kind = "mm_transformer"

    def __init__(self, config):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.input_embedding = Linear(config.input_size, config.d_model, rng)
        self.input_norm = LayerNorm(config.d_model)
        self.output_embedding = Linear(config.output_size, config.d_model, rng)
        self.output_norm = LayerNorm(config.d_model)
        self.encoder = ModuleList(EncoderBlock(config, rng) for _ in range(config.encoder_blocks))
        self.decoder = ModuleList(DecoderBlock(config, rng) for _ in range(config.decoder_blocks))
        self.head = Linear(config.d_model, config.output_size, rng)

    @staticmethod
    def _batched(x, width, label):
        x = as_tensor(x)
        if x.ndim == 2:
            x = x.reshape(1, *x.shape)
        if x.ndim != 3 or x.shape[-1] != width:
            raise ShapeError(label, x.shape, (None, None, width))
        return x

    def _embed(self, x, embedding, norm):
        return norm(embedding(x) + positional_encoding(x.shape[1], self.config.d_model))

    def encode(self, X_e):
        X_e = self._batched(X_e, self.config.input_size, "encoder_block")
        z = self._embed(X_e, self.input_embedding, self.input_norm)
        for block in self.encoder:
            z = block(z)
        return z

    def decode(self, Y_d, memory):
        Y_d = self._batched(Y_d, self.config.output_size, "decoder_block")
        d = self._embed(Y_d, self.output_embedding, self.output_norm)
        for block in self.decoder:
            d = block(d, memory)
        return self.head(d)

    def forward(self, X_e, Y_d):
        return self.decode(Y_d, self.encode(X_e))

    def attention_weights(self):
        """Last recorded weights of every attention layer, keyed by module path."""
        weights = {}
        for index, block in enumerate(self.encoder):
            weights[f"encoder.{index}.attention"] = block.attention.last_weights
        for index, block in enumerate(self.decoder):
            weights[f"decoder.{index}.self_attention"] = block.self_attention.last_weights
            weights[f"decoder.{index}.cross_attention"] = block.cross_attention.last_weights
        return weights

    def forecast(self, X_e, horizon, teacher_forced=None):
        """Generate ``horizon`` steps autoregressively from a zero start token."""
        if not self.fitted:
            raise NotTrainedError(f"{self.kind} has not been trained or loaded")
        if horizon < 1:
            raise ValueError(f"horizon must be positive, got {horizon}")
        single = np.ndim(X_e) == 2
        with no_grad():
            if teacher_forced is not None:
                result = self.forward(X_e, teacher_forced).data
            else:
                memory = self.encode(X_e)
                batch = memory.shape[0]
                decoder_input = Tensor(np.zeros((batch, 1, self.config.output_size)))
                outputs = []
                for step in range(horizon):
                    latest = self.decode(decoder_input, memory)[:, step:step + 1, :]
                    outputs.append(latest.data)
                    decoder_input = concat([decoder_input, latest], axis=1)
                result = np.concatenate(outputs, axis=1)
        return result[0] if single else result


def transformer_train(model, arrays, config):
    if len(arrays) == 0:
        raise ValueError("cannot train on an empty dataset")

    def batch_loss(indices):
        prediction = model(arrays.X_e[indices], arrays.Y_d[indices])
        return mse_loss(prediction, arrays.Y_out[indices])

    return fit(model, batch_loss, len(arrays), config)
