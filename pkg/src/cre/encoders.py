"""Sentence encoders: CNN, LSTM, and transformer, each mapping an
(valid_length x E) input to a per-relation embedding matrix (|R| x K)
through a shared tanh + linear projection head.

Encoders consume only the valid prefix of a sentence matrix, so zero
padding beyond ``valid_length`` can never influence the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, softmax_rows
from .errors import ConfigError, CreError

ENCODER_KINDS = ("cnn", "lstm", "transformer")


@dataclass
class EncoderConfig:
    kind: str = "cnn"
    hidden_dim: int = 230
    window: int = 3  # cnn only
    layers: int = 2  # transformer only
    heads: int = 5  # transformer only

    def validate(self):
        if self.kind not in ENCODER_KINDS:
            raise ConfigError(f"unknown encoder kind: {self.kind}")
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")
        if self.kind == "cnn" and self.window % 2 != 1:
            raise ConfigError("cnn window must be odd")
        if self.kind == "transformer":
            if self.hidden_dim % self.heads != 0:
                raise ConfigError("transformer hidden_dim must be divisible by heads")
            if self.layers < 1:
                raise ConfigError("transformer needs at least one layer")


def parameter_shapes(cfg: EncoderConfig, input_dim: int) -> dict:
    """Name -> shape for every learnable tensor of the chosen encoder."""
    h = cfg.hidden_dim
    if cfg.kind == "cnn":
        return {"cnn.w": (cfg.window * input_dim, h), "cnn.b": (h,)}
    if cfg.kind == "lstm":
        return {"lstm.wx": (input_dim, 4 * h), "lstm.wh": (h, 4 * h), "lstm.b": (4 * h,)}
    shapes = {"tf.front.w": (input_dim, h), "tf.front.b": (h,)}
    for layer in range(cfg.layers):
        p = f"tf.{layer}."
        shapes.update(
            {
                p + "wq": (h, h),
                p + "wk": (h, h),
                p + "wv": (h, h),
                p + "wo": (h, h),
                p + "bo": (h,),
                p + "ln1.g": (h,),
                p + "ln1.b": (h,),
                p + "ffn.w1": (h, 4 * h),
                p + "ffn.b1": (4 * h,),
                p + "ffn.w2": (4 * h, h),
                p + "ffn.b2": (h,),
                p + "ln2.g": (h,),
                p + "ln2.b": (h,),
            }
        )
    return shapes


def _cnn(x: Tensor, tensors: dict, cfg: EncoderConfig) -> Tensor:
    length, width = x.shape
    pad = (cfg.window - 1) // 2
    zeros = Tensor(np.zeros((pad, width)))
    padded = concat([zeros, x, zeros], axis=0)
    cols = concat([padded[i : i + length] for i in range(cfg.window)], axis=1)
    conv = cols @ tensors["cnn.w"] + tensors["cnn.b"]
    return conv.max(axis=0)


def _lstm(x: Tensor, tensors: dict, cfg: EncoderConfig) -> Tensor:
    h = cfg.hidden_dim
    wx, wh, b = tensors["lstm.wx"], tensors["lstm.wh"], tensors["lstm.b"]
    hidden = Tensor(np.zeros((1, h)))
    cell = Tensor(np.zeros((1, h)))
    for t in range(x.shape[0]):
        gates = x[t : t + 1] @ wx + hidden @ wh + b
        gate_i = gates[:, :h].sigmoid()
        gate_f = gates[:, h : 2 * h].sigmoid()
        gate_g = gates[:, 2 * h : 3 * h].tanh()
        gate_o = gates[:, 3 * h :].sigmoid()
        cell = gate_f * cell + gate_i * gate_g
        hidden = gate_o * cell.tanh()
    return hidden.reshape(h)


def _layer_norm(x: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    mu = x.mean(axis=1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=1, keepdims=True)
    return centered / (var + 1e-5).sqrt() * gain + bias


def attention(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention. ``mask`` marks valid key positions;
    masked positions get exactly zero attention weight."""
    scale = 1.0 / math.sqrt(q.shape[1])
    weights = softmax_rows((q @ k.T) * scale, mask=mask)
    return weights @ v


def _transformer(x: Tensor, tensors: dict, cfg: EncoderConfig) -> Tensor:
    h = cfg.hidden_dim
    head_dim = h // cfg.heads
    state = (x @ tensors["tf.front.w"] + tensors["tf.front.b"]).tanh()
    for layer in range(cfg.layers):
        p = f"tf.{layer}."
        q = state @ tensors[p + "wq"]
        k = state @ tensors[p + "wk"]
        v = state @ tensors[p + "wv"]
        heads = []
        for m in range(cfg.heads):
            sl = slice(m * head_dim, (m + 1) * head_dim)
            heads.append(attention(q[:, sl], k[:, sl], v[:, sl]))
        attn = concat(heads, axis=1) @ tensors[p + "wo"] + tensors[p + "bo"]
        state = _layer_norm(state + attn, tensors[p + "ln1.g"], tensors[p + "ln1.b"])
        ff = (state @ tensors[p + "ffn.w1"] + tensors[p + "ffn.b1"]).relu()
        ff = ff @ tensors[p + "ffn.w2"] + tensors[p + "ffn.b2"]
        state = _layer_norm(state + ff, tensors[p + "ln2.g"], tensors[p + "ln2.b"])
    return state.mean(axis=0)


_ENCODERS = {"cnn": _cnn, "lstm": _lstm, "transformer": _transformer}


def encode(
    x: Tensor,
    tensors: dict,
    cfg: EncoderConfig,
    num_relations: int,
    entity_dim: int,
) -> Tensor:
    """Encode a (valid_length x E) input into a (|R| x K) CRE matrix."""
    if x.shape[0] < 1:
        raise CreError("cannot encode an empty sentence")
    pooled = _ENCODERS[cfg.kind](x, tensors, cfg)
    out = pooled.tanh() @ tensors["proj.w"] + tensors["proj.b"]
    return out.reshape(num_relations, entity_dim)
