from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..core import DropoutMask, Tensor, ops
from .params import ModelParams


def mask_site(mask: Optional[DropoutMask], key: int) -> Optional[DropoutMask]:
    return None if mask is None else mask.child(key)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return ops.add(ops.matmul(x, w), b)


def attention(p: ModelParams, prefix: str, x: Tensor, allowed: np.ndarray, heads: int) -> Tensor:
    """multi-head self-attention over N x T x d; allowed is N x T x T (query, key)"""
    n, t, d = x.shape
    dh = d // heads

    def split(y: Tensor) -> Tensor:
        return ops.transpose(ops.reshape(y, (n, t, heads, dh)), (0, 2, 1, 3))

    q = split(linear(x, p[f"{prefix}.wq"], p[f"{prefix}.bq"]))
    k = split(linear(x, p[f"{prefix}.wk"], p[f"{prefix}.bk"]))
    v = split(linear(x, p[f"{prefix}.wv"], p[f"{prefix}.bv"]))

    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    probs = ops.softmax(scores, allowed[:, None, :, :])
    merged = ops.reshape(ops.transpose(ops.matmul(probs, v), (0, 2, 1, 3)), (n, t, d))
    return linear(merged, p[f"{prefix}.wo"], p[f"{prefix}.bo"])


def transformer_block(
    p: ModelParams, prefix: str, x: Tensor, allowed: np.ndarray, heads: int, mask: Optional[DropoutMask]
) -> Tensor:
    # pre-LN; no final norm so small init keeps outputs near the input embeddings
    a = attention(p, f"{prefix}.attn", ops.layer_norm(x, p[f"{prefix}.ln1.g"], p[f"{prefix}.ln1.b"]), allowed, heads)
    h = ops.add(x, ops.dropout(a, mask_site(mask, 0)))
    f = ops.layer_norm(h, p[f"{prefix}.ln2.g"], p[f"{prefix}.ln2.b"])
    f = linear(ops.relu(linear(f, p[f"{prefix}.ffn.w1"], p[f"{prefix}.ffn.b1"])), p[f"{prefix}.ffn.w2"], p[f"{prefix}.ffn.b2"])
    return ops.add(h, ops.dropout(f, mask_site(mask, 1)))


def transformer(
    p: ModelParams, prefix: str, x: Tensor, allowed: np.ndarray, layers: int, heads: int, mask: Optional[DropoutMask]
) -> Tensor:
    for l in range(layers):
        x = transformer_block(p, f"{prefix}.{l}", x, allowed, heads, mask_site(mask, l))
    return x


def gru_cell(p: ModelParams, x: Tensor, h: Tensor) -> Tensor:
    r = ops.sigmoid(ops.add(ops.add(ops.matmul(x, p["ap.w_r"]), ops.matmul(h, p["ap.u_r"])), p["ap.b_r"]))
    z = ops.sigmoid(ops.add(ops.add(ops.matmul(x, p["ap.w_z"]), ops.matmul(h, p["ap.u_z"])), p["ap.b_z"]))
    cand = ops.tanh(ops.add(ops.add(ops.matmul(x, p["ap.w_n"]), ops.mul(r, ops.matmul(h, p["ap.u_n"]))), p["ap.b_n"]))
    return ops.add(ops.mul(ops.sub(1.0, z), cand), ops.mul(z, h))


def addressing_logits(p: ModelParams, c: Tensor) -> Tensor:
    """two affine layers d -> d -> b with relu between"""
    return linear(ops.relu(linear(c, p["mem.w1"], p["mem.b1"])), p["mem.w2"], p["mem.b2"])
