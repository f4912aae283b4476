"""Transformer building blocks shared by the lexical and alignment models.

Layers are pre-norm: ``x + sublayer(layer_norm(x))`` with a final layer norm
on each stack.  Functions take the owning :class:`ParameterStore` and a name
prefix instead of being objects, which keeps checkpoints flat.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .params import Initializer, ParameterStore


@lru_cache(maxsize=32)
def _sinusoid(n: int, d: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def sinusoid(n: int, d: int, dtype, offset: int = 0) -> np.ndarray:
    """Fixed position encodings for positions ``offset .. offset+n-1``."""
    return _sinusoid(offset + n, d)[offset:].astype(dtype)


# ---------------------------------------------------------------- parameter builders

def init_layer_norm(p: ParameterStore, init: Initializer, name: str, d: int) -> None:
    p.add(f"{name}.gain", init.ones(d))
    p.add(f"{name}.bias", init.zeros(d))


def init_attention(p: ParameterStore, init: Initializer, name: str, d: int) -> None:
    for w in ("wq", "wk", "wv", "wo"):
        p.add(f"{name}.{w}", init.glorot(d, d))


def init_ffn(p: ParameterStore, init: Initializer, name: str, d: int, d_ff: int) -> None:
    p.add(f"{name}.w1", init.glorot(d, d_ff))
    p.add(f"{name}.b1", init.zeros(d_ff))
    p.add(f"{name}.w2", init.glorot(d_ff, d))
    p.add(f"{name}.b2", init.zeros(d))


def init_encoder(p: ParameterStore, init: Initializer, layers: int, d: int, d_ff: int) -> None:
    for l in range(layers):
        init_layer_norm(p, init, f"enc.{l}.ln1", d)
        init_attention(p, init, f"enc.{l}.self", d)
        init_layer_norm(p, init, f"enc.{l}.ln2", d)
        init_ffn(p, init, f"enc.{l}.ff", d, d_ff)
    init_layer_norm(p, init, "enc.ln", d)


# ---------------------------------------------------------------- forward pieces

def layer_norm(p: ParameterStore, name: str, x: Tensor) -> Tensor:
    return ad.layer_norm(x, p[f"{name}.gain"], p[f"{name}.bias"])


def ffn(p: ParameterStore, name: str, x: Tensor) -> Tensor:
    h = ad.relu(ad.matmul(x, p[f"{name}.w1"]) + p[f"{name}.b1"])
    return ad.matmul(h, p[f"{name}.w2"]) + p[f"{name}.b2"]


def split_heads(x: Tensor, heads: int) -> Tensor:
    B, T, d = x.shape
    return ad.transpose(ad.reshape(x, (B, T, heads, d // heads)), (0, 2, 1, 3))


def merge_heads(x: Tensor) -> Tensor:
    B, K, T, dh = x.shape
    return ad.reshape(ad.transpose(x, (0, 2, 1, 3)), (B, T, K * dh))


def attend(q: Tensor, k: Tensor, v: Tensor, heads: int, mask: Optional[np.ndarray]) -> tuple[Tensor, Tensor]:
    """Scaled dot-product attention over projected ``[B, T, d]`` inputs.

    Returns the merged head outputs ``[B, T, d]`` and the weights
    ``[B, heads, T, S]``.  ``mask`` broadcasts against the weights; True keeps.
    """
    qh, kh, vh = split_heads(q, heads), split_heads(k, heads), split_heads(v, heads)
    dh = q.shape[-1] // heads
    scores = ad.matmul(qh, ad.transpose(kh, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
    weights = ad.softmax(scores, axis=-1, mask=mask)
    return merge_heads(ad.matmul(weights, vh)), weights


def self_attention(p: ParameterStore, name: str, x: Tensor, heads: int, mask: Optional[np.ndarray],
                   past: Optional[tuple[np.ndarray, np.ndarray]] = None):
    """Self-attention; ``past`` holds cached projected keys/values of earlier
    positions.  Returns output, weights and the keys/values to cache."""
    q = ad.matmul(x, p[f"{name}.wq"])
    k = ad.matmul(x, p[f"{name}.wk"])
    v = ad.matmul(x, p[f"{name}.wv"])
    if past is not None and past[0].shape[1] > 0:
        k = ad.concat([Tensor(past[0]), k], axis=1)
        v = ad.concat([Tensor(past[1]), v], axis=1)
    out, w = attend(q, k, v, heads, mask)
    return ad.matmul(out, p[f"{name}.wo"]), w, (k.data, v.data)


def causal_mask(T: int, key_mask: Optional[np.ndarray] = None) -> np.ndarray:
    m = np.tril(np.ones((T, T), dtype=bool))[None, None]
    if key_mask is not None:
        m = m & key_mask[:, None, None, :]
    return m


def embed(p: ParameterStore, table: str, ids: np.ndarray, offset: int = 0) -> Tensor:
    tab = p[table]
    d = tab.shape[1]
    x = ad.embedding(tab, ids) * float(np.sqrt(d))
    return x + Tensor(sinusoid(ids.shape[1], d, tab.dtype, offset))


def encode(p: ParameterStore, src: np.ndarray, src_mask: np.ndarray, layers: int, heads: int,
           dropout: float = 0.0, rng=None) -> Tensor:
    """Run the encoder stack on padded ids ``[B, J]``; returns ``[B, J, d]``."""
    x = ad.dropout(embed(p, "src_emb", src), dropout, rng)
    mask = src_mask[:, None, None, :]
    for l in range(layers):
        h, _, _ = self_attention(p, f"enc.{l}.self", layer_norm(p, f"enc.{l}.ln1", x), heads, mask)
        x = x + ad.dropout(h, dropout, rng)
        x = x + ad.dropout(ffn(p, f"enc.{l}.ff", layer_norm(p, f"enc.{l}.ln2", x)), dropout, rng)
    return layer_norm(p, "enc.ln", x)


def pad_batch(seqs, pad: int = 0) -> tuple[np.ndarray, np.ndarray]:
    n = max(len(s) for s in seqs)
    out = np.full((len(seqs), n), pad, dtype=np.int64)
    mask = np.zeros((len(seqs), n), dtype=bool)
    for r, s in enumerate(seqs):
        out[r, :len(s)] = s
        mask[r, :len(s)] = True
    return out, mask
