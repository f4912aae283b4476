"""Self-attentive alignment model ``p(b_i | b_1^{i-1}, e_1^{i-1}, f_1^J)``.

The decoder is a stack of causal self-attention layers over the target
history with no soft source attention.  Instead a hard attention picks the
encoder state of the previous aligned position ``b_{i-1}`` (for ``b_0 = 0``
a learned start vector added to ``h_1``), which is added to the top decoder state
before a small feed-forward output layer over ``2W + 1`` jump classes.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from . import layers as nn
from .autodiff import Tensor
from .data import BOS_ID, AlignedSentencePair, InputError, compute_jumps
from .params import Initializer, ParameterStore


@dataclass(frozen=True)
class AlignmentModelConfig:
    src_vocab: int
    tgt_vocab: int
    max_jump: int = 16
    d_model: int = 64
    d_ff: int = 128
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    max_len: int = 128
    dropout: float = 0.0

    def __post_init__(self):
        if self.max_jump < 1:
            raise ValueError("max_jump must be >= 1")
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")

    @property
    def classes(self) -> int:
        return 2 * self.max_jump + 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AlignmentModelConfig":
        return cls(**d)


def hard_attention(enc: np.ndarray, b_prev: int) -> np.ndarray:
    """Encoder state of 1-based position ``b_prev`` (rows of ``enc`` are ``h_j``)."""
    J = enc.shape[0]
    if not 1 <= b_prev <= J:
        raise IndexError(f"previous aligned position {b_prev} outside 1..{J}")
    return enc[b_prev - 1]


def positions_from_jumps(jump_dist: np.ndarray, b_prev, J: int) -> np.ndarray:
    """Map jump distributions ``[..., 2W+1]`` at previous positions ``b_prev``
    onto source positions ``1..J`` and renormalize.

    Rows whose whole mass falls outside the sentence become uniform.
    """
    jump_dist = np.asarray(jump_dist)
    W = (jump_dist.shape[-1] - 1) // 2
    b_prev = np.asarray(b_prev, dtype=np.int64)
    delta = np.arange(1, J + 1) - b_prev[..., None]
    inside = np.abs(delta) <= W
    idx = np.clip(delta + W, 0, 2 * W)
    probs = np.where(inside, np.take_along_axis(jump_dist, idx, axis=-1), 0.0)
    total = probs.sum(axis=-1, keepdims=True)
    uniform = np.full_like(probs, 1.0 / J)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, probs / np.where(total > 0, total, 1.0), uniform)


@dataclass
class JumpCache:
    keys: list                     # per layer [N, t, d]
    values: list

    @property
    def length(self) -> int:
        return self.keys[0].shape[1]

    def select(self, rows) -> "JumpCache":
        rows = np.asarray(rows, dtype=np.int64)
        return JumpCache([k[rows] for k in self.keys], [v[rows] for v in self.values])


class AlignmentModel:
    def __init__(self, config: AlignmentModelConfig, params: Optional[ParameterStore] = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else self.init_params(config, seed)

    @staticmethod
    def init_params(config: AlignmentModelConfig, seed: int, dtype=None) -> ParameterStore:
        c = config
        init = Initializer(seed, dtype)
        p = ParameterStore()
        p.add("src_emb", init.uniform(c.d_model ** -0.5, (c.src_vocab, c.d_model)))
        p.add("tgt_emb", init.uniform(c.d_model ** -0.5, (c.tgt_vocab, c.d_model)))
        nn.init_encoder(p, init, c.enc_layers, c.d_model, c.d_ff)
        for l in range(c.dec_layers):
            nn.init_layer_norm(p, init, f"dec.{l}.ln1", c.d_model)
            nn.init_attention(p, init, f"dec.{l}.self", c.d_model)
            nn.init_layer_norm(p, init, f"dec.{l}.ln2", c.d_model)
            nn.init_ffn(p, init, f"dec.{l}.ff", c.d_model, c.d_ff)
        nn.init_layer_norm(p, init, "dec.ln", c.d_model)
        p.add("start", init.uniform(c.d_model ** -0.5, (c.d_model,)))
        p.add("out.w1", init.glorot(c.d_model, c.d_ff))
        p.add("out.b1", init.zeros(c.d_ff))
        p.add("out.w2", init.glorot(c.d_ff, c.classes))
        p.add("out.b2", init.zeros(c.classes))
        return p

    @property
    def dtype(self):
        return self.params["src_emb"].dtype

    def _decoder(self, x: Tensor, self_mask, past=None, rng=None):
        c, p = self.config, self.params
        cache = []
        for l in range(c.dec_layers):
            h, _, kv = nn.self_attention(p, f"dec.{l}.self", nn.layer_norm(p, f"dec.{l}.ln1", x), c.heads,
                                         self_mask, None if past is None else (past.keys[l], past.values[l]))
            cache.append(kv)
            x = x + ad.dropout(h, c.dropout, rng)
            x = x + ad.dropout(nn.ffn(p, f"dec.{l}.ff", nn.layer_norm(p, f"dec.{l}.ln2", x)), c.dropout, rng)
        return nn.layer_norm(p, "dec.ln", x), cache

    def _output(self, r: Tensor, ctx: Tensor) -> Tensor:
        p = self.params
        z = ad.relu(ad.matmul(r + ctx, p["out.w1"]) + p["out.b1"])
        return ad.matmul(z, p["out.w2"]) + p["out.b2"]

    def _with_start(self, enc_h: Tensor) -> Tensor:
        """Prepend row 0 so ``b_0 = 0`` indexes it: the learned start vector
        plus ``h_1``, so the first jump still sees the sentence start."""
        B, J, d = enc_h.shape
        first = np.zeros((B, 1, J), dtype=self.dtype)
        first[:, :, 0] = 1.0
        start = ad.reshape(self.params["start"], (1, 1, d)) + ad.matmul(Tensor(first), enc_h)
        return ad.concat([start, enc_h], axis=1)

    def forward_batch(self, src, src_mask, tgt_in, prev_positions, rng=None) -> Tensor:
        """Jump logits ``[B, I, 2W+1]``; ``prev_positions`` holds ``b_{i-1}``
        (0 for the first step)."""
        c, p = self.config, self.params
        if src.shape[1] > c.max_len or tgt_in.shape[1] > c.max_len:
            raise InputError(f"sequence longer than max_len={c.max_len}")
        enc_h = nn.encode(p, src, src_mask, c.enc_layers, c.heads, c.dropout, rng)
        x = ad.dropout(nn.embed(p, "tgt_emb", tgt_in), c.dropout, rng)
        r, _ = self._decoder(x, nn.causal_mask(tgt_in.shape[1]), rng=rng)
        sel = np.zeros(prev_positions.shape + (src.shape[1] + 1,), dtype=self.dtype)
        np.put_along_axis(sel, prev_positions[..., None], 1.0, axis=-1)
        ctx = ad.matmul(Tensor(sel), self._with_start(enc_h))
        return self._output(r, ctx)

    def _batch_arrays(self, pairs: Sequence[AlignedSentencePair], jumps: Sequence[Sequence[int]]):
        W = self.config.max_jump
        src, src_mask = nn.pad_batch([q.source for q in pairs])
        tgt, tgt_mask = nn.pad_batch([q.target for q in pairs])
        tgt_in = np.concatenate([np.full((len(pairs), 1), BOS_ID), tgt[:, :-1]], axis=1)
        prev = nn.pad_batch([[0] + q.path[:-1] for q in pairs])[0]
        labels = nn.pad_batch([[d + W for d in js] for js in jumps])[0]
        return src, src_mask, tgt_in, prev, labels, tgt_mask

    def batch_loss(self, pairs: Sequence[AlignedSentencePair], jumps: Optional[Sequence[Sequence[int]]] = None,
                   rng=None):
        W = self.config.max_jump
        jumps = jumps if jumps is not None else [compute_jumps(q.path, W) for q in pairs]
        for q, js in zip(pairs, jumps):
            if len(js) != q.I:
                raise InputError(f"{len(js)} jump labels for {q.I} target positions")
            if any(abs(d) > W for d in js):
                raise InputError(f"jump label outside [-{W}, {W}]; labels must be computed with the model's width")
        src, src_mask, tgt_in, prev, labels, tgt_mask = self._batch_arrays(pairs, jumps)
        logits = self.forward_batch(src, src_mask, tgt_in, prev, rng)
        return ad.cross_entropy(logits, labels, tgt_mask), int(tgt_mask.sum())

    def forward_train(self, pair: AlignedSentencePair, jumps: Optional[Sequence[int]] = None) -> np.ndarray:
        """Log-probabilities of the gold jump labels, one per target position."""
        W = self.config.max_jump
        jumps = list(jumps) if jumps is not None else compute_jumps(pair.path, W)
        if len(jumps) != pair.I:
            raise InputError(f"{len(jumps)} jump labels for {pair.I} target positions")
        src, src_mask, tgt_in, prev, labels, _ = self._batch_arrays([pair], [jumps])
        with ad.no_grad():
            lp = ad.log_softmax(self.forward_batch(src, src_mask, tgt_in, prev)).data[0]
        return lp[np.arange(pair.I), labels[0]]

    # ------------------------------------------------------------ incremental scoring

    def encode(self, source: Sequence[int]) -> np.ndarray:
        """Encoder states with the start vector prepended: row ``j`` is ``h_j``."""
        c = self.config
        if len(source) > c.max_len:
            raise InputError(f"source length {len(source)} exceeds max_len={c.max_len}")
        src = np.asarray([source], dtype=np.int64)
        with ad.no_grad():
            h = nn.encode(self.params, src, np.ones_like(src, dtype=bool), c.enc_layers, c.heads)
            return self._with_start(h).data[0]

    def initial_cache(self, n: int = 1) -> JumpCache:
        empty = np.zeros((n, 0, self.config.d_model), dtype=self.dtype)
        return JumpCache([empty] * self.config.dec_layers, [empty] * self.config.dec_layers)

    def jump_step(self, cache: JumpCache, prev_tokens, enc: np.ndarray, prev_positions):
        """Jump distributions ``[N, 2W+1]`` for rows with history ``e_{i-1}``
        and previous position ``b_{i-1}`` (0 at the first step)."""
        prev = np.asarray(prev_tokens, dtype=np.int64).reshape(-1, 1)
        b = np.asarray(prev_positions, dtype=np.int64).reshape(-1)
        J = enc.shape[0] - 1
        if b.min() < 0 or b.max() > J:
            raise IndexError(f"previous aligned position outside 0..{J}")
        if cache.length + 1 > self.config.max_len:
            raise InputError(f"target longer than max_len={self.config.max_len}")
        with ad.no_grad():
            x = nn.embed(self.params, "tgt_emb", prev, offset=cache.length)
            r, kv = self._decoder(x, None, past=cache)
            ctx = Tensor(enc[b][:, None, :])
            probs = ad.softmax(self._output(r, ctx)).data[:, 0]
        return probs, JumpCache([k for k, _ in kv], [v for _, v in kv])
