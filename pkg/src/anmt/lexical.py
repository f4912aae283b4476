"""Transformer lexical model ``p(e_i | b_i, b_1^{i-1}, e_1^{i-1}, f_1^J)``.

Every decoder layer's source attention has ``heads`` learned soft heads.  When
``alignment_head`` is on, an extra head whose weights are the one-hot vector
of the aligned source position ``b_i`` is concatenated to them: it selects
``h_{b_i}``, projects it to head width, and the widened output projection
mixes all ``heads + 1`` heads.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from . import layers as nn
from .autodiff import Tensor
from .data import BOS_ID, AlignedSentencePair, InputError
from .params import Initializer, ParameterStore


@dataclass(frozen=True)
class LexicalModelConfig:
    src_vocab: int
    tgt_vocab: int
    d_model: int = 64
    d_ff: int = 128
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    max_len: int = 128
    alignment_head: bool = False
    dropout: float = 0.0

    def __post_init__(self):
        for f in ("src_vocab", "tgt_vocab", "d_model", "d_ff", "heads", "enc_layers", "dec_layers", "max_len"):
            if getattr(self, f) < 1:
                raise ValueError(f"{f} must be positive")
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.heads

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LexicalModelConfig":
        return cls(**d)


def alignment_one_hot(b: int, J: int, dtype=np.float64) -> np.ndarray:
    """Weights of the alignment head: 1 at source position ``b`` (1-based)."""
    if not 1 <= b <= J:
        raise IndexError(f"aligned position {b} outside 1..{J}")
    out = np.zeros(J, dtype=dtype)
    out[b - 1] = 1.0
    return out


def _one_hots(positions: np.ndarray, J: int, dtype) -> np.ndarray:
    """``[B, T]`` 1-based positions -> ``[B, T, J]`` indicator rows."""
    out = np.zeros(positions.shape + (J,), dtype=dtype)
    np.put_along_axis(out, (positions - 1)[..., None], 1.0, axis=-1)
    return out


@dataclass
class EncoderStates:
    """Encoder output ``h_1..h_J`` for one sentence plus per-layer projected
    keys/values of the source attention."""
    h: np.ndarray                  # [J, d]
    keys: list                     # per layer [1, J, d]
    values: list

    @property
    def J(self) -> int:
        return self.h.shape[0]


@dataclass
class DecoderStateCache:
    """Self-attention keys/values of positions ``1..i-1`` for ``N`` decoder
    rows sharing one source sentence, plus the latest top-layer state."""
    keys: list                     # per layer [N, t, d]
    values: list
    state: Optional[np.ndarray] = None   # [N, d]

    @property
    def length(self) -> int:
        return self.keys[0].shape[1]

    def select(self, rows) -> "DecoderStateCache":
        rows = np.asarray(rows, dtype=np.int64)
        return DecoderStateCache([k[rows] for k in self.keys], [v[rows] for v in self.values],
                                 None if self.state is None else self.state[rows])


@dataclass
class StepOutput:
    log_probs: np.ndarray          # [N, V]
    attention: np.ndarray          # [N, L, K, J] soft source-attention weights
    alignment_rows: Optional[np.ndarray]   # [N, J] weights of the alignment head
    cache: DecoderStateCache


class LexicalModel:
    def __init__(self, config: LexicalModelConfig, params: Optional[ParameterStore] = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else self.init_params(config, seed)

    @staticmethod
    def init_params(config: LexicalModelConfig, seed: int, dtype=None) -> ParameterStore:
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
            for w in ("wq", "wk", "wv"):
                p.add(f"dec.{l}.src.{w}", init.glorot(c.d_model, c.d_model))
            if c.alignment_head:
                p.add(f"dec.{l}.src.wv_align", init.glorot(c.d_model, c.d_head))
                p.add(f"dec.{l}.src.wo", init.glorot(c.d_model + c.d_head, c.d_model))
            else:
                p.add(f"dec.{l}.src.wo", init.glorot(c.d_model, c.d_model))
            nn.init_layer_norm(p, init, f"dec.{l}.ln3", c.d_model)
            nn.init_ffn(p, init, f"dec.{l}.ff", c.d_model, c.d_ff)
        nn.init_layer_norm(p, init, "dec.ln", c.d_model)
        p.add("out.w", init.glorot(c.d_model, c.tgt_vocab))
        p.add("out.b", init.zeros(c.tgt_vocab))
        return p

    @property
    def dtype(self):
        return self.params["src_emb"].dtype

    # ------------------------------------------------------------ shared decoder body

    def _decoder(self, x: Tensor, enc_h: Tensor, enc_k: list, enc_v: list, src_mask: Optional[np.ndarray],
                 self_mask: Optional[np.ndarray], onehots: Optional[np.ndarray], past=None, rng=None):
        c, p = self.config, self.params
        new_cache, attn = [], []
        align_ctx = Tensor(onehots) @ enc_h if onehots is not None else None
        for l in range(c.dec_layers):
            h, _, kv = nn.self_attention(p, f"dec.{l}.self", nn.layer_norm(p, f"dec.{l}.ln1", x), c.heads,
                                         self_mask, None if past is None else (past.keys[l], past.values[l]))
            new_cache.append(kv)
            x = x + ad.dropout(h, c.dropout, rng)
            q = ad.matmul(nn.layer_norm(p, f"dec.{l}.ln2", x), p[f"dec.{l}.src.wq"])
            heads, w = nn.attend(q, enc_k[l], enc_v[l], c.heads, src_mask)
            attn.append(w)
            if c.alignment_head:
                a = ad.matmul(align_ctx, p[f"dec.{l}.src.wv_align"])
                heads = ad.concat([heads, a], axis=-1)
            x = x + ad.dropout(ad.matmul(heads, p[f"dec.{l}.src.wo"]), c.dropout, rng)
            x = x + ad.dropout(nn.ffn(p, f"dec.{l}.ff", nn.layer_norm(p, f"dec.{l}.ln3", x)), c.dropout, rng)
        x = nn.layer_norm(p, "dec.ln", x)
        logits = ad.matmul(x, p["out.w"]) + p["out.b"]
        return logits, attn, new_cache, x

    # ------------------------------------------------------------ training pass

    def forward_batch(self, src: np.ndarray, src_mask: np.ndarray, tgt_in: np.ndarray,
                      positions: Optional[np.ndarray] = None, rng=None):
        """Teacher-forced pass on padded ``[B, J]`` sources and ``[B, I]`` decoder
        inputs (``<s> e_1 .. e_{I-1}``).  Returns logits ``[B, I, V]`` and the
        per-layer source-attention weights."""
        c, p = self.config, self.params
        if src.shape[1] > c.max_len or tgt_in.shape[1] > c.max_len:
            raise InputError(f"sequence longer than max_len={c.max_len}")
        if c.alignment_head and positions is None:
            raise ValueError("alignment head is enabled: aligned source positions are required")
        enc_h = nn.encode(p, src, src_mask, c.enc_layers, c.heads, c.dropout, rng)
        enc_k = [ad.matmul(enc_h, p[f"dec.{l}.src.wk"]) for l in range(c.dec_layers)]
        enc_v = [ad.matmul(enc_h, p[f"dec.{l}.src.wv"]) for l in range(c.dec_layers)]
        x = ad.dropout(nn.embed(p, "tgt_emb", tgt_in), c.dropout, rng)
        onehots = _one_hots(positions, src.shape[1], self.dtype) if c.alignment_head else None
        logits, attn, _, _ = self._decoder(x, enc_h, enc_k, enc_v, src_mask[:, None, None, :],
                                           nn.causal_mask(tgt_in.shape[1]), onehots, rng=rng)
        return logits, attn

    def batch_loss(self, pairs: Sequence[AlignedSentencePair], rng=None) -> tuple[Tensor, int]:
        src, src_mask = nn.pad_batch([q.source for q in pairs])
        tgt, tgt_mask = nn.pad_batch([q.target for q in pairs])
        tgt_in = np.concatenate([np.full((len(pairs), 1), BOS_ID), tgt[:, :-1]], axis=1)
        pos = nn.pad_batch([q.path for q in pairs], pad=1)[0] if self.config.alignment_head else None
        logits, _ = self.forward_batch(src, src_mask, tgt_in, pos, rng)
        return ad.cross_entropy(logits, tgt, tgt_mask), int(tgt_mask.sum())

    def forward_train(self, pair: AlignedSentencePair) -> np.ndarray:
        """Log-probabilities of the gold target tokens, one per position."""
        if len(pair.path) != len(pair.target):
            raise InputError("alignment path and target lengths differ")
        src = np.asarray([pair.source])
        tgt = np.asarray([pair.target])
        tgt_in = np.concatenate([[[BOS_ID]], tgt[:, :-1]], axis=1)
        pos = np.asarray([pair.path]) if self.config.alignment_head else None
        with ad.no_grad():
            logits, _ = self.forward_batch(src, np.ones_like(src, dtype=bool), tgt_in, pos)
            lp = ad.log_softmax(logits).data[0]
        return lp[np.arange(len(pair.target)), pair.target]

    # ------------------------------------------------------------ incremental decoding

    def encode(self, source: Sequence[int]) -> EncoderStates:
        c, p = self.config, self.params
        if len(source) > c.max_len:
            raise InputError(f"source length {len(source)} exceeds max_len={c.max_len}")
        src = np.asarray([source], dtype=np.int64)
        with ad.no_grad():
            h = nn.encode(p, src, np.ones_like(src, dtype=bool), c.enc_layers, c.heads)
            keys = [(h @ p[f"dec.{l}.src.wk"]).data for l in range(c.dec_layers)]
            values = [(h @ p[f"dec.{l}.src.wv"]).data for l in range(c.dec_layers)]
        return EncoderStates(h.data[0], keys, values)

    def initial_cache(self, n: int = 1) -> DecoderStateCache:
        d = self.config.d_model
        empty = np.zeros((n, 0, d), dtype=self.dtype)
        return DecoderStateCache([empty] * self.config.dec_layers, [empty] * self.config.dec_layers)

    def decode_step(self, cache: DecoderStateCache, prev_tokens, enc: EncoderStates,
                    positions=None) -> StepOutput:
        """One target step for ``N`` rows: ``prev_tokens`` are ``e_{i-1}``
        (``<s>`` at ``i = 1``), ``positions`` the aligned ``b_i`` per row."""
        c = self.config
        prev = np.asarray(prev_tokens, dtype=np.int64).reshape(-1, 1)
        N, J = prev.shape[0], enc.J
        t = cache.length
        if t + 1 > c.max_len:
            raise InputError(f"target longer than max_len={c.max_len}")
        onehots = None
        if c.alignment_head:
            if positions is None:
                raise ValueError("alignment head is enabled: aligned source positions are required")
            pos = np.asarray(positions, dtype=np.int64).reshape(-1, 1)
            if pos.min() < 1 or pos.max() > J:
                raise IndexError(f"aligned position outside 1..{J}")
            onehots = _one_hots(pos, J, self.dtype)
        with ad.no_grad():
            x = nn.embed(self.params, "tgt_emb", prev, offset=t)
            enc_h = Tensor(enc.h[None])
            logits, attn, kv, top = self._decoder(
                x, enc_h, [Tensor(k) for k in enc.keys], [Tensor(v) for v in enc.values],
                None, None, onehots, past=cache)
            logp = ad.log_softmax(logits).data[:, 0]
        att = np.stack([w.data[:, :, 0, :] for w in attn], axis=1)
        new = DecoderStateCache([k for k, _ in kv], [v for _, v in kv], top.data[:, 0])
        return StepOutput(logp, att, None if onehots is None else onehots[:, 0], new)
