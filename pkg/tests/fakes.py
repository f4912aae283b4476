"""Table-driven stand-ins for the model sessions used by the beam search.

Every output is a pure function of (seed, full history, query), drawn from a
generator seeded by hashing those, so the same history always gets the same
distribution no matter how the search batches its calls.
"""
import hashlib
import itertools
import math

import numpy as np

from anmt.data import BOS_ID, EOS_ID


def _rng(*key) -> np.random.Generator:
    digest = hashlib.sha256(repr(key).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _log_softmax(x):
    z = x - x.max()
    return z - math.log(np.exp(z).sum())


class FakeLexical:
    """``step`` mirrors LexicalSession.step; state = tuple of (prev token, position)."""

    def __init__(self, J, V, seed=0, layers=1, heads=1, sharp=2.0, uniform=False):
        self.J, self.V, self.seed = J, V, seed
        self.layers, self.heads, self.sharp, self.uniform = layers, heads, sharp, uniform
        self.calls = 0

    def initial(self):
        return ()

    def logp(self, state, prev, pos):
        if self.uniform:
            return np.full(self.V, -math.log(self.V))
        return _log_softmax(self.sharp * _rng("lex", self.seed, state, prev, pos).normal(size=self.V))

    def attention(self, state, prev, pos):
        r = _rng("att", self.seed, state, prev, pos)
        return r.dirichlet(np.ones(self.J), size=(self.layers, self.heads))

    def step(self, states, prev_tokens, positions):
        self.calls += len(states)
        positions = positions if positions is not None else [None] * len(states)
        logp = np.stack([self.logp(s, p, j) for s, p, j in zip(states, prev_tokens, positions)])
        att = np.stack([self.attention(s, p, j) for s, p, j in zip(states, prev_tokens, positions)])
        new = [s + ((p, j),) for s, p, j in zip(states, prev_tokens, positions)]
        return logp, att, new


class FakeAlignment:
    """``step`` mirrors AlignmentSession.step; returns position distributions."""

    def __init__(self, J, seed=0, sharp=2.0, uniform=False):
        self.J, self.seed, self.sharp, self.uniform = J, seed, sharp, uniform

    def initial(self):
        return ()

    def dist(self, state, prev, prev_pos):
        if self.uniform:
            return np.full(self.J, 1.0 / self.J)
        return np.exp(_log_softmax(self.sharp * _rng("al", self.seed, state, prev, prev_pos).normal(size=self.J)))

    def step(self, states, prev_tokens, prev_positions):
        d = np.stack([self.dist(s, p, b) for s, p, b in zip(states, prev_tokens, prev_positions)])
        return d, [s + ((p, b),) for s, p, b in zip(states, prev_tokens, prev_positions)]


def sequence_score(lex, al, tokens, path):
    """Score of one complete (tokens, path) under the fakes, added in the
    decoder's order: ((score + log p_align) + log p_lex) per step."""
    s = 0.0
    ls, as_ = (), ()
    prev, prev_pos = BOS_ID, 0
    for e, b in zip(tokens, path):
        a = math.log(al.dist(as_, prev, prev_pos)[b - 1]) if al is not None else 0.0
        l = lex.logp(ls, prev, b if al is not None else None)[e]
        s = (s + a) + l
        ls = ls + ((prev, b if al is not None else None),)
        as_ = as_ + ((prev, prev_pos),)
        prev, prev_pos = e, b
    return s


def brute_force_viterbi(lex, al, J, V, max_len):
    """Best (score, tokens, path) over every output the search can return:
    sequences ending in sentence end within ``max_len`` steps, plus unfinished
    sequences of exactly ``max_len`` steps."""
    best = None
    positions = range(1, J + 1) if al is not None else [None]
    for n in range(1, max_len + 1):
        for toks in itertools.product(range(V), repeat=n):
            if EOS_ID in toks[:-1]:
                continue
            if n < max_len and toks[-1] != EOS_ID:
                continue
            for path in itertools.product(positions, repeat=n):
                s = sequence_score(lex, al, toks, path)
                if best is None or s > best[0]:
                    best = (s, list(toks), list(path))
    return best
