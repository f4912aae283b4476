"""Alignment-based beam search with alignment pruning.

Each step first scores the next source position of every live hypothesis
with the alignment model, keeps the positions where some hypothesis puts
more than ``threshold`` probability (all positions if none does), evaluates
the lexical model only at those positions, and keeps the ``beam_size`` best
(hypothesis, position, word) expansions under

    score = parent + weight * log p_align(position) + log p_lex(word | position)

Without an alignment model the same loop runs a plain transformer beam
search; the reported alignment is then the attention-extracted one.

Models are reached through small session objects (``initial()`` and
``step(...)``), so tests can plug in table-driven models.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .alignment import AlignmentModel, positions_from_jumps
from .data import BOS_ID, EOS_ID, Vocabulary
from .dictionary import Dictionary
from .lexical import DecoderStateCache, LexicalModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 4
    threshold: float = 0.0
    max_len: Optional[int] = None       # default 2J + 10
    length_norm: bool = False
    align_weight: float = 1.0
    prune: bool = True                  # False skips the pruning code entirely

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError("threshold must lie in [0, 1)")

    def output_limit(self, J: int) -> int:
        return self.max_len if self.max_len is not None else 2 * J + 10


@dataclass
class Hypothesis:
    tokens: tuple = ()
    path: tuple = ()                    # hypothesized positions b_1..b_{i-1}
    extracted: tuple = ()               # attention-extracted positions
    score: float = 0.0
    lex_scores: tuple = ()
    align_scores: tuple = ()
    attention: tuple = ()               # per step [L, K, J]
    consumed: frozenset = frozenset()
    fired: tuple = ()                   # (step, source word, target id)
    lex_state: object = None
    align_state: object = None

    @property
    def terminated(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    @property
    def frontier(self) -> int:
        return self.path[-1] if self.path else 0

    def recompute_score(self, align_weight: float = 1.0) -> float:
        s = 0.0
        for a, l in zip(self.align_scores, self.lex_scores):
            s = (s + align_weight * a) + l
        return s


@dataclass
class DecodeStats:
    lexical_evals: int = 0
    fallback_steps: int = 0
    steps: int = 0
    truncated: bool = False

    def merge(self, other: "DecodeStats") -> "DecodeStats":
        return DecodeStats(self.lexical_evals + other.lexical_evals, self.fallback_steps + other.fallback_steps,
                           self.steps + other.steps, self.truncated or other.truncated)


@dataclass
class Translation:
    tokens: list                        # without sentence end
    path: list                          # one position per emitted token incl. sentence end
    extracted: list
    attention: np.ndarray               # [I, L, K, J]
    score: float
    stats: DecodeStats
    fired: list = field(default_factory=list)
    hypothesis: Optional[Hypothesis] = None

    @property
    def truncated(self) -> bool:
        return self.stats.truncated


# ---------------------------------------------------------------- model sessions

class LexicalSession:
    """Lexical model bound to one source sentence."""

    def __init__(self, model: LexicalModel, source: Sequence[int]):
        self.model = model
        self.enc = model.encode(source)
        self.J = len(source)
        self.uses_alignment = model.config.alignment_head

    def initial(self) -> DecoderStateCache:
        return self.model.initial_cache(1)

    def step(self, states: Sequence[DecoderStateCache], prev_tokens, positions):
        cache = DecoderStateCache([np.concatenate([s.keys[l] for s in states]) for l in range(len(states[0].keys))],
                                  [np.concatenate([s.values[l] for s in states]) for l in range(len(states[0].keys))])
        out = self.model.decode_step(cache, prev_tokens, self.enc, positions if self.uses_alignment else None)
        rows = [out.cache.select([r]) for r in range(len(states))]
        return out.log_probs.astype(np.float64), out.attention, rows


class AlignmentSession:
    def __init__(self, model: AlignmentModel, source: Sequence[int]):
        self.model = model
        self.enc = model.encode(source)
        self.J = len(source)

    def initial(self):
        return self.model.initial_cache(1)

    def step(self, states, prev_tokens, prev_positions):
        cache = type(states[0])([np.concatenate([s.keys[l] for s in states]) for l in range(len(states[0].keys))],
                                [np.concatenate([s.values[l] for s in states]) for l in range(len(states[0].keys))])
        jumps, new = self.model.jump_step(cache, prev_tokens, self.enc, prev_positions)
        dists = positions_from_jumps(jumps.astype(np.float64), prev_positions, self.J)
        return dists, [new.select([r]) for r in range(len(states))]


# ---------------------------------------------------------------- alignment extraction

def extract_alignment_baseline(attention: np.ndarray) -> int:
    """1-based argmax of attention summed over layers and heads (``[L, K, J]``)."""
    return int(np.argmax(np.asarray(attention).sum(axis=(0, 1)))) + 1


def extract_alignment_assisted(attention: np.ndarray, hypothesized: int) -> int:
    """Like :func:`extract_alignment_baseline` but each layer's alignment head
    adds 1 at the hypothesized position, a total bonus of ``L``."""
    att = np.asarray(attention)
    J = att.shape[-1]
    if not 1 <= hypothesized <= J:
        raise IndexError(f"hypothesized position {hypothesized} outside 1..{J}")
    total = att.sum(axis=(0, 1)).astype(np.float64)
    total[hypothesized - 1] += att.shape[0]
    return int(np.argmax(total)) + 1


# ---------------------------------------------------------------- search pieces

def alignment_dist_batch(hyps: Sequence[Hypothesis], session) -> tuple[list[int], np.ndarray, list]:
    """Position distributions of every live hypothesis, in one model call.

    Returns the indices of the live hypotheses, ``[n_live, J]`` distributions
    and the advanced model states.
    """
    live = [k for k, h in enumerate(hyps) if not h.terminated]
    if not live:
        return live, np.zeros((0, session.J)), []
    prev = [hyps[k].tokens[-1] if hyps[k].tokens else BOS_ID for k in live]
    dists, states = session.step([hyps[k].align_state for k in live], prev, [hyps[k].frontier for k in live])
    return live, np.asarray(dists, dtype=np.float64), states


def active_positions(align_dists: np.ndarray, threshold: float, J: int) -> tuple[list[int], bool]:
    """Positions (1-based) where at least one row exceeds ``threshold``.

    Returns ``(positions, fell_back)``; when nothing survives, all positions.
    """
    dists = np.asarray(align_dists)
    keep = np.nonzero((dists > threshold).any(axis=0))[0] if dists.size else np.array([], dtype=int)
    if keep.size == 0:
        return list(range(1, J + 1)), True
    return [int(j) + 1 for j in keep], False


def lexical_dist_batch(hyps: Sequence[Hypothesis], live: Sequence[int], positions: Optional[Sequence[int]], session):
    """Lexical log-distributions for every (live hypothesis, position) pair.

    ``positions=None`` evaluates each hypothesis once (no alignment input).
    Rows are ordered hypothesis-major.  Returns ``(log_probs [R, V],
    attention [R, L, K, J], states, row_index)`` where ``row_index[r]`` is the
    ``(hypothesis, position)`` of row ``r``.
    """
    if positions is None:
        index = [(k, None) for k in live]
    else:
        index = [(k, j) for k in live for j in sorted(positions)]
    states = [hyps[k].lex_state for k, _ in index]
    prev = [hyps[k].tokens[-1] if hyps[k].tokens else BOS_ID for k, _ in index]
    pos = None if positions is None else [j for _, j in index]
    logp, att, new = session.step(states, prev, pos)
    return np.asarray(logp, dtype=np.float64), att, new, index


def apply_dictionary_constraint(hyp: Hypothesis, j: int, constraints: dict, log_probs: np.ndarray):
    """Force the suggested word when the extracted position ``j`` holds an
    unconsumed dictionary source word.

    ``constraints`` maps 1-based source positions to ``(source word, target id)``.
    Returns ``(log_probs, consumed, fired entry or None)``.
    """
    entry = constraints.get(j)
    if entry is None or entry[0] in hyp.consumed:
        return log_probs, hyp.consumed, None
    word, target = entry
    forced = np.full_like(log_probs, -np.inf)
    forced[target] = log_probs[target]
    return forced, hyp.consumed | {word}, entry


def _rank_key(h: Hypothesis, length_norm: bool) -> float:
    return h.score / max(1, len(h.tokens)) if length_norm else h.score


def get_best(hyps: Sequence[Hypothesis], length_norm: bool = False) -> Hypothesis:
    best = hyps[0]
    for h in hyps[1:]:
        if _rank_key(h, length_norm) > _rank_key(best, length_norm):
            best = h
    return best


def combine_and_prune(hyps: Sequence[Hypothesis], live: Sequence[int], live_dists: np.ndarray, live_align_states,
                      lex_logp: np.ndarray, lex_att: np.ndarray, lex_states, index, config: DecodeConfig,
                      hypothesis_positions: bool = True, constraints: Optional[dict] = None) -> list[Hypothesis]:
    """Expand and keep the ``beam_size`` best candidates.

    Candidates are every (hypothesis, position, word) with finite score plus
    the already terminated hypotheses.  Order: higher score, then lower word
    id, then lower position, then earlier parent.
    """
    live_row = {k: r for r, k in enumerate(live)}
    constraints = constraints or {}
    rows_scores, keys = [], []
    row_meta = []
    for r, (k, j) in enumerate(index):
        parent = hyps[k]
        att = lex_att[r] if lex_att is not None else None
        if hypothesis_positions:
            a = float(np.log(live_dists[live_row[k], j - 1])) if live_dists[live_row[k], j - 1] > 0 else -np.inf
            extracted = extract_alignment_assisted(att, j) if att is not None else j
        else:
            a = 0.0
            extracted = extract_alignment_baseline(att) if att is not None else 1
        logp = lex_logp[r]
        consumed, fired = parent.consumed, None
        if constraints:
            logp, consumed, fired = apply_dictionary_constraint(parent, extracted, constraints, logp)
        base = parent.score + config.align_weight * a
        rows_scores.append(base + logp)
        row_meta.append((k, j if hypothesis_positions else extracted, extracted, a, consumed, fired))
    V = lex_logp.shape[1] if len(index) else 0

    cand_score, cand_tok, cand_pos, cand_parent, cand_ref = [], [], [], [], []
    if rows_scores:
        S = np.stack(rows_scores)                       # [R, V]
        R = S.shape[0]
        finite = np.isfinite(S)
        rr, vv = np.nonzero(finite)
        cand_score.append(S[rr, vv])
        cand_tok.append(vv)
        cand_pos.append(np.array([row_meta[r][1] for r in range(R)])[rr])
        cand_parent.append(np.array([row_meta[r][0] for r in range(R)])[rr])
        cand_ref.append(np.stack([rr, vv], axis=1))
    done = [k for k, h in enumerate(hyps) if h.terminated]
    if done:
        cand_score.append(np.array([hyps[k].score for k in done]))
        cand_tok.append(np.array([hyps[k].tokens[-1] for k in done]))
        cand_pos.append(np.array([hyps[k].path[-1] for k in done]))
        cand_parent.append(np.array(done))
        cand_ref.append(np.full((len(done), 2), -1))
    if not cand_score:
        return []
    score = np.concatenate(cand_score)
    tok = np.concatenate(cand_tok)
    pos = np.concatenate(cand_pos)
    par = np.concatenate(cand_parent)
    ref = np.concatenate(cand_ref)
    rank = score / np.array([len(hyps[p].tokens) + (1 if ref[n, 0] >= 0 else 0) for n, p in enumerate(par)]) \
        if config.length_norm else score
    order = np.lexsort((par, pos, tok, -rank))[:config.beam_size]

    beam = []
    for n in order:
        if ref[n, 0] < 0:
            beam.append(hyps[par[n]])
            continue
        r, v = int(ref[n, 0]), int(ref[n, 1])
        k, j, extracted, a, consumed, fired = row_meta[r]
        parent = hyps[k]
        beam.append(Hypothesis(
            tokens=parent.tokens + (v,),
            path=parent.path + (j,),
            extracted=parent.extracted + (extracted,),
            score=float(score[n]),
            lex_scores=parent.lex_scores + (float(lex_logp[r][v]),),
            align_scores=parent.align_scores + (a,),
            attention=parent.attention + ((lex_att[r],) if lex_att is not None else ()),
            consumed=consumed,
            fired=parent.fired + ((len(parent.tokens) + 1, fired[0], fired[1]),) if fired is not None else parent.fired,
            lex_state=lex_states[r],
            align_state=live_align_states[live_row[k]] if live_align_states is not None else None,
        ))
    return beam


def sentence_constraints(source_words: Sequence[str], dictionary: Optional[Dictionary],
                         tgt_vocab: Optional[Vocabulary]) -> dict:
    """Map source positions to ``(source word, suggested target id)``."""
    if not dictionary:
        return {}
    out = {}
    for j, w in enumerate(source_words, 1):
        sug = dictionary.get(w)
        if sug is None:
            continue
        if tgt_vocab is None or sug not in tgt_vocab:
            logger.warning("dictionary suggestion %r for %r is not in the target vocabulary; skipped", sug, w)
            continue
        out[j] = (w, tgt_vocab.id(sug))
    return out


# ---------------------------------------------------------------- driver

def search(lex_session, align_session, J: int, config: DecodeConfig, constraints: Optional[dict] = None) -> Translation:
    """Run the beam search over already bound model sessions."""
    stats = DecodeStats()
    use_align = align_session is not None
    beam = [Hypothesis(lex_state=lex_session.initial(),
                       align_state=align_session.initial() if use_align else None)]
    limit = config.output_limit(J)
    while not get_best(beam, config.length_norm).terminated:
        if stats.steps >= limit:
            stats.truncated = True
            break
        stats.steps += 1
        if use_align:
            live, dists, align_states = alignment_dist_batch(beam, align_session)
            if config.prune:
                positions, fell_back = active_positions(dists, config.threshold, J)
                stats.fallback_steps += int(fell_back)
            else:
                positions = list(range(1, J + 1))
        else:
            live = [k for k, h in enumerate(beam) if not h.terminated]
            dists, align_states, positions = None, None, None
        logp, att, states, index = lexical_dist_batch(beam, live, positions, lex_session)
        stats.lexical_evals += len(index)
        beam = combine_and_prune(beam, live, dists, align_states, logp, att, states, index, config,
                                 hypothesis_positions=use_align, constraints=constraints)
    best = get_best(beam, config.length_norm)
    att = np.stack(best.attention) if best.attention else np.zeros((0,))
    toks = list(best.tokens[:-1] if best.terminated else best.tokens)
    return Translation(toks, list(best.path), list(best.extracted), att, best.score, stats,
                       [(i, w, t) for i, w, t in best.fired], best)


def translate(source: Sequence[int], lexical: LexicalModel, alignment: Optional[AlignmentModel] = None,
              config: DecodeConfig = DecodeConfig(), dictionary: Optional[Dictionary] = None,
              source_words: Optional[Sequence[str]] = None, tgt_vocab: Optional[Vocabulary] = None) -> Translation:
    """Translate one sentence of source ids.

    With ``alignment`` the search hypothesizes positions (alignment-based
    decoding); without it, it is a standard beam search.  A ``dictionary``
    needs ``source_words`` and ``tgt_vocab`` to resolve entries.
    """
    if lexical.config.alignment_head and alignment is None:
        raise ValueError("an alignment-assisted lexical model needs an alignment model to decode")
    J = len(source)
    constraints = sentence_constraints(source_words or [], dictionary, tgt_vocab) if dictionary else {}
    lex = LexicalSession(lexical, source)
    al = AlignmentSession(alignment, source) if alignment is not None else None
    return search(lex, al, J, config, constraints)
