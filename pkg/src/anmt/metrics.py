"""Evaluation: case-insensitive corpus BLEU, alignment accuracy, and the
pruning-threshold benchmark."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .data import InputError

SMOOTH_EPS = 1e-9


@dataclass
class BleuReport:
    score: float
    precisions: list
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    matches: list = field(default_factory=list)
    totals: list = field(default_factory=list)

    def __str__(self) -> str:
        p = "/".join(f"{100 * x:.1f}" for x in self.precisions)
        return f"BLEU = {self.score:.2f} {p} (BP={self.brevity_penalty:.3f}, hyp_len={self.hyp_len}, ref_len={self.ref_len})"


def _tokens(s) -> list[str]:
    words = s.split() if isinstance(s, str) else list(s)
    return [w.lower() for w in words]


def _ngrams(words: list[str], n: int) -> Counter:
    return Counter(tuple(words[k:k + n]) for k in range(len(words) - n + 1))


def bleu(hypotheses: Sequence, references: Sequence, max_order: int = 4, smooth: bool = True) -> BleuReport:
    """Corpus-level BLEU on lowercased tokens (strings or token lists).

    With ``smooth``, a zero higher-order match count is replaced by a precision
    of ``1e-9`` so short test sets do not collapse to zero; a hypothesis corpus
    without a single matching word still scores 0.
    """
    if len(hypotheses) != len(references):
        raise InputError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for h, r in zip(hypotheses, references):
        hw, rw = _tokens(h), _tokens(r)
        hyp_len += len(hw)
        ref_len += len(rw)
        for n in range(1, max_order + 1):
            hc, rc = _ngrams(hw, n), _ngrams(rw, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(0, len(hw) - n + 1)
    precisions = []
    for m, t in zip(matches, totals):
        precisions.append(m / t if t > 0 else 0.0)
    bp = 0.0 if hyp_len == 0 else (1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len))
    if matches[0] == 0:
        return BleuReport(0.0, precisions, bp, hyp_len, ref_len, matches, totals)
    logs = []
    for p in precisions:
        if p == 0.0:
            if not smooth:
                return BleuReport(0.0, precisions, bp, hyp_len, ref_len, matches, totals)
            p = SMOOTH_EPS
        logs.append(math.log(p))
    score = 100.0 * bp * math.exp(sum(logs) / max_order)
    return BleuReport(min(score, 100.0), precisions, bp, hyp_len, ref_len, matches, totals)


def alignment_accuracy(predicted: Sequence[Sequence[int]], gold: Sequence[Sequence[int]]) -> float:
    """Fraction of target positions whose predicted source position is the gold one."""
    if len(predicted) != len(gold):
        raise InputError(f"{len(predicted)} predicted paths vs {len(gold)} gold paths")
    hit = total = 0
    for n, (p, g) in enumerate(zip(predicted, gold)):
        if len(p) != len(g):
            raise InputError(f"sentence {n + 1}: predicted path has {len(p)} positions, gold has {len(g)}")
        hit += sum(int(a == b) for a, b in zip(p, g))
        total += len(g)
    return hit / total if total else 1.0


@dataclass
class PruneBenchRow:
    threshold: float
    lexical_evals: int
    fallback_steps: int
    bleu: float
    reduction: float


@dataclass
class PruneBenchReport:
    rows: list
    translations: dict = field(default_factory=dict)   # threshold -> list of Translation

    def row(self, threshold: float) -> PruneBenchRow:
        for r in self.rows:
            if r.threshold == threshold:
                return r
        raise KeyError(threshold)

    def table(self) -> str:
        lines = [f"{'threshold':>9} {'lex evals':>10} {'fallbacks':>9} {'BLEU':>7} {'reduction':>9}"]
        for r in self.rows:
            lines.append(f"{r.threshold:>9.3f} {r.lexical_evals:>10d} {r.fallback_steps:>9d} {r.bleu:>7.2f} {r.reduction:>9.3f}")
        return "\n".join(lines)

    def records(self) -> list[str]:
        out = []
        for r in self.rows:
            for name in ("lexical_evals", "fallback_steps", "bleu", "reduction"):
                out.append(f"{name}\t{r.threshold:g}\t{getattr(r, name):g}")
        return out


def prune_benchmark(decode: Callable[[Sequence[int], float], object], sources: Sequence[Sequence[int]],
                    references: Sequence[Sequence[str]], thresholds: Sequence[float],
                    detokenize: Callable[[Sequence[int]], Sequence[str]]) -> PruneBenchReport:
    """Decode ``sources`` at every threshold; ``decode(source, threshold)``
    returns a :class:`~anmt.decoder.Translation`.  Threshold 0 is always run
    and is the reference for the reduction factor."""
    ts = sorted(set(float(t) for t in thresholds) | {0.0})
    rows, outputs = [], {}
    base_evals = None
    for t in ts:
        results = [decode(src, t) for src in sources]
        evals = sum(r.stats.lexical_evals for r in results)
        fallbacks = sum(r.stats.fallback_steps for r in results)
        score = bleu([detokenize(r.tokens) for r in results], references).score
        if base_evals is None:
            base_evals = evals
        rows.append(PruneBenchRow(t, evals, fallbacks, score, base_evals / evals if evals else math.inf))
        outputs[t] = results
    return PruneBenchReport(rows, outputs)
