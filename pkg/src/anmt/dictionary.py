"""Translation-suggestion dictionaries and stop-word lists."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

# A short English list; real runs pass a full list via --stopwords.
DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being below between both
but by can did do does doing down during each few for from further had has have having he her here hers herself
him himself his how i if in into is it its itself just me more most my myself no nor not now of off on once only
or other our ours ourselves out over own same she should so some such than that the their theirs them themselves
then there these they this those through to too under until up very was we were what when where which while who
whom why will with you your yours yourself yourselves
""".split())


class StopWordList:
    def __init__(self, words: Iterable[str] = DEFAULT_STOPWORDS):
        self.words = frozenset(w.strip().lower() for w in words if w.strip())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    @classmethod
    def load(cls, path: str) -> "StopWordList":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read().split())


@dataclass
class Dictionary:
    """One-to-one source word -> suggested target word table."""
    entries: dict[str, str] = field(default_factory=dict)

    def add(self, source: str, target: str) -> bool:
        if source in self.entries:
            return False
        self.entries[source] = target
        return True

    def get(self, source: str) -> Optional[str]:
        return self.entries.get(source)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, source: str) -> bool:
        return source in self.entries

    def items(self):
        return self.entries.items()


def build_simulated_dictionary(sources: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                               links: Sequence[set], baseline: Sequence[Sequence[str]],
                               stopwords: StopWordList, max_entries: int = 4) -> list[Dictionary]:
    """Per-sentence dictionaries from aligned references.

    ``links`` holds 1-based ``(source, target)`` pairs.  A candidate is a source
    word linked to exactly one reference word which in turn is linked only to
    it; stop words and words already produced by the baseline system are
    skipped, and at most ``max_entries`` are kept in source order.
    """
    out = []
    for src, ref, lk, hyp in zip(sources, references, links, baseline):
        by_src: dict[int, set] = {}
        by_tgt: dict[int, set] = {}
        for s, t in lk:
            by_src.setdefault(s, set()).add(t)
            by_tgt.setdefault(t, set()).add(s)
        produced = {w.lower() for w in hyp}
        d = Dictionary()
        for j in range(1, len(src) + 1):
            if len(d) >= max_entries:
                break
            tgts = by_src.get(j, ())
            if len(tgts) != 1:
                continue
            (t,) = tgts
            if by_tgt[t] != {j}:
                continue
            sw, tw = src[j - 1], ref[t - 1]
            if tw in stopwords or sw in stopwords or tw.lower() in produced:
                continue
            d.add(sw, tw)
        out.append(d)
    return out


def write_dictionaries(path: str, dicts: Sequence[Dictionary]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for n, d in enumerate(dicts, 1):
            for s, t in d.items():
                fh.write(f"{n}\t{s}\t{t}\n")


def read_dictionaries(path: str, n_sentences: int) -> list[Dictionary]:
    """Read ``sent_id<TAB>source<TAB>target`` or global ``source<TAB>target`` lines."""
    global_entries = Dictionary()
    per_sentence = [Dictionary() for _ in range(n_sentences)]
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                global_entries.add(*cols)
            elif len(cols) == 3 and cols[0].isdigit() and 1 <= int(cols[0]) <= n_sentences:
                per_sentence[int(cols[0]) - 1].add(cols[1], cols[2])
            else:
                raise ValueError(f"{path}:{line_no}: expected 'source<TAB>target' or 'id<TAB>source<TAB>target'")
    for d in per_sentence:
        for s, t in global_entries.items():
            d.add(s, t)
    return per_sentence
