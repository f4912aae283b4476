"""Corpus ingestion: vocabularies, Pharaoh alignments, alignment paths and
jump labels, plus the synthetic parallel corpus used for desk-scale runs.

Positions are 1-based in memory and 0-based on disk.
"""
from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)


class InputError(ValueError):
    pass


class AlignmentParseError(InputError):
    def __init__(self, msg: str, line_no: Optional[int] = None):
        super().__init__(f"line {line_no}: {msg}" if line_no is not None else msg)
        self.line_no = line_no


class Vocabulary:
    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:len(RESERVED)]) != RESERVED:
            raise InputError("vocabulary must start with the reserved symbols")
        if len(set(tokens)) != len(tokens):
            raise InputError("vocabulary has duplicate tokens")
        self.itos = tokens
        self.stoi = {t: i for i, t in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str], add_eos: bool = False) -> list[int]:
        ids = [self.id(t) for t in tokens]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int], strip: bool = True) -> list[str]:
        out = []
        for i in ids:
            if strip and i in (PAD_ID, BOS_ID, EOS_ID):
                continue
            out.append(self.itos[i])
        return out

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.itos) + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def build_vocab(corpus: Iterable[Sequence[str] | str], max_size: int) -> Vocabulary:
    """Keep the ``max_size - 4`` most frequent tokens (ties: lexicographic)."""
    counts: Counter = Counter()
    n = 0
    for sent in corpus:
        n += 1
        counts.update(sent.split() if isinstance(sent, str) else sent)
    if n == 0 or not counts:
        raise InputError("cannot build a vocabulary from an empty corpus")
    if max_size < len(RESERVED):
        raise InputError(f"max_size must be at least {len(RESERVED)}")
    for r in RESERVED:
        counts.pop(r, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [tok for tok, _ in ranked[:max_size - len(RESERVED)]]
    return Vocabulary(list(RESERVED) + keep)


# ---------------------------------------------------------------- alignments

def parse_pharaoh(line: str, J: Optional[int] = None, I: Optional[int] = None,
                  line_no: Optional[int] = None) -> set[tuple[int, int]]:
    """Parse ``"s-t s-t ..."`` (0-based) into 1-based ``(source, target)`` links."""
    links = set()
    for item in line.split():
        parts = item.split("-")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise AlignmentParseError(f"malformed alignment pair {item!r}", line_no)
        s, t = int(parts[0]) + 1, int(parts[1]) + 1
        if J is not None and s > J:
            raise AlignmentParseError(f"source index {s} exceeds sentence length {J} in {item!r}", line_no)
        if I is not None and t > I:
            raise AlignmentParseError(f"target index {t} exceeds sentence length {I} in {item!r}", line_no)
        links.add((s, t))
    return links


def format_pharaoh(path: Sequence[int], skip_last: bool = False) -> str:
    """Render a 1-based path ``b_1..b_I`` as 0-based ``"s-t"`` pairs."""
    items = path[:-1] if skip_last else path
    return " ".join(f"{b - 1}-{i}" for i, b in enumerate(items))


def resolve_alignment(links: Iterable[tuple[int, int]], J: int, I: int) -> list[int]:
    """Turn a raw link set into one source position per target position.

    Several links: smallest source index.  No link: previous target's position,
    or 1 at the start.  The last target position (sentence end) goes to ``J``.
    """
    best: dict[int, int] = {}
    for s, t in links:
        if 1 <= t <= I and 1 <= s <= J:
            best[t] = min(s, best.get(t, s))
    path = []
    prev = 1
    for i in range(1, I + 1):
        b = best.get(i, prev)
        path.append(b)
        prev = b
    path[-1] = J
    return path


def compute_jumps(path: Sequence[int], W: int) -> list[int]:
    """Jump labels ``b_i - b_{i-1}`` with ``b_0 = 0``, clamped to ``[-W, W]``."""
    jumps, prev = [], 0
    for b in path:
        jumps.append(max(-W, min(W, b - prev)))
        prev = b
    return jumps


def path_from_jumps(jumps: Sequence[int]) -> list[int]:
    return list(np.cumsum(jumps, dtype=np.int64).tolist())


@dataclass
class AlignedSentencePair:
    source: list[int]
    target: list[int]
    path: list[int]

    def __post_init__(self):
        J, I = len(self.source), len(self.target)
        if J < 1 or I < 1:
            raise InputError("empty sentence")
        if self.target[-1] != EOS_ID:
            raise InputError("target must end with the sentence-end token")
        if len(self.path) != I:
            raise InputError(f"alignment path has {len(self.path)} entries for {I} target positions")
        if any(not 1 <= b <= J for b in self.path):
            raise InputError(f"alignment position out of range 1..{J}: {self.path}")

    @property
    def J(self) -> int:
        return len(self.source)

    @property
    def I(self) -> int:
        return len(self.target)


def make_pairs(src_lines: Sequence[Sequence[str]], tgt_lines: Sequence[Sequence[str]],
               align_lines: Optional[Sequence[str]], src_vocab: Vocabulary,
               tgt_vocab: Vocabulary) -> list[AlignedSentencePair]:
    """Encode tokenized sentences; without alignments every path is monotone-ish
    (resolved from no links), which is enough for baseline training."""
    if len(src_lines) != len(tgt_lines):
        raise InputError(f"{len(src_lines)} source lines vs {len(tgt_lines)} target lines")
    if align_lines is not None and len(align_lines) != len(src_lines):
        raise InputError(f"{len(align_lines)} alignment lines vs {len(src_lines)} sentences")
    pairs = []
    for n, (s, t) in enumerate(zip(src_lines, tgt_lines)):
        J, I = len(s), len(t) + 1
        links = parse_pharaoh(align_lines[n], J, I - 1, line_no=n + 1) if align_lines is not None else set()
        pairs.append(AlignedSentencePair(src_vocab.encode(s), tgt_vocab.encode(t, add_eos=True),
                                         resolve_alignment(links, J, I)))
    return pairs


# ---------------------------------------------------------------- file helpers

def read_tokenized(path: str) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def write_lines(path: str, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- toy corpus

STOPWORD_TARGETS = ("the", "of", "a")


@dataclass(frozen=True)
class ToyCorpusSpec:
    vocab_size: int = 40
    sentences: int = 2000
    min_len: int = 4
    max_len: int = 10
    reorder_window: int = 2
    homonym_rate: float = 0.0
    seed: int = 1
    mover_rate: float = 0.2

    def validate(self) -> None:
        if self.vocab_size < 8 or self.sentences < 1 or self.min_len < 1:
            raise InputError(f"invalid toy corpus spec: {self}")
        if self.max_len < self.min_len:
            raise InputError("max_len must be >= min_len")
        if not 0 <= self.reorder_window < self.max_len:
            raise InputError("reorder window must be in [0, max_len)")
        if not 0.0 <= self.homonym_rate <= 1.0 or not 0.0 <= self.mover_rate < 1.0:
            raise InputError("rates must lie in [0, 1]")


@dataclass
class ToyLexicon:
    """Bilingual lexicon of the synthetic task.

    ``variants[s]`` lists the target words of source word ``s``; homonyms have
    two, picked by the parity of the neighbouring source word's index.
    """
    source_words: list[str]
    variants: dict[str, tuple[str, ...]]
    movers: frozenset

    def translate_word(self, src: Sequence[str], j: int) -> str:
        word = src[j]
        options = self.variants[word]
        if len(options) == 1:
            return options[0]
        if len(src) == 1:
            return options[0]
        neighbour = src[j + 1] if j + 1 < len(src) else src[j - 1]
        return options[int(neighbour[1:]) % 2]


@dataclass
class ToyCorpus:
    source: list[list[str]]
    target: list[list[str]]
    alignments: list[str]
    lexicon: ToyLexicon
    spec: ToyCorpusSpec = field(default_factory=ToyCorpusSpec)

    def __len__(self) -> int:
        return len(self.source)

    def split(self, *sizes: int) -> list["ToyCorpus"]:
        out, start = [], 0
        for n in list(sizes) + [len(self) - sum(sizes)]:
            sl = slice(start, start + n)
            out.append(ToyCorpus(self.source[sl], self.target[sl], self.alignments[sl], self.lexicon, self.spec))
            start += n
        return out


def make_toy_lexicon(spec: ToyCorpusSpec, rng: np.random.Generator) -> ToyLexicon:
    V = spec.vocab_size
    words = [f"s{k}" for k in range(V)]
    targets = [f"t{k}" for k in rng.permutation(V)]
    for k, stop in enumerate(STOPWORD_TARGETS):
        targets[k] = stop
    content = list(range(len(STOPWORD_TARGETS), V))
    order = rng.permutation(content)
    n_hom = int(round(spec.homonym_rate * len(content)))
    homonyms = set(int(x) for x in order[:n_hom])
    variants = {}
    for k, w in enumerate(words):
        variants[w] = (targets[k], targets[k] + "x") if k in homonyms else (targets[k],)
    n_mov = int(round(spec.mover_rate * V)) if spec.reorder_window > 0 else 0
    movers = frozenset(words[int(x)] for x in rng.permutation(V)[:n_mov])
    return ToyLexicon(words, variants, movers)


def _toy_sentence(spec: ToyCorpusSpec, lex: ToyLexicon, rng: np.random.Generator) -> list[str]:
    J = int(rng.integers(spec.min_len, spec.max_len + 1))
    w = spec.reorder_window
    plain = [s for s in lex.source_words if s not in lex.movers]
    sent: list[str] = []
    protected = 0
    for p in range(J):
        if protected > 0 or p + w >= J or not lex.movers:
            tok = plain[int(rng.integers(len(plain)))]
            protected = max(0, protected - 1)
        else:
            tok = lex.source_words[int(rng.integers(len(lex.source_words)))]
            if tok in lex.movers:
                protected = w
        sent.append(tok)
    return sent


def translate_toy(src: Sequence[str], lex: ToyLexicon, window: int) -> tuple[list[str], list[int]]:
    """Reference translation and 0-based source index of every target word.

    A mover word at ``p`` is emitted after the ``window`` words that follow it.
    """
    order: list[int] = []
    p = 0
    while p < len(src):
        if src[p] in lex.movers and window > 0 and p + window < len(src):
            order.extend(range(p + 1, p + window + 1))
            order.append(p)
            p += window + 1
        else:
            order.append(p)
            p += 1
    return [lex.translate_word(src, j) for j in order], order


def synthesize_toy_corpus(spec: ToyCorpusSpec) -> ToyCorpus:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    lex = make_toy_lexicon(spec, rng)
    src_out, tgt_out, al_out = [], [], []
    for _ in range(spec.sentences):
        src = _toy_sentence(spec, lex, rng)
        tgt, order = translate_toy(src, lex, spec.reorder_window)
        src_out.append(src)
        tgt_out.append(tgt)
        al_out.append(" ".join(f"{s}-{t}" for t, s in enumerate(order)))
    return ToyCorpus(src_out, tgt_out, al_out, lex, spec)
