"""In-process toy experiment: synthesize a corpus, train the baseline, the
alignment-assisted lexical model and the jump model."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional

from .alignment import AlignmentModel, AlignmentModelConfig
from .data import (AlignedSentencePair, ToyCorpus, ToyCorpusSpec, Vocabulary, build_vocab, make_pairs,
                   synthesize_toy_corpus)
from .decoder import DecodeConfig, Translation, translate
from .lexical import LexicalModel, LexicalModelConfig
from .train import (TrainConfig, TrainResult, init_aligned_from_baseline, train_aligned, train_alignment_model,
                    train_baseline)

logger = logging.getLogger(__name__)


@dataclass
class ModelSize:
    d_model: int = 64
    d_ff: int = 128
    heads: int = 4
    layers: int = 2
    max_jump: int = 16
    dropout: float = 0.0


@dataclass
class ToySystem:
    train: ToyCorpus
    dev: ToyCorpus
    test: ToyCorpus
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    train_pairs: list
    dev_pairs: list
    test_pairs: list
    baseline: Optional[LexicalModel] = None
    aligned: Optional[LexicalModel] = None
    alignment: Optional[AlignmentModel] = None
    results: dict = field(default_factory=dict)

    def translate_test(self, system: str, config: DecodeConfig = DecodeConfig(), dictionaries=None) -> list[Translation]:
        lex, al = (self.baseline, None) if system == "baseline" else (self.aligned, self.alignment)
        out = []
        for n, q in enumerate(self.test_pairs):
            d = dictionaries[n] if dictionaries is not None else None
            out.append(translate(q.source, lex, al, config, d, self.test.source[n], self.tgt_vocab))
        return out

    def detok(self, ids) -> list[str]:
        return self.tgt_vocab.decode(ids)


def prepare(spec: ToyCorpusSpec, dev_size: int = 200, test_size: int = 200) -> ToySystem:
    """Split a synthesized corpus into train/dev/test; vocabularies come from train."""
    full = synthesize_toy_corpus(dataclasses.replace(spec, sentences=spec.sentences + dev_size + test_size))
    train, dev, test = full.split(spec.sentences, dev_size)
    sv = build_vocab(train.source, 10 * spec.vocab_size + 4)
    tv = build_vocab(train.target, 10 * spec.vocab_size + 4)

    def pairs(c: ToyCorpus) -> list[AlignedSentencePair]:
        return make_pairs(c.source, c.target, c.alignments, sv, tv)

    return ToySystem(train, dev, test, sv, tv, pairs(train), pairs(dev), pairs(test))


def train_all(system: ToySystem, size: ModelSize = ModelSize(), config: TrainConfig = TrainConfig(),
              stage2: Optional[TrainConfig] = None, jump: Optional[TrainConfig] = None) -> ToySystem:
    lc = LexicalModelConfig(len(system.src_vocab), len(system.tgt_vocab), d_model=size.d_model, d_ff=size.d_ff,
                            heads=size.heads, enc_layers=size.layers, dec_layers=size.layers, dropout=size.dropout)
    ac = AlignmentModelConfig(len(system.src_vocab), len(system.tgt_vocab), max_jump=size.max_jump,
                              d_model=size.d_model, d_ff=size.d_ff, heads=size.heads,
                              enc_layers=size.layers, dec_layers=size.layers, dropout=size.dropout)
    r1: TrainResult = train_baseline(system.train_pairs, system.dev_pairs, lc, config)
    system.baseline = r1.model
    r2 = train_aligned(system.train_pairs, system.dev_pairs, init_aligned_from_baseline(r1.model, seed=config.seed),
                       stage2 or config)
    system.aligned = r2.model
    r3 = train_alignment_model(system.train_pairs, system.dev_pairs, ac, jump or config)
    system.alignment = r3.model
    system.results = {"baseline": r1, "aligned": r2, "alignment": r3}
    return system
