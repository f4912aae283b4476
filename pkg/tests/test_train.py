import numpy as np
import pytest

from anmt import autodiff as ad
from anmt.alignment import AlignmentModelConfig
from anmt.data import InputError, ToyCorpusSpec, compute_jumps
from anmt.lexical import LexicalModel, LexicalModelConfig
from anmt.optim import DivergenceError
from anmt.pipeline import prepare
from anmt.train import (IncompatibleModelError, _train, TrainConfig, evaluate_perplexity, init_aligned_from_baseline,
                        make_batches, train_aligned, train_alignment_model, train_baseline)

SMALL = dict(d_model=16, d_ff=32, heads=2, enc_layers=1, dec_layers=1)


@pytest.fixture(scope="module")
def monotone():
    return prepare(ToyCorpusSpec(vocab_size=12, sentences=300, reorder_window=0, seed=3), dev_size=40, test_size=10)


def lex_config(system, **kw):
    return LexicalModelConfig(len(system.src_vocab), len(system.tgt_vocab), **SMALL, **kw)


def test_config_from_key_values():
    c = TrainConfig.from_kv_text("# comment\nbatch_size = 8\nmax_steps=none\nlr=0.01\n", patience=2)
    assert (c.batch_size, c.max_steps, c.lr, c.patience) == (8, None, 0.01, 2)
    with pytest.raises(ValueError, match="unknown key"):
        TrainConfig.from_kv_text("bogus=1")
    with pytest.raises(ValueError):
        TrainConfig.from_kv_text("just text")
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_batches_cover_everything_once(monotone):
    batches = make_batches(monotone.train_pairs, 16, np.random.default_rng(0))
    flat = sorted(k for b in batches for k in b)
    assert flat == list(range(len(monotone.train_pairs)))
    assert all(len(b) <= 16 for b in batches)


def test_zero_steps_keeps_initialization(monotone):
    cfg = lex_config(monotone)
    r = train_baseline(monotone.train_pairs, monotone.dev_pairs, cfg, TrainConfig(max_steps=0, seed=4))
    init = LexicalModel(cfg, seed=4)
    assert r.steps == 0
    assert all(np.array_equal(init.params[k].data, r.model.params[k].data) for k in init.params)


def test_dev_perplexity_falls_and_runs_repeat(monotone):
    cfg = lex_config(monotone)
    tc = TrainConfig(max_epochs=3, seed=2, batch_size=16)
    a = train_baseline(monotone.train_pairs, monotone.dev_pairs, cfg, tc)
    b = train_baseline(monotone.train_pairs, monotone.dev_pairs, cfg, tc)
    ppl = [p for _, _, p in a.log]
    assert len(ppl) == 3 and ppl[0] > ppl[1] > ppl[2]
    assert a.log == b.log
    assert a.best_perplexity == pytest.approx(evaluate_perplexity(a.model, monotone.dev_pairs), rel=1e-6)


def test_zero_stage2_steps_behaves_as_baseline(monotone):
    base = LexicalModel(lex_config(monotone), seed=1)
    r = train_aligned(monotone.train_pairs, monotone.dev_pairs, init_aligned_from_baseline(base),
                      TrainConfig(max_steps=0))
    for q in monotone.dev_pairs[:10]:
        assert np.max(np.abs(r.model.forward_train(q) - base.forward_train(q))) <= 1e-5


def test_stage_guards(monotone):
    with pytest.raises(IncompatibleModelError):
        train_baseline(monotone.train_pairs, [], lex_config(monotone, alignment_head=True), TrainConfig())
    with pytest.raises(IncompatibleModelError):
        train_aligned(monotone.train_pairs, [], LexicalModel(lex_config(monotone)), TrainConfig())
    with pytest.raises(InputError):
        train_baseline([], [], lex_config(monotone), TrainConfig())


def test_jump_width_mismatch(monotone):
    ac = AlignmentModelConfig(len(monotone.src_vocab), len(monotone.tgt_vocab), max_jump=4, **SMALL)
    with pytest.raises(InputError):
        train_alignment_model(monotone.train_pairs, [], ac, TrainConfig(max_steps=1), jump_width=8)


def test_divergence_is_reported(monotone):
    model = LexicalModel(lex_config(monotone), seed=0)
    model.params["out.w"].data[0, 0] = np.nan
    with pytest.raises(DivergenceError):
        _train(model, monotone.train_pairs, [], TrainConfig(max_steps=2))


def test_monotone_jump_model_learns(monotone):
    ac = AlignmentModelConfig(len(monotone.src_vocab), len(monotone.tgt_vocab), max_jump=4, **SMALL)
    r = train_alignment_model(monotone.train_pairs, monotone.dev_pairs, ac, TrainConfig(max_epochs=40, seed=1))
    m = r.model
    hits = total = 0
    for q in monotone.dev_pairs:
        src, src_mask, tgt_in, prev, labels, _ = m._batch_arrays([q], [compute_jumps(q.path, 4)])
        with ad.no_grad():
            pred = m.forward_batch(src, src_mask, tgt_in, prev).data[0].argmax(-1)
        hits += int(np.sum(pred == labels[0]))
        total += q.I
    assert hits / total >= 0.95
