import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anmt.data import (BOS_ID, EOS_ID, PAD_ID, UNK_ID, AlignedSentencePair, AlignmentParseError, InputError,
                       ToyCorpusSpec, Vocabulary, build_vocab, compute_jumps, format_pharaoh, make_pairs,
                       parse_pharaoh, path_from_jumps, resolve_alignment, synthesize_toy_corpus, translate_toy)


# ---------------------------------------------------------------- vocabulary

def test_vocab_keeps_tokens_plus_reserved():
    v = build_vocab(["a a b"], 10)
    assert len(v) == 6 and v.itos[4:] == ["a", "b"]
    assert (PAD_ID, BOS_ID, EOS_ID, UNK_ID) == (0, 1, 2, 3)


def test_vocab_capacity_edge():
    v = build_vocab(["a a b"], 5)
    assert "a" in v and "b" not in v
    assert v.encode(["b"]) == [UNK_ID]


def test_vocab_tie_is_lexicographic():
    v = build_vocab([["b", "a", "b", "a"]], 5)
    assert v.itos[4:] == ["a"]


def test_vocab_round_trip(tmp_path):
    v = build_vocab(["x y z y"], 50)
    v.save(str(tmp_path / "v.txt"))
    w = Vocabulary.load(str(tmp_path / "v.txt"))
    assert w.itos == v.itos
    assert v.decode(v.encode(["y", "x"], add_eos=True)) == ["y", "x"]


def test_vocab_errors():
    with pytest.raises(InputError):
        build_vocab([], 10)
    with pytest.raises(InputError):
        Vocabulary(["a", "b"])


# ---------------------------------------------------------------- Pharaoh

def test_parse_pharaoh_examples():
    assert parse_pharaoh("0-0 1-1", 2, 2) == {(1, 1), (2, 2)}
    assert parse_pharaoh("") == set()
    with pytest.raises(AlignmentParseError):
        parse_pharaoh("2-0", J=2)


def test_parse_pharaoh_reports_line():
    with pytest.raises(AlignmentParseError, match="line 7"):
        parse_pharaoh("0-x", line_no=7)


def test_format_pharaoh_is_zero_based():
    assert format_pharaoh([1, 3, 2]) == "0-0 2-1 1-2"
    assert format_pharaoh([1, 3, 2], skip_last=True) == "0-0 2-1"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=12))
def test_pharaoh_round_trip(path):
    links = parse_pharaoh(format_pharaoh(path))
    assert resolve_alignment(links, max(path), len(path))[:-1] == path[:-1]


# ---------------------------------------------------------------- paths and jumps

def test_resolve_alignment_examples():
    assert resolve_alignment({(1, 1), (2, 2)}, 2, 3) == [1, 2, 2]
    assert resolve_alignment({(3, 1), (1, 3)}, 4, 4)[:2] == [3, 3]
    assert resolve_alignment({(2, 2)}, 3, 3)[0] == 1


def test_resolve_alignment_many_links_takes_smallest_source():
    assert resolve_alignment({(3, 1), (2, 1)}, 3, 2) == [2, 3]


def test_compute_jumps_examples():
    assert compute_jumps([2, 5], 10) == [2, 3]
    assert compute_jumps([3, 3], 10)[1] == 0
    assert compute_jumps([1, 150], 100) == [1, 100]
    assert compute_jumps([5, 1], 2) == [2, -2]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=20))
def test_jumps_invert_without_clamping(path):
    assert path_from_jumps(compute_jumps(path, 30)) == path


def test_pair_validation():
    with pytest.raises(InputError):
        AlignedSentencePair([4], [5], [1])              # no sentence end
    with pytest.raises(InputError):
        AlignedSentencePair([4], [5, EOS_ID], [1, 2])   # position out of range
    with pytest.raises(InputError):
        AlignedSentencePair([4], [5, EOS_ID], [1])


def test_make_pairs_appends_end_and_resolves():
    sv, tv = build_vocab(["a b"], 10), build_vocab(["x y"], 10)
    (p,) = make_pairs([["a", "b"]], [["y", "x"]], ["1-0 0-1"], sv, tv)
    assert p.target[-1] == EOS_ID and p.path == [2, 1, 2]
    with pytest.raises(InputError):
        make_pairs([["a"]], [], None, sv, tv)
    with pytest.raises(AlignmentParseError):
        make_pairs([["a"]], [["x"]], ["0-3"], sv, tv)


# ---------------------------------------------------------------- toy corpus

def test_toy_window_zero_is_monotone():
    c = synthesize_toy_corpus(ToyCorpusSpec(sentences=50, reorder_window=0, seed=5))
    for s, a in zip(c.source, c.alignments):
        assert a == " ".join(f"{j}-{j}" for j in range(len(s)))


def test_toy_no_homonyms_is_relabeling():
    c = synthesize_toy_corpus(ToyCorpusSpec(sentences=200, reorder_window=0, seed=2))
    mapping = {}
    for s, t in zip(c.source, c.target):
        for a, b in zip(s, t):
            assert mapping.setdefault(a, b) == b
    assert len(set(mapping.values())) == len(mapping)


def test_toy_is_deterministic():
    spec = ToyCorpusSpec(sentences=100, homonym_rate=0.3, seed=9)
    a, b = synthesize_toy_corpus(spec), synthesize_toy_corpus(spec)
    assert (a.source, a.target, a.alignments) == (b.source, b.target, b.alignments)
    c = synthesize_toy_corpus(ToyCorpusSpec(sentences=100, homonym_rate=0.3, seed=10))
    assert c.source != a.source


def test_toy_reordering_stays_in_window():
    spec = ToyCorpusSpec(sentences=300, reorder_window=2, seed=4)
    c = synthesize_toy_corpus(spec)
    moved = 0
    for s, a in zip(c.source, c.alignments):
        links = parse_pharaoh(a, len(s), len(s))
        assert sorted(x for x, _ in links) == list(range(1, len(s) + 1))
        for src, tgt in links:
            assert abs(src - tgt) <= spec.reorder_window
            moved += src != tgt
    assert moved > 0


def test_toy_homonyms_depend_on_neighbour():
    spec = ToyCorpusSpec(vocab_size=12, sentences=10, homonym_rate=1.0, reorder_window=0, seed=1)
    lex = synthesize_toy_corpus(spec).lexicon
    hom = next(w for w in lex.source_words if len(lex.variants[w]) == 2)
    even, odd = translate_toy([hom, "s2"], lex, 0)[0][0], translate_toy([hom, "s3"], lex, 0)[0][0]
    assert even != odd and {even, odd} == set(lex.variants[hom])


def test_toy_stop_words_present():
    lex = synthesize_toy_corpus(ToyCorpusSpec(sentences=5)).lexicon
    assert {"the", "of", "a"} <= {v[0] for v in lex.variants.values()}


def test_toy_spec_validation():
    with pytest.raises(InputError):
        synthesize_toy_corpus(ToyCorpusSpec(min_len=5, max_len=3))
    with pytest.raises(InputError):
        synthesize_toy_corpus(ToyCorpusSpec(homonym_rate=1.5))


def test_split_sizes():
    c = synthesize_toy_corpus(ToyCorpusSpec(sentences=30))
    a, b, rest = c.split(10, 15)
    assert (len(a), len(b), len(rest)) == (10, 15, 5)
    assert a.source + b.source + rest.source == c.source
