"""Command-line interface.

Every command writes a JSON run manifest (argv, resolved options, seed,
SHA-256 of inputs and outputs, metrics).  ``anmt replay MANIFEST`` re-runs
the recorded command line.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import params as ckpt
from .alignment import AlignmentModel, AlignmentModelConfig
from .data import (ToyCorpusSpec, Vocabulary, build_vocab, compute_jumps, file_digest, format_pharaoh, make_pairs,
                   parse_pharaoh, read_lines, read_tokenized, synthesize_toy_corpus, write_lines)
from .decoder import DecodeConfig, Translation, extract_alignment_assisted, extract_alignment_baseline, translate
from .dictionary import DEFAULT_STOPWORDS, StopWordList, build_simulated_dictionary, read_dictionaries, \
    write_dictionaries
from .lexical import LexicalModel, LexicalModelConfig
from .metrics import bleu, prune_benchmark
from .train import (TrainConfig, init_aligned_from_baseline, load_model, save_model, train_aligned,
                    train_alignment_model, train_baseline)

logger = logging.getLogger("anmt")


class UsageError(Exception):
    pass


class Run:
    """Collects what goes into the manifest of one command."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.metrics: dict = {}

    def input(self, path: Optional[str]) -> Optional[str]:
        if path is None:
            return None
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        self.inputs.append(path)
        return path

    def output(self, path: str) -> str:
        self.outputs.append(path)
        return path

    def manifest(self) -> dict:
        config = {k: v for k, v in vars(self.args).items() if k not in ("func", "manifest")}
        return {
            "command": self.args.command,
            "argv": self.argv,
            "config": config,
            "seed": getattr(self.args, "seed", None),
            "inputs": {p: file_digest(p) for p in self.inputs if os.path.isfile(p)},
            "outputs": {p: file_digest(p) for p in self.outputs if os.path.isfile(p)},
            "tool_version": __version__,
            "metrics": self.metrics,
        }

    def manifest_path(self) -> str:
        if self.args.manifest:
            return self.args.manifest
        primary = self.outputs[0] if self.outputs else f"anmt-{self.args.command}"
        if os.path.isdir(primary):
            return os.path.join(primary, "manifest.json")
        return primary + ".manifest.json"


def _write_manifest(run: Run) -> None:
    path = run.manifest_path()
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(run.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------- data commands

def cmd_synth_corpus(run: Run) -> None:
    a = run.args
    spec = ToyCorpusSpec(vocab_size=a.vocab_size, sentences=a.sentences + a.dev + a.test, min_len=a.min_len,
                         max_len=a.max_len, reorder_window=a.reorder_window, homonym_rate=a.homonym_rate,
                         seed=a.seed, mover_rate=a.mover_rate)
    corpus = synthesize_toy_corpus(spec)
    os.makedirs(a.out_dir, exist_ok=True)
    run.output(a.out_dir)
    for name, part in zip(("train", "dev", "test"), corpus.split(a.sentences, a.dev)):
        if not len(part):
            continue
        for ext, lines in (("src", [" ".join(s) for s in part.source]), ("tgt", [" ".join(t) for t in part.target]),
                           ("align", part.alignments)):
            write_lines(run.output(os.path.join(a.out_dir, f"{name}.{ext}")), lines)
    lex = corpus.lexicon
    write_lines(run.output(os.path.join(a.out_dir, "lexicon.tsv")),
                [f"{w}\t{' '.join(lex.variants[w])}\t{int(w in lex.movers)}" for w in lex.source_words])
    write_lines(run.output(os.path.join(a.out_dir, "stopwords.txt")), sorted(DEFAULT_STOPWORDS))


def cmd_build_vocab(run: Run) -> None:
    a = run.args
    sents = []
    for path in a.input:
        sents.extend(read_tokenized(run.input(path)))
    vocab = build_vocab(sents, a.max_size)
    vocab.save(run.output(a.output))
    run.metrics["size"] = len(vocab)


# ---------------------------------------------------------------- training

def _train_config(a) -> TrainConfig:
    text = ""
    if a.config:
        with open(a.config, encoding="utf-8") as fh:
            text = fh.read()
    return TrainConfig.from_kv_text(text, batch_size=a.batch_size, max_epochs=a.epochs, max_steps=a.max_steps,
                                    seed=a.seed, eval_every=a.eval_every, patience=a.patience, lr=a.lr)


def _pairs(run: Run, src: str, tgt: str, align: Optional[str], sv: Vocabulary, tv: Vocabulary):
    al = read_lines(run.input(align)) if align else None
    return make_pairs(read_tokenized(run.input(src)), read_tokenized(run.input(tgt)), al, sv, tv)


def _train_common(run: Run, need_align: bool):
    a = run.args
    if a.config:
        run.input(a.config)
    sv = Vocabulary.load(run.input(a.src_vocab))
    tv = Vocabulary.load(run.input(a.tgt_vocab))
    if need_align and not a.align:
        raise UsageError("--align is required for this command")
    train = _pairs(run, a.src, a.tgt, a.align, sv, tv)
    dev = _pairs(run, a.dev_src, a.dev_tgt, a.dev_align, sv, tv) if a.dev_src else []
    return sv, tv, train, dev, _train_config(a)


def _finish_training(run: Run, result, config: TrainConfig) -> None:
    a = run.args
    save_model(run.output(a.output), result.model, {"seed": config.seed, "train_config": config.to_dict(),
                                                    "steps": result.steps})
    run.metrics.update({"steps": result.steps, "best_dev_perplexity": result.best_perplexity,
                        "log": [list(x) for x in result.log]})
    logger.info("wrote %s (best dev perplexity %.4f)", a.output, result.best_perplexity)


def _lexical_config(a, sv, tv, alignment_head: bool) -> LexicalModelConfig:
    return LexicalModelConfig(len(sv), len(tv), d_model=a.d_model, d_ff=a.d_ff, heads=a.heads, enc_layers=a.layers,
                              dec_layers=a.layers, max_len=a.max_len, alignment_head=alignment_head,
                              dropout=a.dropout)


def cmd_train_baseline(run: Run) -> None:
    sv, tv, train, dev, config = _train_common(run, need_align=False)
    result = train_baseline(train, dev, _lexical_config(run.args, sv, tv, False), config)
    _finish_training(run, result, config)


def cmd_train_aligned(run: Run) -> None:
    a = run.args
    sv, tv, train, dev, config = _train_common(run, need_align=True)
    if a.from_scratch:
        init = LexicalModel(_lexical_config(a, sv, tv, True), seed=config.seed)
    else:
        if not a.init:
            raise UsageError("train-aligned needs --init BASELINE or --from-scratch")
        base = load_model(run.input(a.init))
        if not isinstance(base, LexicalModel):
            raise UsageError(f"{a.init} is not a lexical model checkpoint")
        init = init_aligned_from_baseline(base, seed=config.seed)
    result = train_aligned(train, dev, init, config)
    _finish_training(run, result, config)


def cmd_train_alignment_model(run: Run) -> None:
    a = run.args
    sv, tv, train, dev, config = _train_common(run, need_align=True)
    mc = AlignmentModelConfig(len(sv), len(tv), max_jump=a.max_jump, d_model=a.d_model, d_ff=a.d_ff, heads=a.heads,
                              enc_layers=a.layers, dec_layers=a.layers, max_len=a.max_len, dropout=a.dropout)
    result = train_alignment_model(train, dev, mc, config)
    _finish_training(run, result, config)


# ---------------------------------------------------------------- decoding

_WORKER: dict = {}


def _worker_init(lexical, alignment, config, tgt_vocab):
    _WORKER.update(lexical=lexical, alignment=alignment, config=config, tgt_vocab=tgt_vocab)


def _worker_translate(job):
    ids, dictionary, words = job
    w = _WORKER
    return translate(ids, w["lexical"], w["alignment"], w["config"], dictionary, words, w["tgt_vocab"])


def decode_corpus(sources_ids, lexical, alignment, config, tgt_vocab, dictionaries=None, words=None,
                  jobs: int = 1) -> list[Translation]:
    dictionaries = dictionaries or [None] * len(sources_ids)
    words = words or [None] * len(sources_ids)
    jobs_list = list(zip(sources_ids, dictionaries, words))
    if jobs <= 1:
        _worker_init(lexical, alignment, config, tgt_vocab)
        return [_worker_translate(j) for j in jobs_list]
    with ProcessPoolExecutor(jobs, initializer=_worker_init, initargs=(lexical, alignment, config, tgt_vocab)) as ex:
        return list(ex.map(_worker_translate, jobs_list, chunksize=8))


def _load_decoding(run: Run):
    a = run.args
    lexical = load_model(run.input(a.lexical))
    alignment = load_model(run.input(a.alignment)) if a.alignment else None
    if not isinstance(lexical, LexicalModel):
        raise UsageError(f"{a.lexical} is not a lexical model checkpoint")
    if alignment is not None and not isinstance(alignment, AlignmentModel):
        raise UsageError(f"{a.alignment} is not an alignment model checkpoint")
    sv = Vocabulary.load(run.input(a.src_vocab))
    tv = Vocabulary.load(run.input(a.tgt_vocab))
    config = DecodeConfig(beam_size=a.beam, threshold=a.threshold, max_len=a.max_output_len,
                          length_norm=a.length_norm, align_weight=a.align_weight, prune=not a.no_prune)
    sources = read_tokenized(run.input(a.input))
    return lexical, alignment, sv, tv, config, sources


def _write_translations(run: Run, outs: Sequence[Translation], tv: Vocabulary, precision) -> None:
    a = run.args
    write_lines(run.output(a.output), [" ".join(tv.decode(o.tokens)) for o in outs])
    if a.dump_alignment:
        write_lines(run.output(a.dump_alignment),
                    [format_pharaoh(o.path[:len(o.tokens)]) for o in outs])
    if a.dump_attention:
        arrays = {f"sentence.{n:06d}": o.attention.astype(precision) for n, o in enumerate(outs, 1)
                  if o.attention.ndim == 4}
        ckpt.save(run.output(a.dump_attention), arrays, {"layout": "[target step, layer, head, source position]"})
    run.metrics.update({
        "sentences": len(outs),
        "lexical_evals": int(sum(o.stats.lexical_evals for o in outs)),
        "fallback_steps": int(sum(o.stats.fallback_steps for o in outs)),
        "truncated": int(sum(o.truncated for o in outs)),
        "dictionary_fired": int(sum(len(o.fired) for o in outs)),
    })


def cmd_translate(run: Run) -> None:
    a = run.args
    lexical, alignment, sv, tv, config, sources = _load_decoding(run)
    dicts = None
    if getattr(a, "dictionary", None):
        dicts = read_dictionaries(run.input(a.dictionary), len(sources))
    outs = decode_corpus([sv.encode(s) for s in sources], lexical, alignment, config, tv, dicts,
                         sources if dicts else None, a.jobs)
    _write_translations(run, outs, tv, lexical.dtype)


def cmd_extract_alignments(run: Run) -> None:
    a = run.args
    lexical, alignment, sv, tv, config, sources = _load_decoding(run)
    if a.mode == "assisted" and alignment is None:
        raise UsageError("--mode assisted needs --alignment (hypothesized positions come from alignment-based search)")
    outs = decode_corpus([sv.encode(s) for s in sources], lexical, alignment, config, tv, jobs=a.jobs)
    lines = []
    for o in outs:
        n = len(o.tokens)
        if a.mode == "assisted":
            path = [extract_alignment_assisted(o.attention[i], o.path[i]) for i in range(n)]
        else:
            path = [extract_alignment_baseline(o.attention[i]) for i in range(n)]
        lines.append(format_pharaoh(path))
    write_lines(run.output(a.output), lines)
    if a.translations:
        write_lines(run.output(a.translations), [" ".join(tv.decode(o.tokens)) for o in outs])


def cmd_build_dictionary(run: Run) -> None:
    a = run.args
    src = read_tokenized(run.input(a.src))
    ref = read_tokenized(run.input(a.ref))
    links = [parse_pharaoh(line, len(s), len(r), n) for n, (line, s, r) in
             enumerate(zip(read_lines(run.input(a.align)), src, ref), 1)]
    base = read_tokenized(run.input(a.baseline_output))
    stop = StopWordList.load(run.input(a.stopwords)) if a.stopwords else StopWordList()
    dicts = build_simulated_dictionary(src, ref, links, base, stop, a.max_entries)
    write_dictionaries(run.output(a.output), dicts)
    run.metrics["entries"] = sum(len(d) for d in dicts)


# ---------------------------------------------------------------- metrics

def cmd_evaluate_bleu(run: Run) -> None:
    a = run.args
    report = bleu(read_lines(run.input(a.hyp)), read_lines(run.input(a.ref)))
    print(report)
    run.metrics.update({"bleu": report.score, "precisions": report.precisions,
                        "brevity_penalty": report.brevity_penalty})
    if a.output:
        write_lines(run.output(a.output), [f"bleu\t-\t{report.score:.6f}"] +
                    [f"p{n}\t-\t{p:.6f}" for n, p in enumerate(report.precisions, 1)] +
                    [f"brevity_penalty\t-\t{report.brevity_penalty:.6f}"])


def _first_links(line: str, n: int) -> dict:
    out: dict = {}
    for s, t in parse_pharaoh(line, line_no=n):
        out[t] = min(s, out.get(t, s))
    return out


def cmd_align_accuracy(run: Run) -> None:
    a = run.args
    pred = read_lines(run.input(a.pred))
    gold = read_lines(run.input(a.gold))
    if len(pred) != len(gold):
        raise UsageError(f"{a.pred} has {len(pred)} lines, {a.gold} has {len(gold)}")
    hit = total = 0
    for n, (p, g) in enumerate(zip(pred, gold), 1):
        pl, gl = _first_links(p, n), _first_links(g, n)
        if pl and gl and max(pl) != max(gl):
            raise UsageError(f"line {n}: predicted and gold alignments cover different target lengths")
        hit += sum(int(pl.get(t) == s) for t, s in gl.items())
        total += len(gl)
    acc = hit / total if total else 1.0
    print(f"alignment accuracy = {acc:.4f} ({hit}/{total})")
    run.metrics["alignment_accuracy"] = acc
    if a.output:
        write_lines(run.output(a.output), [f"alignment_accuracy\t-\t{acc:.6f}"])


def cmd_bench_prune(run: Run) -> None:
    a = run.args
    lexical, alignment, sv, tv, config, sources = _load_decoding(run)
    if alignment is None:
        raise UsageError("bench-prune needs --alignment")
    thresholds = [float(x) for x in a.thresholds.split(",") if x.strip()]
    if 0.0 not in thresholds:
        logger.info("threshold 0 added to the benchmark as the no-pruning reference")
        run.metrics["added_threshold_zero"] = True
    refs = read_tokenized(run.input(a.reference))
    ids = [sv.encode(s) for s in sources]

    cache: dict = {}

    def decode(src, t):
        # whole corpus per threshold, so --jobs applies; sources arrive in order
        if t not in cache:
            c = DecodeConfig(config.beam_size, t, config.max_len, config.length_norm, config.align_weight)
            cache[t] = iter(decode_corpus(ids, lexical, alignment, c, tv, jobs=a.jobs))
        return next(cache[t])

    report = prune_benchmark(decode, ids, refs, thresholds, tv.decode)
    print(report.table())
    write_lines(run.output(a.output), report.records())
    run.metrics["rows"] = [vars(r) for r in report.rows]


def cmd_replay(run: Run) -> None:
    with open(run.args.manifest_file, encoding="utf-8") as fh:
        manifest = json.load(fh)
    argv = manifest["argv"]
    if argv and argv[0] == "replay":
        raise UsageError("refusing to replay a replay manifest")
    if "jobs" in manifest.get("config", {}):
        argv = argv + ["--jobs", "1"]
    status = main(argv)
    if status:
        raise RuntimeError(f"replayed command exited with status {status}")


# ---------------------------------------------------------------- parser

def _add_model_size(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model size")
    g.add_argument("--d-model", type=int, default=64)
    g.add_argument("--d-ff", type=int, default=128)
    g.add_argument("--heads", type=int, default=4)
    g.add_argument("--layers", type=int, default=2, help="encoder and decoder layers")
    g.add_argument("--max-len", type=int, default=128)
    g.add_argument("--dropout", type=float, default=0.0)


def _add_training(p: argparse.ArgumentParser, align_required: bool) -> None:
    p.add_argument("--src", required=True, help="training source text, one tokenized sentence per line")
    p.add_argument("--tgt", required=True)
    p.add_argument("--align", required=align_required, help="Pharaoh alignments (0-based s-t pairs)")
    p.add_argument("--dev-src")
    p.add_argument("--dev-tgt")
    p.add_argument("--dev-align")
    p.add_argument("--src-vocab", required=True)
    p.add_argument("--tgt-vocab", required=True)
    p.add_argument("--output", required=True, help="checkpoint to write")
    p.add_argument("--config", help="key=value training config file; flags override it")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int, default=1)
    _add_model_size(p)


def _add_decoding(p: argparse.ArgumentParser, output_help: str = "translations, one per line") -> None:
    p.add_argument("--lexical", required=True, help="lexical model checkpoint")
    p.add_argument("--alignment", help="alignment model checkpoint (enables alignment-based search)")
    p.add_argument("--src-vocab", required=True)
    p.add_argument("--tgt-vocab", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help=output_help)
    p.add_argument("--beam", type=int, default=4)
    p.add_argument("--threshold", type=float, default=0.15, help="alignment pruning threshold (0 = no pruning)")
    p.add_argument("--max-output-len", type=int, help="default 2J+10")
    p.add_argument("--length-norm", action="store_true")
    p.add_argument("--align-weight", type=float, default=1.0)
    p.add_argument("--no-prune", action="store_true", help="skip the pruning code path entirely")
    p.add_argument("--jobs", type=int, default=1, help="decode sentences in N processes")
    p.add_argument("--seed", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anmt", description="Alignment-based neural machine translation toolkit")
    parser.add_argument("--version", action="version", version=f"anmt {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--manifest", help="run manifest path (default: next to the primary output)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", help="write a synthetic aligned parallel corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab-size", type=int, default=40)
    p.add_argument("--sentences", type=int, default=2000, help="training sentences")
    p.add_argument("--dev", type=int, default=200)
    p.add_argument("--test", type=int, default=200)
    p.add_argument("--min-len", type=int, default=4)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--reorder-window", type=int, default=2)
    p.add_argument("--homonym-rate", type=float, default=0.0)
    p.add_argument("--mover-rate", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_synth_corpus)

    p = sub.add_parser("build-vocab", help="build a vocabulary file from tokenized text")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--max-size", type=int, default=50000)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train-baseline", help="stage 1: transformer without alignment heads")
    _add_training(p, align_required=False)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("train-aligned", help="stage 2: alignment-assisted transformer")
    _add_training(p, align_required=True)
    p.add_argument("--init", help="baseline checkpoint to initialize from")
    p.add_argument("--from-scratch", action="store_true", help="ablation: random initialization")
    p.set_defaults(func=cmd_train_aligned)

    p = sub.add_parser("train-alignment-model", help="self-attentive jump model")
    _add_training(p, align_required=True)
    p.add_argument("--max-jump", type=int, default=16, help="W: jumps are predicted in [-W, W]")
    p.set_defaults(func=cmd_train_alignment_model)

    p = sub.add_parser("translate", help="beam search translation")
    _add_decoding(p)
    p.add_argument("--dump-attention", help="write accumulated attention tensors (checkpoint container)")
    p.add_argument("--dump-alignment", help="write alignment paths (Pharaoh, 0-based)")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("translate-guided", help="dictionary-guided translation")
    _add_decoding(p)
    p.add_argument("--dictionary", required=True, help="'source<TAB>target' or 'id<TAB>source<TAB>target' lines")
    p.add_argument("--dump-attention")
    p.add_argument("--dump-alignment")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("extract-alignments", help="decode and write attention-extracted alignments")
    _add_decoding(p, output_help="alignments (Pharaoh, 0-based)")
    p.add_argument("--mode", choices=("baseline", "assisted"), default="baseline")
    p.add_argument("--translations", help="also write the translations")
    p.set_defaults(func=cmd_extract_alignments)

    p = sub.add_parser("build-dictionary", help="simulated per-sentence dictionaries from aligned references")
    p.add_argument("--src", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--align", required=True, help="source-reference alignments (Pharaoh)")
    p.add_argument("--baseline-output", required=True, help="unconstrained baseline translations")
    p.add_argument("--stopwords", help="one word per line (default: built-in English list)")
    p.add_argument("--max-entries", type=int, default=4)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_build_dictionary)

    p = sub.add_parser("evaluate-bleu", help="case-insensitive corpus BLEU")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate_bleu)

    p = sub.add_parser("align-accuracy", help="fraction of target words aligned as in the gold file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_align_accuracy)

    p = sub.add_parser("bench-prune", help="lexical evaluations and BLEU across pruning thresholds")
    _add_decoding(p, output_help="records 'name<TAB>threshold<TAB>value'")
    p.add_argument("--reference", required=True)
    p.add_argument("--thresholds", default="0,0.05,0.1,0.15,0.2,0.3,0.5,0.99")
    p.set_defaults(func=cmd_bench_prune)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = Run(args, argv)
    try:
        args.func(run)
        missing = [p for p in run.outputs if not os.path.exists(p)]
        if missing:
            raise RuntimeError(f"artifacts not written: {', '.join(missing)}")
        if args.command != "replay":
            _write_manifest(run)
    except FileNotFoundError as exc:
        print(f"anmt: error: no such file: {exc.filename or exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"anmt: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ckpt.CheckpointError) as exc:
        print(f"anmt: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
