"""Training loops: baseline lexical model, alignment-assisted continuation,
and the jump model, with dev-perplexity early stopping."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from . import params as ckpt
from .alignment import AlignmentModel, AlignmentModelConfig
from .data import AlignedSentencePair, InputError, compute_jumps
from .lexical import LexicalModel, LexicalModelConfig
from .optim import AdamState, DivergenceError, adam_step
from .params import Initializer, ParameterStore

logger = logging.getLogger(__name__)

Model = Union[LexicalModel, AlignmentModel]


class IncompatibleModelError(ValueError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 20
    max_steps: Optional[int] = None
    seed: int = 1
    eval_every: Optional[int] = None    # steps; None = once per epoch
    patience: int = 5
    lr: float = 1e-3
    stage: str = "baseline"             # baseline | aligned | alignment

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 0 or self.patience < 1 or self.lr <= 0:
            raise ValueError(f"invalid training config: {self}")
        if self.max_steps is not None and self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.stage not in ("baseline", "aligned", "alignment"):
            raise ValueError(f"unknown stage {self.stage!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_kv_text(cls, text: str, **overrides) -> "TrainConfig":
        """Parse ``key=value`` lines (``#`` starts a comment)."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values: dict = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {n}: expected key=value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"config line {n}: unknown key {key!r}")
            values[key] = _coerce(val, types[key])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _coerce(val: str, typ) -> object:
    t = str(typ)
    if val.lower() in ("none", "") and "Optional" in t:
        return None
    if "int" in t:
        return int(val)
    if "float" in t:
        return float(val)
    return val


@dataclass
class TrainResult:
    model: Model
    log: list = field(default_factory=list)     # (step, mean train loss, dev perplexity)
    best_perplexity: float = math.inf
    steps: int = 0
    stopped_early: bool = False


def make_batches(pairs: Sequence[AlignedSentencePair], batch_size: int,
                 rng: np.random.Generator) -> list[list[int]]:
    """Index batches of similar source length, in shuffled order."""
    order = rng.permutation(len(pairs))
    order = sorted(order, key=lambda k: (pairs[k].J, pairs[k].I))
    batches = [order[s:s + batch_size] for s in range(0, len(order), batch_size)]
    return [batches[k] for k in rng.permutation(len(batches))]


# ---------------------------------------------------------------- evaluation

def evaluate_perplexity(model: Model, pairs: Sequence[AlignedSentencePair], batch_size: int = 64) -> float:
    """exp of the mean per-token negative log-likelihood over ``pairs``.

    The lexical model is fed gold alignments; for the alignment model the
    tokens are jump labels.
    """
    total, count = 0.0, 0
    order = sorted(range(len(pairs)), key=lambda k: (pairs[k].J, pairs[k].I))
    with ad.no_grad():
        for s in range(0, len(order), batch_size):
            batch = [pairs[k] for k in order[s:s + batch_size]]
            loss, n = model.batch_loss(batch)
            total += float(loss.data) * n
            count += n
    return math.exp(total / count)


# ---------------------------------------------------------------- loop

def _train(model: Model, train: Sequence[AlignedSentencePair], dev: Sequence[AlignedSentencePair],
           config: TrainConfig, on_eval: Optional[Callable] = None) -> TrainResult:
    rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng(config.seed + 1)
    state = AdamState(lr=config.lr)
    result = TrainResult(model)
    best = model.params.copy()
    result.best_perplexity = evaluate_perplexity(model, dev) if dev else math.inf
    bad_evals = 0
    running: list[float] = []
    step = 0

    def evaluate() -> bool:
        nonlocal best, bad_evals, running
        ppl = evaluate_perplexity(model, dev) if dev else math.nan
        mean_loss = float(np.mean(running)) if running else math.nan
        running = []
        result.log.append((step, mean_loss, ppl))
        logger.info("%s step %d  train loss %.4f  dev ppl %.4f", config.stage, step, mean_loss, ppl)
        if on_eval:
            on_eval(step, mean_loss, ppl)
        if dev and ppl < result.best_perplexity:
            result.best_perplexity = ppl
            best = model.params.copy()
            bad_evals = 0
        elif dev:
            bad_evals += 1
        return bad_evals >= config.patience

    done = config.max_steps == 0
    for epoch in range(config.max_epochs):
        if done:
            break
        for batch in make_batches(train, config.batch_size, rng):
            pairs = [train[k] for k in batch]
            loss, _ = model.batch_loss(pairs, rng=dropout_rng)
            value = float(loss.data)
            if not math.isfinite(value):
                raise DivergenceError(f"{config.stage}: non-finite loss at step {step + 1}")
            model.params.zero_grad()
            ad.backward(loss)
            adam_step(model.params, model.params.grads(), state)
            running.append(value)
            step += 1
            if config.eval_every and step % config.eval_every == 0 and evaluate():
                done = result.stopped_early = True
            if config.max_steps is not None and step >= config.max_steps:
                done = True
            if done:
                break
        if not config.eval_every and not done and evaluate():
            done = result.stopped_early = True
    if running:
        evaluate()
    result.steps = step
    if dev:
        for name, t in best.items():
            model.params[name].data = t.data
    return result


def train_baseline(train: Sequence[AlignedSentencePair], dev: Sequence[AlignedSentencePair],
                   model_config: LexicalModelConfig, config: TrainConfig, **kw) -> TrainResult:
    if not train:
        raise InputError("empty training corpus")
    if model_config.alignment_head:
        raise IncompatibleModelError("the baseline is trained without the alignment head")
    model = LexicalModel(model_config, seed=config.seed)
    return _train(model, train, dev, dataclasses.replace(config, stage="baseline"), **kw)


def init_aligned_from_baseline(baseline: LexicalModel, seed: int = 0, align_scale: float = 0.1) -> LexicalModel:
    """Alignment-assisted model whose outputs initially equal the baseline's.

    Shared tensors are copied; each layer's new head gets a small random value
    projection and zero output-projection rows, so it starts inert.
    """
    c = baseline.config
    if c.alignment_head:
        raise IncompatibleModelError("checkpoint already has alignment heads")
    cfg = dataclasses.replace(c, alignment_head=True)
    init = Initializer(seed, baseline.dtype)
    p = ParameterStore()
    for name, t in baseline.params.items():
        if name.endswith(".src.wo"):
            continue
        p.add(name, t.data.copy())
    for l in range(c.dec_layers):
        wo = baseline.params[f"dec.{l}.src.wo"].data
        if wo.shape != (c.d_model, c.d_model):
            raise IncompatibleModelError(f"dec.{l}.src.wo has shape {wo.shape}, expected {(c.d_model, c.d_model)}")
        p.add(f"dec.{l}.src.wo", np.concatenate([wo, np.zeros((cfg.d_head, c.d_model), dtype=wo.dtype)]))
        p.add(f"dec.{l}.src.wv_align", init.glorot(c.d_model, cfg.d_head) * align_scale)
    return LexicalModel(cfg, p)


def train_aligned(train: Sequence[AlignedSentencePair], dev: Sequence[AlignedSentencePair],
                  init_model: LexicalModel, config: TrainConfig, **kw) -> TrainResult:
    if not init_model.config.alignment_head:
        raise IncompatibleModelError("stage-2 training needs a model with alignment heads")
    for n, q in enumerate(train):
        if not q.path or len(q.path) != q.I:
            raise InputError(f"training pair {n} has no resolved alignment path")
    model = LexicalModel(init_model.config, init_model.params.copy())
    return _train(model, train, dev, dataclasses.replace(config, stage="aligned"), **kw)


def train_alignment_model(train: Sequence[AlignedSentencePair], dev: Sequence[AlignedSentencePair],
                          model_config: AlignmentModelConfig, config: TrainConfig,
                          jump_width: Optional[int] = None, **kw) -> TrainResult:
    if jump_width is not None and jump_width != model_config.max_jump:
        raise InputError(f"jump labels use width {jump_width} but the model predicts width {model_config.max_jump}")
    model = AlignmentModel(model_config, seed=config.seed)
    return _train(model, train, dev, dataclasses.replace(config, stage="alignment"), **kw)


# ---------------------------------------------------------------- checkpoints

def save_model(path: str, model: Model, extra: Optional[dict] = None) -> None:
    component = "lexical" if isinstance(model, LexicalModel) else "alignment"
    header = {"component": component, "config": model.config.to_dict()}
    if isinstance(model, AlignmentModel):
        W = model.config.max_jump
        header["jump_classes"] = {"offset": W, "min": -W, "max": W}
    header.update(extra or {})
    ckpt.save(path, {f"{component}/{k}": v for k, v in model.params.arrays().items()}, header)


def load_model(path: str) -> Model:
    header, arrays = ckpt.load(path)
    component = header.get("component")
    prefix = f"{component}/"
    store = ckpt.store_from_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
    if component == "lexical":
        return LexicalModel(LexicalModelConfig.from_dict(header["config"]), store)
    if component == "alignment":
        return AlignmentModel(AlignmentModelConfig.from_dict(header["config"]), store)
    raise ckpt.CheckpointError(f"unknown component {component!r} in {path}")


def jump_labels(pairs: Sequence[AlignedSentencePair], W: int) -> list[list[int]]:
    return [compute_jumps(q.path, W) for q in pairs]
