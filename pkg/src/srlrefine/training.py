"""Two-stage training: the baseline first, then the refiner on frozen baseline output."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .baseline import BaselineLogits, BaselineModel, Encoded, decode
from .config import ModelConfig, TrainConfig
from .conll import PredicateInstance, Prediction, Vocabulary
from .evaluation import labeled_f1
from .features import Batch, length_buckets, make_batch
from .refiner import PredictionState, Refiner

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


# -- stochastic decoding and losses ------------------------------------------------

def gumbel_noise(shape, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    u = rng.random(shape)
    u = np.clip(u, np.finfo(np.float64).tiny, 1.0 - 1e-12)
    return (-np.log(-np.log(u))).astype(dtype)


def gumbel_softmax(logits, lam: float, rng: np.random.Generator | None, axis: int = -1) -> Tensor:
    """``softmax(logits + lam * eps)`` with standard Gumbel ``eps`` per logit."""
    if lam < 0:
        raise ValueError(f"Gumbel multiplier must be nonnegative, got {lam}")
    logits = ad.as_tensor(logits)
    if lam == 0:
        return ad.softmax(logits, axis=axis)
    return ad.softmax(logits + lam * gumbel_noise(logits.shape, rng, logits.dtype), axis=axis)


def softmax_margin_loss(logits, gold) -> Tensor:
    """Per-item ``-log softmax(logits - onehot(gold))[gold]``; shape ``logits.shape[:-1]``."""
    logits = ad.as_tensor(logits)
    gold = np.asarray(gold, dtype=np.int64)
    K = logits.shape[-1]
    onehot = np.eye(K, dtype=logits.dtype)[gold]
    logp = ad.log_softmax(logits - onehot, axis=-1)
    return -ad.tsum(logp * onehot, axis=-1)


def cross_entropy(logits, gold) -> Tensor:
    logits = ad.as_tensor(logits)
    gold = np.asarray(gold, dtype=np.int64)
    onehot = np.eye(logits.shape[-1], dtype=logits.dtype)[gold]
    return -ad.tsum(ad.log_softmax(logits, axis=-1) * onehot, axis=-1)


def step_loss(role_logits: Tensor, sense_logits: Tensor, batch: Batch) -> Tensor:
    """Mean over instances of (token-averaged role loss + sense loss)."""
    mask = batch.token_mask
    role = softmax_margin_loss(role_logits, batch.gold_roles)
    role = ad.tsum(role * mask, axis=-1) * (1.0 / mask.sum(axis=-1))
    known = (batch.gold_sense >= 0).astype(mask.dtype)
    sense = softmax_margin_loss(sense_logits, np.maximum(batch.gold_sense, 0)) * known
    return ad.mean(role + sense)


def refine_loss(states: Sequence[PredictionState], batch: Batch) -> Tensor:
    """Sum of per-step losses over the refined states (t >= 1)."""
    if not states:
        raise ValueError("refine_loss needs at least one refined state")
    total = None
    for st in states:
        term = step_loss(st.role_logits, st.sense_logits, batch)
        total = term if total is None else total + term
    return total


# -- decoding ----------------------------------------------------------------------

def decode_batch(batch: Batch, R, P, vocab: Vocabulary) -> list[Prediction]:
    roles_idx, sense_idx = decode(R, P)
    out = []
    for b, inst in enumerate(batch.instances):
        roles = tuple(vocab.roles[k] for k in roles_idx[b, :inst.n])
        out.append(Prediction(batch.inventories[b][int(sense_idx[b])], roles))
    return out


@dataclass
class Predictor:
    """Inference over instances with an optional refiner."""
    baseline: BaselineModel
    refiner: Refiner | None = None
    batch_size: int = 64

    def states(self, batch: Batch, T: int) -> tuple[list[PredictionState], BaselineLogits]:
        with ad.no_grad():
            logits, enc = self.baseline(batch)
            R0, P0 = ad.softmax(logits.roles), ad.softmax(logits.senses)
            initial = PredictionState(0, R0, P0, logits.roles, logits.senses)
            if self.refiner is None or T == 0:
                return [initial], logits
            Pi = self.baseline.sense_embeddings(batch)
            inp = self.refiner.prepare(enc, batch, logits, Pi)
            return self.refiner.iterate(initial, inp, T), logits

    def predict(self, instances: Sequence[PredicateInstance], T: int = 2) -> list[list[Prediction]]:
        """Predictions for t = 0..T (T clipped to 0 without a refiner), in input order."""
        self.baseline.eval()
        if self.refiner is not None:
            self.refiner.eval()
        steps = T if self.refiner is not None else 0
        by_t: list[dict[int, Prediction]] = [dict() for _ in range(steps + 1)]
        index = {id(inst): k for k, inst in enumerate(instances)}
        for chunk in length_buckets(instances, self.batch_size):
            batch = make_batch(chunk, self.baseline.vocab)
            states, _ = self.states(batch, steps)
            for t, st in enumerate(states):
                for inst, pred in zip(batch.instances, decode_batch(batch, st.R, st.P, self.baseline.vocab)):
                    by_t[t][index[id(inst)]] = pred
        return [[d[k] for k in range(len(instances))] for d in by_t]


# -- training loops ----------------------------------------------------------------

@dataclass
class EpochRecord:
    epoch: int
    split: str
    loss: float
    precision: float
    recall: float
    f1: float

    def line(self) -> str:
        return (f"epoch={self.epoch} split={self.split} loss={self.loss:.6f} "
                f"P={self.precision:.4f} R={self.recall:.4f} F1={self.f1:.4f}")


@dataclass
class TrainResult:
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_f1: float = float("nan")
    seconds: float = 0.0


def _rngs(seed: int) -> dict[str, np.random.Generator]:
    names = ("init", "batches", "dropout", "gumbel")
    seqs = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, seqs)}


def _snapshot(module) -> dict[str, np.ndarray]:
    return {k: v.copy() for k, v in module.state_dict().items()}


def _run_epochs(params, module, batches: list[Batch], loss_fn: Callable[[Batch], Tensor],
                dev_score: Callable[[], tuple[float, float, float]] | None, cfg: TrainConfig,
                rngs, log_fn) -> TrainResult:
    result = TrainResult()
    start = time.perf_counter()
    if cfg.n_epochs == 0 or not batches:
        return result
    opt = ad.Adam(params, lr=cfg.learning_rate)
    best_state, best_f1, stale = None, -1.0, 0
    for epoch in range(1, cfg.n_epochs + 1):
        module.train()
        total, count = 0.0, 0
        for k in rngs["batches"].permutation(len(batches)):
            batch = batches[k]
            opt.zero_grad()
            loss = loss_fn(batch)
            value = float(loss.data)
            if not math.isfinite(value):
                log_fn(f"epoch={epoch} non-finite loss on batch {k}; epoch aborted")
                break
            ad.backward(loss)
            opt.step()
            total += value * batch.size
            count += batch.size
        train_loss = total / max(count, 1)
        if dev_score is None:
            rec = EpochRecord(epoch, "train", train_loss, float("nan"), float("nan"), float("nan"))
            result.history.append(rec)
            log_fn(rec.line())
            continue
        module.eval()
        p, r, f = dev_score()
        rec = EpochRecord(epoch, "dev", train_loss, p, r, f)
        result.history.append(rec)
        log_fn(rec.line())
        if f > best_f1:
            best_f1, best_state, stale = f, _snapshot(module), 0
            result.best_epoch, result.best_dev_f1 = epoch, f
        else:
            stale += 1
            if cfg.early_stopping and stale >= cfg.patience:
                log_fn(f"early stop at epoch {epoch}; best epoch {result.best_epoch}")
                break
    if best_state is not None and cfg.early_stopping:
        module.load_state_dict(best_state)
    module.eval()
    result.seconds = time.perf_counter() - start
    return result


def _batches(instances, vocab, cfg: TrainConfig, rng) -> list[Batch]:
    return [make_batch(chunk, vocab) for chunk in length_buckets(instances, cfg.batch_size, rng)]


def train_baseline(train: Sequence[PredicateInstance], dev: Sequence[PredicateInstance] | None,
                   vocab: Vocabulary, model_cfg: ModelConfig, cfg: TrainConfig,
                   log_fn: Callable[[str], None] = log.info,
                   word_vectors: dict[str, np.ndarray] | None = None) -> tuple[BaselineModel, TrainResult]:
    rngs = _rngs(cfg.seed)
    model = BaselineModel(vocab, model_cfg, rngs["init"])
    if word_vectors:
        hits = model.embeddings.load_pretrained(word_vectors, vocab.words)
        log_fn(f"pretrained vectors cover {hits}/{len(vocab.words)} words (rows frozen)")
    batches = _batches(train, vocab, cfg, rngs["batches"])

    def loss_fn(batch):
        logits, _ = model(batch, rngs["dropout"])
        return step_loss(logits.roles, logits.senses, batch)

    dev_score = None
    if dev:
        predictor = Predictor(model)

        def dev_score():
            rep = labeled_f1(dev, predictor.predict(dev, T=0)[0])
            return rep.precision, rep.recall, rep.f1

    result = _run_epochs(model.parameters(), model, batches, loss_fn, dev_score, cfg, rngs, log_fn)
    return model, result


@dataclass
class _FrozenBaseline:
    logits: BaselineLogits
    enc: Encoded
    Pi: Tensor


def train_refiner(train: Sequence[PredicateInstance], dev: Sequence[PredicateInstance] | None,
                  baseline: BaselineModel, model_cfg: ModelConfig, cfg: TrainConfig,
                  log_fn: Callable[[str], None] = log.info,
                  expected_baseline_hash: str | None = None,
                  baseline_sha: str | None = None) -> tuple[Refiner, TrainResult]:
    if cfg.stage != "refiner":
        raise TrainingError(f"train_refiner needs stage=refiner, got {cfg.stage!r}")
    if expected_baseline_hash is not None and expected_baseline_hash != baseline_sha:
        raise TrainingError("baseline checkpoint hash does not match the expected hash; refusing to train")
    rngs = _rngs(cfg.seed)
    vocab = baseline.vocab
    baseline.eval()
    refiner = Refiner(vocab.n_roles, baseline.embeddings.width, baseline.cfg.d_pi, model_cfg,
                      rngs["init"], mode=cfg.mode, tied=cfg.tied)
    batches = _batches(train, vocab, cfg, rngs["batches"])
    frozen: dict[int, _FrozenBaseline] = {}
    with ad.no_grad():
        for batch in batches:
            logits, enc = baseline(batch)
            frozen[id(batch)] = _FrozenBaseline(logits, enc, baseline.sense_embeddings(batch))
    lam_r = cfg.lambda_role if cfg.gumbel else 0.0
    lam_s = cfg.lambda_sense if cfg.gumbel else 0.0

    def loss_fn(batch):
        fb = frozen[id(batch)]
        # perturb only the initial prediction; later steps see clean softmax outputs
        R0 = gumbel_softmax(fb.logits.roles, lam_r, rngs["gumbel"])
        P0 = gumbel_softmax(fb.logits.senses, lam_s, rngs["gumbel"])
        inp = refiner.prepare(fb.enc, batch, fb.logits, fb.Pi, rngs["dropout"])
        states = refiner.iterate(PredictionState(0, R0, P0), inp, cfg.iterations)
        return refine_loss(states[1:], batch)

    dev_score = None
    if dev:
        predictor = Predictor(baseline, refiner)

        def dev_score():
            rep = labeled_f1(dev, predictor.predict(dev, T=cfg.iterations)[-1])
            return rep.precision, rep.recall, rep.f1

    result = _run_epochs(refiner.parameters(), refiner, batches, loss_fn, dev_score, cfg, rngs, log_fn)
    return refiner, result


def gumbel_flip_rate(baseline: BaselineModel, instances: Sequence[PredicateInstance], lam: float,
                     seed: int = 0, batch_size: int = 64) -> float:
    """Fraction of real tokens whose argmax role changes under Gumbel perturbation."""
    rng = np.random.default_rng(seed)
    flipped = total = 0
    baseline.eval()
    with ad.no_grad():
        for chunk in length_buckets(instances, batch_size):
            batch = make_batch(chunk, baseline.vocab)
            logits, _ = baseline(batch)
            clean = np.argmax(logits.roles.data, axis=-1)
            noisy = np.argmax(gumbel_softmax(logits.roles, lam, rng).data, axis=-1)
            mask = batch.token_mask > 0
            flipped += int(((clean != noisy) & mask).sum())
            total += int(mask.sum())
    return flipped / max(total, 1)
