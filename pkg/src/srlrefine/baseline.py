"""Factorized baseline: biaffine role scoring and predicate-specific sense scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Module, Tensor
from .config import ModelConfig
from .conll import Vocabulary
from .encoder import Embeddings, FeatureMLPs, HighwayBiLSTM
from .features import Batch

# masked sense slots get this added before the softmax
NEG_INF = -1e9


class Biaffine(Module):
    """``score_l(p, a) = p^T U_l a + w_l . [p ; a] + b_l`` for each output label ``l``."""

    def __init__(self, d_pred: int, d_arg: int, n_out: int, rng: np.random.Generator):
        self.U = ad.init_glorot(rng, (n_out, d_pred, d_arg))
        self.w_pred = ad.init_glorot(rng, (d_pred, n_out))
        self.w_arg = ad.init_glorot(rng, (d_arg, n_out))
        self.b = ad.zeros(n_out)
        self.n_out = n_out

    def __call__(self, pred: Tensor, args: Tensor) -> Tensor:
        """``pred`` (B, d_pred), ``args`` (B, n, d_arg) -> (B, n, n_out)."""
        B = pred.shape[0]
        k, dp, da = self.U.shape
        # pU: (B, d_pred) @ (d_pred, k*d_arg) -> (B, k, d_arg)
        U_flat = ad.reshape(ad.transpose(self.U, (1, 0, 2)), (dp, k * da))
        pU = ad.reshape(pred @ U_flat, (B, k, da))
        bilinear = args @ ad.swapaxes(pU, 1, 2)  # (B, n, k)
        linear = args @ self.w_arg + ad.reshape(pred @ self.w_pred, (B, 1, k))
        return bilinear + linear + self.b


@dataclass
class BaselineLogits:
    null: Tensor  # (B, L)
    other: Tensor  # (B, L, r-1)
    roles: Tensor  # (B, L, r)
    senses: Tensor  # (B, M), padded senses carry NEG_INF


@dataclass
class Encoded:
    """Per-instance encoder output plus the embedded input it came from."""
    x: Tensor  # (S, L, d_x) embeddings per distinct sentence
    h: Tensor  # (B, L, 2 d_h)
    h_pred: Tensor  # (B, 2 d_h) row j


class BaselineModel(Module):
    def __init__(self, vocab: Vocabulary, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.vocab = vocab
        r = vocab.n_roles
        self.embeddings = Embeddings(len(vocab.words), len(vocab.deps), len(vocab.pos),
                                     cfg.d_w, cfg.d_dep, cfg.d_pos, rng)
        self.encoder = HighwayBiLSTM(self.embeddings.width, cfg.d_h, cfg.n_layers, rng,
                                     cfg.recurrent_dropout, cfg.dropout)
        d_h = self.encoder.out_width
        self.mlps = FeatureMLPs({
            "arg_null": (d_h, cfg.d_rho0),
            "arg_other": (d_h, cfg.d_rho1),
            "pred_null": (d_h, cfg.d_rho0),
            "pred_other": (d_h, cfg.d_rho1),
            "sense": (d_h, cfg.d_pi),
        }, rng, cfg.dropout)
        self.null_scorer = Biaffine(cfg.d_rho0, cfg.d_rho0, 1, rng)
        self.other_scorer = Biaffine(cfg.d_rho1, cfg.d_rho1, r - 1, rng) if r > 1 else None
        self.sense_table = ad.init_normal(rng, (vocab.n_sense_rows, cfg.d_pi), 0.1)

    # -- pieces --------------------------------------------------------------
    def embed(self, batch: Batch, rng=None) -> Tensor:
        x = self.embeddings(batch.words, batch.deps, batch.pos)
        return ad.dropout(x, self.cfg.dropout, rng, self.training and rng is not None)

    def encode(self, batch: Batch, rng=None) -> Encoded:
        x = self.embed(batch, rng)
        h = self.encoder(x, batch.lengths, rng)
        # fan unique sentences out to instances
        h_i = h[batch.inst_sent]
        h_pred = h_i[np.arange(batch.size), batch.j]
        return Encoded(x, h_i, h_pred)

    def score_roles(self, enc: Encoded, rng=None) -> tuple[Tensor, Tensor, Tensor]:
        """Null logits (B, L), other-role logits (B, L, r-1) and their concatenation."""
        a0 = self.mlps("arg_null", enc.h, rng)
        p0 = self.mlps("pred_null", enc.h_pred, rng)
        null = self.null_scorer(p0, a0)  # (B, L, 1)
        if self.other_scorer is None:
            return null[..., 0], null[..., 1:], null
        a1 = self.mlps("arg_other", enc.h, rng)
        p1 = self.mlps("pred_other", enc.h_pred, rng)
        other = self.other_scorer(p1, a1)
        return null[..., 0], other, ad.concat([null, other], axis=-1)

    def sense_embeddings(self, batch: Batch) -> Tensor:
        """Stacked inventories ``Pi`` per instance: (B, M, d_pi)."""
        return ad.take(self.sense_table, batch.sense_rows)

    def score_senses(self, enc: Encoded, batch: Batch, rng=None) -> Tensor:
        h_pi = self.mlps("sense", enc.h_pred, rng)
        Pi = self.sense_embeddings(batch)
        logits = ad.reshape(Pi @ ad.reshape(h_pi, h_pi.shape + (1,)), Pi.shape[:2])
        return logits + (1.0 - batch.sense_mask) * NEG_INF

    def __call__(self, batch: Batch, rng=None) -> tuple[BaselineLogits, Encoded]:
        enc = self.encode(batch, rng)
        null, other, roles = self.score_roles(enc, rng)
        senses = self.score_senses(enc, batch, rng)
        return BaselineLogits(null, other, roles, senses), enc


def role_distribution(role_logits: Tensor) -> Tensor:
    return ad.softmax(role_logits, axis=-1)


def sense_distribution(sense_logits: Tensor) -> Tensor:
    return ad.softmax(sense_logits, axis=-1)


def decode(R: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Argmax readout; ties go to the lowest index (null role, first sense)."""
    R = R.data if isinstance(R, Tensor) else np.asarray(R)
    P = P.data if isinstance(P, Tensor) else np.asarray(P)
    return np.argmax(R, axis=-1), np.argmax(P, axis=-1)
