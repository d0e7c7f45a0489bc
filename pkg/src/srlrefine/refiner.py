"""Structured refinement of role and sense distributions.

Each step reads the previous distributions (R, P), compresses the role matrix
into per-token sums over the other tokens (structured mode) and a sentence-wide
role mass vector, and adds corrective logits to the frozen baseline logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Module, Tensor
from .baseline import BaselineLogits, Encoded
from .config import ModelConfig
from .encoder import FeatureMLPs, HighwayBiLSTM
from .features import Batch


@dataclass
class PredictionState:
    t: int
    R: Tensor  # (B, L, r)
    P: Tensor  # (B, M)
    role_logits: Tensor | None = None  # pre-softmax scores that produced R
    sense_logits: Tensor | None = None


@dataclass
class RefinerInputs:
    """Everything the refinement step reuses across iterations."""
    role_logits: Tensor  # frozen baseline logits (B, L, r)
    sense_logits: Tensor  # (B, M)
    Pi: Tensor  # (B, M, d_pi) sense embeddings
    g_arg: Tensor  # (B, L, d_g)
    g_pred: Tensor  # (B, d_g)
    token_mask: np.ndarray  # (B, L)


def aggregate_other_roles(R: Tensor, token_mask: np.ndarray | None = None) -> Tensor:
    """``o[i, u] = sum_{k != i} R[k, u+1]`` over the non-null columns.

    Works on a single (n, r) matrix or a batch (B, n, r); padded rows are
    excluded through ``token_mask``.
    """
    non_null = R[..., 1:]
    if token_mask is not None:
        non_null = non_null * token_mask[..., None]
    total = ad.tsum(non_null, axis=-2, keepdims=True)
    return total - non_null


def role_mass(R: Tensor, token_mask: np.ndarray | None = None) -> Tensor:
    """``sum_k R[k, 1:]``: expected count of every non-null role."""
    non_null = R[..., 1:]
    if token_mask is not None:
        non_null = non_null * token_mask[..., None]
    return ad.tsum(non_null, axis=-2)


def relaxed_sense(Pi: Tensor, P: Tensor) -> Tensor:
    """``Pi^T P`` per instance: (B, M, d) x (B, M) -> (B, d)."""
    B, M = P.shape
    return ad.reshape(ad.swapaxes(Pi, 1, 2) @ ad.reshape(P, (B, M, 1)), (B, Pi.shape[2]))


class Refiner(Module):
    """Role and sense refinement networks with optional weight tying.

    ``mode="self"`` drops the other-role aggregate from the role input and the
    role mass from the sense input.
    """

    def __init__(self, n_roles: int, d_x: int, d_pi: int, cfg: ModelConfig,
                 rng: np.random.Generator, mode: str = "structured", tied: bool = True):
        if mode not in ("structured", "self"):
            raise ValueError(f"unknown refinement mode {mode!r}")
        self.mode = mode
        self.tied = tied
        self.n_roles = r = n_roles
        self.d_pi = d_pi
        self.encoder = HighwayBiLSTM(d_x, cfg.d_h, cfg.n_layers, rng, cfg.recurrent_dropout, cfg.dropout)
        d_enc = self.encoder.out_width
        self.mlps = FeatureMLPs({"arg": (d_enc, cfg.d_g), "pred": (d_enc, cfg.d_g)}, rng, cfg.dropout)
        d_g = cfg.d_g
        if mode == "structured":
            role_in = 2 * r - 1 + 2 * d_g + d_pi
            sense_in = r - 1 + d_g + d_pi
        else:
            role_in = r + 2 * d_g + d_pi
            sense_in = d_g + d_pi
        self.W_role = self._init(rng, (cfg.d_r, role_in))
        self.W_sense = self._init(rng, (cfg.d_r, sense_in))
        if not tied:
            self.W_role_out = self._init(rng, (r, cfg.d_r))
            self.W_sense_out = self._init(rng, (d_pi, cfg.d_r))

    @staticmethod
    def _init(rng, shape):
        return ad.init_normal(rng, shape, 1.0 / np.sqrt(shape[1]))

    # the decoder-side matrices; with tying they are views of the encoder side
    def role_out(self) -> Tensor:
        if self.tied:
            return ad.transpose(self.W_role)[: self.n_roles]
        return self.W_role_out

    def sense_out(self) -> Tensor:
        if self.tied:
            return ad.transpose(self.W_sense)[: self.d_pi]
        return self.W_sense_out

    def prepare(self, enc: Encoded, batch: Batch, logits: BaselineLogits, Pi: Tensor,
                rng=None) -> RefinerInputs:
        # refiner features are computed once per instance and reused at every step
        g = self.encoder(enc.x, batch.lengths, rng)[batch.inst_sent]
        g_arg = self.mlps("arg", g, rng)
        g_pred_row = g[np.arange(batch.size), batch.j]
        g_pred = self.mlps("pred", g_pred_row, rng)
        return RefinerInputs(logits.roles, logits.senses, Pi, g_arg, g_pred, batch.token_mask)

    def role_corrections(self, R: Tensor, P: Tensor, inp: RefinerInputs) -> Tensor:
        """``M^alpha``: (B, L, r) additive role logits."""
        B, L, _ = R.shape
        sense_vec = relaxed_sense(inp.Pi, P)
        per_inst = ad.concat([inp.g_pred, sense_vec], axis=-1)
        per_inst = per_inst.reshape(B, 1, per_inst.shape[-1]) * np.ones((1, L, 1), dtype=R.dtype)
        parts = [R]
        if self.mode == "structured":
            parts.append(aggregate_other_roles(R, inp.token_mask))
        parts += [inp.g_arg, per_inst]
        z = ad.concat(parts, axis=-1)
        hidden = ad.sigmoid(z @ ad.transpose(self.W_role))
        return hidden @ ad.transpose(self.role_out())

    def sense_corrections(self, R: Tensor, P: Tensor, inp: RefinerInputs) -> Tensor:
        """``M^pi``: (B, M) additive sense logits."""
        parts = [relaxed_sense(inp.Pi, P)]
        if self.mode == "structured":
            parts.append(role_mass(R, inp.token_mask))
        parts.append(inp.g_pred)
        z = ad.concat(parts, axis=-1)
        hidden = ad.sigmoid(z @ ad.transpose(self.W_sense))
        u = hidden @ ad.transpose(self.sense_out())  # (B, d_pi)
        B = u.shape[0]
        return ad.reshape(inp.Pi @ ad.reshape(u, (B, self.d_pi, 1)), inp.Pi.shape[:2])

    def refine_roles(self, state: PredictionState, inp: RefinerInputs) -> tuple[Tensor, Tensor]:
        """New role distribution and the logits behind it."""
        logits = self.role_corrections(state.R, state.P, inp) + inp.role_logits
        return ad.softmax(logits, axis=-1), logits

    def refine_senses(self, state: PredictionState, inp: RefinerInputs) -> tuple[Tensor, Tensor]:
        logits = self.sense_corrections(state.R, state.P, inp) + inp.sense_logits
        return ad.softmax(logits, axis=-1), logits

    def step(self, state: PredictionState, inp: RefinerInputs) -> PredictionState:
        R, role_logits = self.refine_roles(state, inp)
        P, sense_logits = self.refine_senses(state, inp)
        return PredictionState(state.t + 1, R, P, role_logits, sense_logits)

    def iterate(self, initial: PredictionState, inp: RefinerInputs, T: int) -> list[PredictionState]:
        """States for t = 0..T; the same parameters serve every step."""
        if T < 0:
            raise ValueError(f"iteration count must be nonnegative, got {T}")
        states = [initial]
        for _ in range(T):
            states.append(self.step(states[-1], inp))
        return states

    def zero_(self) -> "Refiner":
        """Set the refinement weights to zero, making every step a no-op."""
        for name in ("W_role", "W_sense", "W_role_out", "W_sense_out"):
            p = getattr(self, name, None)
            if p is not None:
                p.data = np.zeros_like(p.data)
        return self
