"""Embedding lookup, stacked highway BiLSTM, and ELU feature extractors."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Module, Tensor

log = logging.getLogger(__name__)


class Embeddings(Module):
    def __init__(self, n_words: int, n_deps: int, n_pos: int, d_w: int, d_dep: int, d_pos: int,
                 rng: np.random.Generator):
        # N(0, 0.01) read as variance 0.01
        self.word = ad.init_normal(rng, (n_words, d_w), 0.1)
        self.dep = ad.init_normal(rng, (n_deps, d_dep), 0.1)
        self.pos = ad.init_normal(rng, (n_pos, d_pos), 0.1)

    @property
    def width(self) -> int:
        return self.word.shape[1] + self.dep.shape[1] + self.pos.shape[1]

    def __call__(self, words: np.ndarray, deps: np.ndarray, pos: np.ndarray) -> Tensor:
        """Concatenate word, dependency-label and POS vectors per token."""
        return ad.concat([ad.take(self.word, words), ad.take(self.dep, deps),
                          ad.take(self.pos, pos)], axis=-1)

    def load_pretrained(self, vectors: dict[str, np.ndarray], words: list[str],
                        unk_index: int = 1) -> int:
        """Copy vectors into the word table and freeze those rows; returns the hit count."""
        d_w = self.word.shape[1]
        frozen = np.zeros(self.word.shape[0], dtype=bool)
        data = self.word.data.copy()
        for k, w in enumerate(words):
            vec = vectors.get(w)
            if vec is not None and k != unk_index:
                if vec.shape != (d_w,):
                    raise ValueError(f"vector for {w!r} has width {vec.shape[0]}, table expects {d_w}")
                data[k] = vec
                frozen[k] = True
        self.word.data = data
        self.word.grad_mask = np.where(frozen, 0.0, 1.0)[:, None].astype(np.float32)
        return int(frozen.sum())


def read_word_vectors(path) -> tuple[int, dict[str, np.ndarray]]:
    """Read ``token v1 ... vd`` lines (UTF-8). A leading ``count dim`` header is skipped."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            vec = np.asarray(parts[1:], dtype=np.float32)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, found {vec.size}")
            vectors[parts[0]] = vec
    if dim is None:
        raise ValueError(f"{path}: no vectors found")
    return dim, vectors


class LSTMDirection(Module):
    def __init__(self, d_in: int, d_h: int, rng: np.random.Generator):
        self.W = ad.init_glorot(rng, (d_in, 4 * d_h))
        self.U = ad.init_glorot(rng, (d_h, 4 * d_h))
        b = np.zeros(4 * d_h, dtype=np.float32)
        b[d_h:2 * d_h] = 1.0  # forget gate
        self.b = ad.parameter(b)
        self.d_h = d_h

    def step(self, x_proj: Tensor, h: Tensor, c: Tensor, rec_mask: np.ndarray | None):
        """One cell update given the precomputed input projection ``x W + b``."""
        d = self.d_h
        h_in = h * rec_mask if rec_mask is not None else h
        gates = x_proj + h_in @ self.U
        sig = ad.sigmoid(gates)
        i, f, o = sig[..., :d], sig[..., d:2 * d], sig[..., 3 * d:]
        g = ad.tanh(gates[..., 2 * d:3 * d])
        c = f * c + i * g
        h = o * ad.tanh(c)
        return h, c

    def __call__(self, x: Tensor, rec_mask: np.ndarray | None = None) -> Tensor:
        """Run left to right over ``x`` of shape (S, L, d_in)."""
        S, L, _ = x.shape
        proj = x @ self.W + self.b
        h = Tensor(np.zeros((S, self.d_h), dtype=x.dtype))
        c = Tensor(np.zeros((S, self.d_h), dtype=x.dtype))
        outs = []
        for t in range(L):
            h, c = self.step(proj[:, t], h, c, rec_mask)
            outs.append(h)
        return ad.stack(outs, axis=1)


def reverse_index(lengths: np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Index pair reversing each sequence within its own length; padding stays put."""
    t = np.arange(L)[None, :]
    lens = np.asarray(lengths)[:, None]
    rev = np.where(t < lens, lens - 1 - t, t)
    return np.arange(len(lengths))[:, None], rev


class HighwayBiLSTM(Module):
    """Stacked BiLSTM; each layer is ``t * H + (1 - t) * proj(input)``."""

    def __init__(self, d_in: int, d_h: int, n_layers: int, rng: np.random.Generator,
                 recurrent_dropout: float = 0.0, dropout: float = 0.0):
        self.layers = []
        self.gates = []
        self.projections = []
        width = d_in
        for _ in range(n_layers):
            self.layers.append([LSTMDirection(width, d_h, rng), LSTMDirection(width, d_h, rng)])
            self.gates.append([ad.init_glorot(rng, (width, 2 * d_h)), ad.zeros(2 * d_h)])
            self.projections.append(ad.init_glorot(rng, (width, 2 * d_h)) if width != 2 * d_h else None)
            width = 2 * d_h
        self.d_h = d_h
        self.recurrent_dropout = recurrent_dropout
        self.dropout = dropout

    @property
    def out_width(self) -> int:
        return 2 * self.d_h

    def __call__(self, x: Tensor, lengths: np.ndarray, rng: np.random.Generator | None = None) -> Tensor:
        S, L, _ = x.shape
        rows, rev = reverse_index(lengths, L)
        train = self.training and rng is not None
        for (fwd, bwd), (Wt, bt), proj in zip(self.layers, self.gates, self.projections):
            masks = [None, None]
            if train and self.recurrent_dropout > 0:
                # one mask per sequence, reused at every time step
                masks = [ad.dropout_mask((S, self.d_h), self.recurrent_dropout, rng, x.dtype)
                         for _ in range(2)]
            h_f = fwd(x, masks[0])
            h_b = bwd(x[rows, rev], masks[1])[rows, rev]
            H = ad.concat([h_f, h_b], axis=-1)
            t = ad.sigmoid(x @ Wt + bt)
            carry = x @ proj if proj is not None else x
            x = t * H + (1.0 - t) * carry
        return ad.dropout(x, self.dropout, rng, train)


class FeatureMLPs(Module):
    """Named one-layer ELU extractors ``ELU(x W + b)`` with independent weights."""

    def __init__(self, widths: dict[str, tuple[int, int]], rng: np.random.Generator, dropout: float = 0.0):
        self.W = {name: ad.init_glorot(rng, (d_in, d_out)) for name, (d_in, d_out) in widths.items()}
        self.b = {name: ad.zeros(d_out) for name, (_, d_out) in widths.items()}
        self.dropout = dropout

    def __call__(self, name: str, x: Tensor, rng: np.random.Generator | None = None) -> Tensor:
        if name not in self.W:
            raise ValueError(f"unknown feature extractor {name!r}; known: {sorted(self.W)}")
        W = self.W[name]
        if x.shape[-1] != W.shape[0]:
            raise ad.ShapeError(f"extractor {name!r} expects width {W.shape[0]}, got input {x.shape}")
        out = ad.elu(x @ W + self.b[name])
        return ad.dropout(out, self.dropout, rng, self.training and rng is not None)
