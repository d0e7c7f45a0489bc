"""Turn predicate instances into padded index arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conll import PredicateInstance, Vocabulary


@dataclass
class Batch:
    instances: list[PredicateInstance]
    words: np.ndarray  # (S, L) per unique sentence
    pos: np.ndarray
    deps: np.ndarray
    lengths: np.ndarray  # (S,)
    inst_sent: np.ndarray  # (B,) row of the unique-sentence arrays
    j: np.ndarray  # (B,) 0-based predicate position
    token_mask: np.ndarray  # (B, L) float32
    gold_roles: np.ndarray  # (B, L) int, 0 on padding
    sense_rows: np.ndarray  # (B, M) rows into the sense table
    sense_mask: np.ndarray  # (B, M) float32
    gold_sense: np.ndarray  # (B,) -1 when the gold sense is outside the inventory
    inventories: list[list[str]]

    @property
    def size(self) -> int:
        return len(self.instances)

    @property
    def max_len(self) -> int:
        return self.words.shape[1]


def make_batch(instances: Sequence[PredicateInstance], vocab: Vocabulary) -> Batch:
    instances = list(instances)
    # the encoder runs once per distinct sentence in the batch
    sent_rows: dict[int, int] = {}
    sentences = []
    for inst in instances:
        key = id(inst.sentence)
        if key not in sent_rows:
            sent_rows[key] = len(sentences)
            sentences.append(inst.sentence)
    L = max(len(s) for s in sentences)
    S, B = len(sentences), len(instances)
    words = np.zeros((S, L), dtype=np.int64)
    pos = np.zeros((S, L), dtype=np.int64)
    deps = np.zeros((S, L), dtype=np.int64)
    lengths = np.zeros(S, dtype=np.int64)
    for s, sent in enumerate(sentences):
        lengths[s] = len(sent)
        for i, tok in enumerate(sent.tokens):
            words[s, i] = vocab.word_index(tok.form)
            pos[s, i] = vocab.pos_index(tok.ppos)
            deps[s, i] = vocab.dep_index(tok.pdeprel)

    inventories = [vocab.sense_inventory(inst.lemma) for inst in instances]
    M = max(len(inv) for inv in inventories)
    inst_sent = np.array([sent_rows[id(inst.sentence)] for inst in instances], dtype=np.int64)
    j = np.array([inst.j - 1 for inst in instances], dtype=np.int64)
    token_mask = np.zeros((B, L), dtype=np.float32)
    gold_roles = np.zeros((B, L), dtype=np.int64)
    sense_rows = np.full((B, M), vocab.unknown_sense_row, dtype=np.int64)
    sense_mask = np.zeros((B, M), dtype=np.float32)
    gold_sense = np.zeros(B, dtype=np.int64)
    for b, inst in enumerate(instances):
        token_mask[b, :inst.n] = 1.0
        gold_roles[b, :inst.n] = [vocab.role_index(r) for r in inst.roles]
        rows = vocab.sense_rows(inst.lemma)
        sense_rows[b, :len(rows)] = rows
        sense_mask[b, :len(rows)] = 1.0
        gold_sense[b] = vocab.sense_index(inst.lemma, inst.sense)
    return Batch(instances, words, pos, deps, lengths, inst_sent, j, token_mask, gold_roles,
                 sense_rows, sense_mask, gold_sense, inventories)


def length_buckets(instances: Sequence[PredicateInstance], batch_size: int,
                   rng: np.random.Generator | None = None) -> list[list[PredicateInstance]]:
    """Group instances of similar sentence length; predicates of one sentence stay together.

    With ``rng`` the order inside equal lengths and the batch order are shuffled.
    """
    order = list(range(len(instances)))
    if rng is not None:
        rng.shuffle(order)
    order.sort(key=lambda k: (instances[k].n, instances[k].sentence_index))
    batches = [[instances[k] for k in order[lo:lo + batch_size]]
               for lo in range(0, len(order), batch_size)]
    if rng is not None:
        perm = rng.permutation(len(batches))
        batches = [batches[k] for k in perm]
    return batches
