"""CoNLL-2009 reading/writing, predicate instances and vocabularies."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

NULL_ROLE = "_"
EMPTY = "_"
PAD = "<pad>"
UNK = "<unk>"
N_FIXED = 14

COLUMNS = ("ID", "FORM", "LEMMA", "PLEMMA", "POS", "PPOS", "FEAT", "PFEAT",
           "HEAD", "PHEAD", "DEPREL", "PDEPREL", "FILLPRED", "PRED")


class CoNLLError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    cols: tuple[str, ...]

    @property
    def id(self) -> int:
        return int(self.cols[0])

    form = property(lambda self: self.cols[1])
    lemma = property(lambda self: self.cols[2])
    plemma = property(lambda self: self.cols[3])
    pos = property(lambda self: self.cols[4])
    ppos = property(lambda self: self.cols[5])
    head = property(lambda self: self.cols[8])
    phead = property(lambda self: self.cols[9])
    deprel = property(lambda self: self.cols[10])
    pdeprel = property(lambda self: self.cols[11])
    fillpred = property(lambda self: self.cols[12])
    pred = property(lambda self: self.cols[13])

    @property
    def is_predicate(self) -> bool:
        return self.cols[12] == "Y"

    @property
    def apreds(self) -> tuple[str, ...]:
        return self.cols[N_FIXED:]


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __len__(self):
        return len(self.tokens)

    @property
    def predicate_positions(self) -> list[int]:
        """1-based positions of rows with FILLPRED=Y, in document order."""
        return [k + 1 for k, tok in enumerate(self.tokens) if tok.is_predicate]


@dataclass(frozen=True)
class PredicateInstance:
    sentence: Sentence
    sentence_index: int
    column: int  # which argument column belongs to this predicate
    j: int  # 1-based predicate position
    sense: str
    roles: tuple[str, ...]  # one label per token, NULL_ROLE for non-arguments

    @property
    def lemma(self) -> str:
        return self.sentence.tokens[self.j - 1].plemma

    @property
    def n(self) -> int:
        return len(self.sentence)


@dataclass(frozen=True)
class Prediction:
    sense: str
    roles: tuple[str, ...]


def parse_corpus(text: str | bytes) -> list[Sentence]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    sentences: list[Sentence] = []
    block: list[tuple[int, list[str]]] = []
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if line.strip() == "":
            if block:
                sentences.append(_build_sentence(block))
                block = []
            continue
        block.append((lineno, line.split("\t")))
    if block:
        sentences.append(_build_sentence(block))
    return sentences


def _build_sentence(block: list[tuple[int, list[str]]]) -> Sentence:
    n_pred = sum(1 for _, cols in block if len(cols) > 12 and cols[12] == "Y")
    expected = N_FIXED + n_pred
    tokens = []
    for k, (lineno, cols) in enumerate(block, start=1):
        if len(cols) != expected:
            raise CoNLLError(
                f"line {lineno}: expected {expected} columns "
                f"({N_FIXED} fixed + {n_pred} argument columns), found {len(cols)}")
        try:
            tid = int(cols[0])
        except ValueError:
            raise CoNLLError(f"line {lineno}: token id {cols[0]!r} is not an integer") from None
        if tid != k:
            raise CoNLLError(f"line {lineno}: token id {tid} breaks consecutive numbering (expected {k})")
        tokens.append(Token(tuple(cols)))
    return Sentence(tuple(tokens))


def write_corpus(sentences: Iterable[Sentence]) -> str:
    out = []
    for sent in sentences:
        for tok in sent.tokens:
            out.append("\t".join(tok.cols))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def extract_instances(sentences: Sequence[Sentence]) -> list[PredicateInstance]:
    instances = []
    for s_idx, sent in enumerate(sentences):
        for col, j in enumerate(sent.predicate_positions):
            roles = tuple(tok.apreds[col] for tok in sent.tokens)
            instances.append(PredicateInstance(sent, s_idx, col, j, sent.tokens[j - 1].pred, roles))
    return instances


def write_predictions(sentences: Sequence[Sentence], predictions: Sequence[Prediction]) -> str:
    """Overwrite PRED and argument columns with ``predictions`` (instance order)."""
    instances = extract_instances(sentences)
    if len(instances) != len(predictions):
        raise CoNLLError(f"got {len(predictions)} predictions for {len(instances)} predicate instances")
    rows = [[list(tok.cols) for tok in sent.tokens] for sent in sentences]
    for inst, pred in zip(instances, predictions):
        if len(pred.roles) != inst.n:
            raise CoNLLError(
                f"sentence {inst.sentence_index}: {len(pred.roles)} role labels for {inst.n} tokens")
        sent_rows = rows[inst.sentence_index]
        sent_rows[inst.j - 1][13] = pred.sense
        for i, role in enumerate(pred.roles):
            sent_rows[i][N_FIXED + inst.column] = role if role else NULL_ROLE
    return write_corpus(Sentence(tuple(Token(tuple(r)) for r in sent_rows)) for sent_rows in rows)


def gold_predictions(instances: Sequence[PredicateInstance]) -> list[Prediction]:
    return [Prediction(inst.sense, inst.roles) for inst in instances]


# -- vocabulary -------------------------------------------------------------------

def _ranked(counter: Counter, min_count: int = 1) -> list[str]:
    items = [(k, c) for k, c in counter.items() if c >= min_count]
    items.sort(key=lambda kc: (-kc[1], kc[0]))
    return [k for k, _ in items]


@dataclass
class Vocabulary:
    words: list[str]
    pos: list[str]
    deps: list[str]
    roles: list[str]
    senses: dict[str, list[str]]  # predicted lemma -> sense labels
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    lowercase: bool = False

    def __post_init__(self):
        self._word_idx = {w: k for k, w in enumerate(self.words)}
        self._pos_idx = {w: k for k, w in enumerate(self.pos)}
        self._dep_idx = {w: k for k, w in enumerate(self.deps)}
        self._role_idx = {w: k for k, w in enumerate(self.roles)}
        self._sense_row: dict[str, list[int]] = {}
        row = 0
        for lemma in sorted(self.senses):
            self._sense_row[lemma] = list(range(row, row + len(self.senses[lemma])))
            row += len(self.senses[lemma])
        # one extra row shared by every unseen predicate lemma
        self.unknown_sense_row = row
        self.n_sense_rows = row + 1

    @property
    def n_roles(self) -> int:
        return len(self.roles)

    def word_index(self, form: str) -> int:
        key = form.lower() if self.lowercase else form
        return self._word_idx.get(key, 1)

    def pos_index(self, tag: str) -> int:
        return self._pos_idx.get(tag, 1)

    def dep_index(self, label: str) -> int:
        return self._dep_idx.get(label, 1)

    def role_index(self, label: str) -> int:
        """Unknown role labels map to null; they cannot be predicted anyway."""
        return self._role_idx.get(label, 0)

    def sense_inventory(self, lemma: str) -> list[str]:
        return self.senses.get(lemma) or [f"{lemma}.01"]

    def sense_rows(self, lemma: str) -> list[int]:
        return self._sense_row.get(lemma) or [self.unknown_sense_row]

    def sense_index(self, lemma: str, sense: str) -> int:
        inv = self.sense_inventory(lemma)
        return inv.index(sense) if sense in inv else -1

    def to_json(self) -> dict:
        return {"words": self.words, "pos": self.pos, "deps": self.deps, "roles": self.roles,
                "senses": {k: self.senses[k] for k in sorted(self.senses)},
                "counts": self.counts, "lowercase": self.lowercase}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(obj["words"], obj["pos"], obj["deps"], obj["roles"], obj["senses"],
                   obj.get("counts", {}), obj.get("lowercase", False))

    def serialize(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False).encode("utf-8")

    def content_hash(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def build_vocabulary(sentences: Sequence[Sentence], min_count: int = 1,
                     lowercase: bool = False) -> Vocabulary:
    words, pos, deps, roles = Counter(), Counter(), Counter(), Counter()
    sense_counts: dict[str, Counter] = {}
    for sent in sentences:
        for tok in sent.tokens:
            words[tok.form.lower() if lowercase else tok.form] += 1
            pos[tok.ppos] += 1
            deps[tok.pdeprel] += 1
            for label in tok.apreds:
                if label != NULL_ROLE:
                    roles[label] += 1
            if tok.is_predicate:
                sense_counts.setdefault(tok.plemma, Counter())[tok.pred] += 1
    return Vocabulary(
        words=[PAD, UNK] + [w for w in _ranked(words, min_count) if w not in (PAD, UNK)],
        pos=[PAD, UNK] + [w for w in _ranked(pos) if w not in (PAD, UNK)],
        deps=[PAD, UNK] + [w for w in _ranked(deps) if w not in (PAD, UNK)],
        roles=[NULL_ROLE] + _ranked(roles),
        senses={lemma: _ranked(c) for lemma, c in sense_counts.items()},
        counts={"words": dict(sorted(words.items())), "pos": dict(sorted(pos.items())),
                "deps": dict(sorted(deps.items())), "roles": dict(sorted(roles.items()))},
        lowercase=lowercase,
    )
