"""Synthetic CoNLL-2009 corpora with an argument-interaction slot.

Every sentence has one predicate. Subject nouns come first: at most one of
them belongs to the predicate's agent class and is A0, the rest are
look-alike distractors. A long run of filler words separates them from the
predicate, which is followed by the ambiguous object slot. The slot's form,
POS tag and dependency label are drawn independently of its role. With
probability ``q`` the slot is A0 exactly when no other A0 is present and A1
otherwise; with probability ``1 - q`` its role is a fair coin between A0 and
A1. Two-sense predicates take sense ``.02`` exactly when an A2 is realized.

The gap matters: agent detection is a purely local decision, whereas
resolving the slot requires carrying information across the gap.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .conll import NULL_ROLE, PredicateInstance, Sentence

ROLE_SET = (NULL_ROLE, "A0", "A1", "A2", "AM")
SLOT_PREFIX = "obj"


@dataclass(frozen=True)
class GrammarConfig:
    seed: int = 7
    sentences: int = 200
    n_fillers: int = 500
    n_nouns: int = 24
    n_noun_classes: int = 2
    selectional: bool = False  # agent class varies with the predicate lemma
    max_nouns: int = 2
    n_instruments: int = 8
    n_modifiers: int = 6
    n_slot_forms: int = 4
    n_lemmas: int = 6
    two_sense_fraction: float = 0.5
    q: float = 1.0
    slot_frequency: float = 1.0
    agent_frequency: float = 0.5
    instrument_frequency: float = 0.4
    modifier_frequency: float = 0.3
    max_fillers: int = 2
    min_gap: int = 15
    max_gap: int = 30
    roles: tuple[str, ...] = ROLE_SET

    def validate(self):
        for name in ("two_sense_fraction", "q", "slot_frequency", "agent_frequency",
                     "instrument_frequency", "modifier_frequency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.roles or self.roles[0] != NULL_ROLE:
            raise ValueError("role set must be non-empty with the null role first")
        missing = set(ROLE_SET) - set(self.roles)
        if missing:
            raise ValueError(f"role set lacks roles used by the templates: {sorted(missing)}")
        if self.sentences < 0 or self.n_lemmas < 1 or self.n_slot_forms < 1 or self.n_noun_classes < 2 \
                or self.n_nouns < self.n_noun_classes \
                or self.max_nouns < 1 or not 0 <= self.min_gap <= self.max_gap:
            raise ValueError("degenerate vocabulary sizes")


FILLER_TAGS = (("DT", "NMOD"), ("JJ", "NMOD"), ("IN", "ADV"), ("CC", "COORD"))


def _lexicon(cfg: GrammarConfig):
    lemmas = [f"verb{k}" for k in range(cfg.n_lemmas)]
    two_sense = set(lemmas[: int(round(cfg.two_sense_fraction * cfg.n_lemmas))])
    # noun k belongs to class k % n_noun_classes; forms carry no class hint
    nouns = [[f"noun{k}" for k in range(c, cfg.n_nouns, cfg.n_noun_classes)]
             for c in range(cfg.n_noun_classes)]
    # the noun class each predicate takes as agent
    agent_class = {lemma: (k % cfg.n_noun_classes if cfg.selectional else 0)
                   for k, lemma in enumerate(lemmas)}
    return {
        "fillers": [f"fw{k}" for k in range(cfg.n_fillers)],
        "nouns": nouns,
        "agent_class": agent_class,
        "instruments": [f"tool{k}" for k in range(cfg.n_instruments)],
        "instrument_distractors": [f"thing{k}" for k in range(cfg.n_instruments)],
        "modifiers": [f"adv{k}" for k in range(cfg.n_modifiers)],
        "slots": [f"{SLOT_PREFIX}{k}" for k in range(cfg.n_slot_forms)],
        "lemmas": lemmas,
        "two_sense": two_sense,
    }


def _sentence(rng: np.random.Generator, cfg: GrammarConfig, lex) -> list[tuple[str, str, str, str]]:
    """Tokens as (form, pos, dep, role); the predicate row uses role 'PRED:<sense>'."""

    def pick(seq):
        return seq[rng.integers(len(seq))]

    def fillers(lo=0, hi=cfg.max_fillers):
        out = []
        for _ in range(rng.integers(lo, hi + 1)):
            pos, dep = pick(FILLER_TAGS)
            out.append((pick(lex["fillers"]), pos, dep, NULL_ROLE))
        return out

    lemma = pick(lex["lemmas"])
    agent_class = lex["agent_class"][lemma]
    others = [c for c in range(cfg.n_noun_classes) if c != agent_class]
    has_agent = rng.random() < cfg.agent_frequency
    n_nouns = int(rng.integers(1, cfg.max_nouns + 1))
    nouns = []
    for k in range(n_nouns):
        # at most one noun of the agent class, so gold A0 stays unique
        if has_agent and k == 0:
            nouns.append((pick(lex["nouns"][agent_class]), "NN", "SBJ", "A0"))
        else:
            nouns.append((pick(lex["nouns"][pick(others)]), "NN", "SBJ", NULL_ROLE))
    rng.shuffle(nouns)

    toks = fillers()
    for noun in nouns:
        toks.append(noun)
        toks += fillers()
    # the stretch separating the subject region from the predicate
    toks += fillers(cfg.min_gap, cfg.max_gap)
    pred_at = len(toks)
    toks.append((lemma + "s", "VBZ", "ROOT", ""))
    roles_seen = {"A0"} if has_agent else set()
    if rng.random() < cfg.slot_frequency:
        form = pick(lex["slots"])
        if rng.random() < cfg.q:
            role = "A1" if has_agent else "A0"
        else:
            role = "A0" if rng.random() < 0.5 else "A1"
        roles_seen.add(role)
        toks.append((form, "NN", "OBJ", role))
    toks += fillers()
    has_instr = rng.random() < cfg.instrument_frequency
    toks.append((pick(lex["instruments"] if has_instr else lex["instrument_distractors"]), "NN", "ADV",
                 "A2" if has_instr else NULL_ROLE))
    if has_instr:
        roles_seen.add("A2")
    if rng.random() < cfg.modifier_frequency:
        toks.append((pick(lex["modifiers"]), "RB", "TMP", "AM"))
    toks += fillers()
    sense = "02" if (lemma in lex["two_sense"] and "A2" in roles_seen) else "01"
    form, pos, dep, _ = toks[pred_at]
    toks[pred_at] = (form, pos, dep, f"PRED:{lemma}.{sense}")
    return toks


def _rows(toks) -> list[str]:
    pred_at = next(k for k, t in enumerate(toks) if t[3].startswith("PRED:"))
    rows = []
    for k, (form, pos, dep, role) in enumerate(toks, start=1):
        is_pred = k - 1 == pred_at
        lemma = form[:-1] if is_pred else form
        head = "0" if is_pred else str(pred_at + 1)
        sense = role[5:] if is_pred else "_"
        arg = NULL_ROLE if is_pred else role
        rows.append("\t".join([str(k), form, lemma, lemma, pos, pos, "_", "_", head, head, dep, dep,
                               "Y" if is_pred else "_", sense, arg]))
    return rows


def generate(cfg: GrammarConfig) -> str:
    """CoNLL-2009 text for ``cfg.sentences`` sentences; each uses its own derived seed."""
    cfg.validate()
    lex = _lexicon(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.sentences)
    blocks = []
    for ss in seeds:
        toks = _sentence(np.random.default_rng(ss), cfg, lex)
        blocks.append("\n".join(_rows(toks)) + "\n")
    return "".join(block + "\n" for block in blocks)


def manifest(cfg: GrammarConfig) -> str:
    obj = asdict(cfg)
    obj["roles"] = list(cfg.roles)
    return json.dumps({"generator": "srlrefine.synth", "config": obj}, indent=2, sort_keys=True) + "\n"


def split(sentences: Sequence[Sentence], fractions: Sequence[float], seed: int = 0) -> list[list[Sentence]]:
    """Seeded shuffle followed by contiguous slices of the given sizes."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {sum(fractions)}")
    N = len(sentences)
    order = np.random.default_rng(seed).permutation(N)
    sizes = [int(round(f * N)) for f in fractions[:-1]]
    sizes.append(N - sum(sizes))
    if any(s <= 0 for s in sizes):
        raise ValueError(f"split of {N} sentences by {list(fractions)} leaves an empty part")
    parts, lo = [], 0
    for s in sizes:
        parts.append([sentences[k] for k in order[lo:lo + s]])
        lo += s
    return parts


# -- oracles over the generated data ---------------------------------------------------

def slot_positions(inst: PredicateInstance) -> list[int]:
    """0-based positions of ambiguous-slot tokens."""
    return [i for i, tok in enumerate(inst.sentence.tokens) if tok.form.startswith(SLOT_PREFIX)]


def _local_key(inst: PredicateInstance, i: int) -> tuple[str, str, str]:
    tok = inst.sentence.tokens[i]
    return tok.form, tok.ppos, tok.pdeprel


def _other_a0(inst: PredicateInstance, i: int) -> bool:
    return any(r == "A0" for k, r in enumerate(inst.roles) if k != i)


def _table_accuracy(train, evaluate, key_fn) -> float:
    table: dict[tuple, Counter] = defaultdict(Counter)
    for inst in train:
        for i in slot_positions(inst):
            table[key_fn(inst, i)][inst.roles[i]] += 1
    overall = Counter(inst.roles[i] for inst in train for i in slot_positions(inst))
    correct = total = 0
    for inst in evaluate:
        for i in slot_positions(inst):
            counts = table.get(key_fn(inst, i)) or overall
            # majority vote, ties broken lexicographically for determinism
            guess = min(counts, key=lambda lab: (-counts[lab], lab)) if counts else NULL_ROLE
            correct += guess == inst.roles[i]
            total += 1
    return correct / total if total else float("nan")


def factorized_ceiling(train: Sequence[PredicateInstance], evaluate: Sequence[PredicateInstance]) -> float:
    """Slot accuracy of the majority-role table over (form, POS, dep) alone."""
    return _table_accuracy(train, evaluate, _local_key)


def interaction_oracle(train: Sequence[PredicateInstance], evaluate: Sequence[PredicateInstance]) -> float:
    """Same table, additionally keyed on whether another token is gold A0."""
    return _table_accuracy(train, evaluate, lambda inst, i: _local_key(inst, i) + (_other_a0(inst, i),))


def slot_accuracy(instances: Sequence[PredicateInstance], predictions) -> float:
    correct = total = 0
    for inst, pred in zip(instances, predictions):
        for i in slot_positions(inst):
            correct += pred.roles[i] == inst.roles[i]
            total += 1
    return correct / total if total else float("nan")

