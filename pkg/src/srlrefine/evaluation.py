"""Labeled F1 (senses included), decomposed metrics, constraint violations, confusion."""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from .conll import NULL_ROLE, PredicateInstance, Prediction

CORE_ROLES = frozenset({"A0", "A1", "A2", "A3", "A4", "A5", "AA"})
_PREFIXED = re.compile(r"^(C|R)-(.+)$")


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    role_precision: float
    role_recall: float
    sense_accuracy: float
    correct: int
    predicted: int
    gold: int

    def as_json(self) -> str:
        return json.dumps({"metric": "labeled", **asdict(self)}, sort_keys=True)

    def as_table(self) -> str:
        rows = [("labeled precision", self.precision), ("labeled recall", self.recall),
                ("labeled F1", self.f1), ("role precision", self.role_precision),
                ("role recall", self.role_recall), ("sense accuracy", self.sense_accuracy)]
        lines = [f"{name:<20}{100 * value:8.2f}" for name, value in rows]
        lines.append(f"{'items (c/p/g)':<20}{self.correct}/{self.predicted}/{self.gold}")
        return "\n".join(lines)


@dataclass
class ViolationCounts:
    U: int = 0
    C: int = 0
    R: int = 0

    def __add__(self, other: "ViolationCounts") -> "ViolationCounts":
        return ViolationCounts(self.U + other.U, self.C + other.C, self.R + other.R)


@dataclass
class ConfusionMatrices:
    labels: list[str]
    confusion: list[list[int]]  # [gold][baseline]
    correction: list[list[int]]  # [gold][baseline], baseline wrong and refined right

    def to_csv(self, which: str = "confusion") -> str:
        table = getattr(self, which)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gold\\predicted"] + self.labels)
        for label, row in zip(self.labels, table):
            w.writerow([label] + row)
        return buf.getvalue()


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ratio(num: int, den: int) -> float:
    # empty denominators only arise on empty inputs; score those as perfect
    return num / den if den else 1.0


def _items(inst: PredicateInstance, pred: Prediction) -> tuple[Counter, Counter]:
    gold = Counter({("sense", inst.j, inst.sense): 1})
    guess = Counter({("sense", inst.j, pred.sense): 1})
    for i, role in enumerate(inst.roles, start=1):
        if role != NULL_ROLE:
            gold[("role", inst.j, i, role)] += 1
    for i, role in enumerate(pred.roles, start=1):
        if role and role != NULL_ROLE:
            guess[("role", inst.j, i, role)] += 1
    return gold, guess


def _check_aligned(gold: Sequence[PredicateInstance], predictions: Sequence[Prediction]):
    if len(gold) != len(predictions):
        raise ValueError(f"{len(gold)} gold instances but {len(predictions)} predictions")
    for k, (inst, pred) in enumerate(zip(gold, predictions)):
        if len(pred.roles) != inst.n:
            raise ValueError(f"instance {k}: {len(pred.roles)} predicted roles for {inst.n} tokens")


def labeled_f1(gold: Sequence[PredicateInstance], predictions: Sequence[Prediction]) -> EvalReport:
    _check_aligned(gold, predictions)
    correct = n_pred = n_gold = 0
    role_c = role_p = role_g = 0
    sense_ok = 0
    for inst, pred in zip(gold, predictions):
        g, p = _items(inst, pred)
        c = sum((g & p).values())
        correct += c
        n_pred += sum(p.values())
        n_gold += sum(g.values())
        ok = inst.sense == pred.sense
        sense_ok += ok
        role_c += c - ok
        role_p += sum(p.values()) - 1
        role_g += sum(g.values()) - 1
    prec, rec = _ratio(correct, n_pred), _ratio(correct, n_gold)
    return EvalReport(prec, rec, _f1(prec, rec), _ratio(role_c, role_p), _ratio(role_c, role_g),
                      _ratio(sense_ok, len(gold)), correct, n_pred, n_gold)


def decompose(gold: Sequence[PredicateInstance], predictions: Sequence[Prediction]) -> tuple[float, float, float]:
    """(role precision, role recall, sense accuracy)."""
    rep = labeled_f1(gold, predictions)
    return rep.role_precision, rep.role_recall, rep.sense_accuracy


def instance_violations(roles: Sequence[str]) -> ViolationCounts:
    U = C = R = 0
    counts = Counter(r for r in roles if r and r != NULL_ROLE)
    U = sum(1 for label, c in counts.items() if label in CORE_ROLES and c >= 2)
    for i, role in enumerate(roles):
        m = _PREFIXED.match(role or "")
        if not m:
            continue
        kind, base = m.groups()
        if kind == "C" and base not in roles[:i]:
            C += 1
        elif kind == "R" and base not in roles:
            R += 1
    return ViolationCounts(U, C, R)


def constraint_violations(predictions: Sequence[Prediction | Sequence[str]]) -> ViolationCounts:
    total = ViolationCounts()
    for pred in predictions:
        roles = pred.roles if isinstance(pred, Prediction) else pred
        total = total + instance_violations(list(roles))
    return total


def confusion_and_correction(gold: Sequence[PredicateInstance], baseline: Sequence[Prediction],
                             refined: Sequence[Prediction],
                             labels: Sequence[str] = (NULL_ROLE, "A0", "A1", "A2")) -> ConfusionMatrices:
    _check_aligned(gold, baseline)
    _check_aligned(gold, refined)
    labels = list(labels)
    pos = {label: k for k, label in enumerate(labels)}
    K = len(labels)
    confusion = [[0] * K for _ in range(K)]
    correction = [[0] * K for _ in range(K)]
    for inst, b, r in zip(gold, baseline, refined):
        for g_role, b_role, r_role in zip(inst.roles, b.roles, r.roles):
            if g_role not in pos or b_role not in pos:
                continue
            gi, bi = pos[g_role], pos[b_role]
            confusion[gi][bi] += 1
            if b_role != g_role and r_role == g_role:
                correction[gi][bi] += 1
    return ConfusionMatrices(labels, confusion, correction)
