"""Shared fixtures: tiny hand-written CoNLL-2009 corpora."""

import pytest

# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def row(i, form, lemma, pos, head, dep, fill="_", pred="_", args=()):
    return "\t".join([str(i), form, lemma, lemma, pos, pos, "_", "_", str(head), str(head),
                      dep, dep, fill, pred, *args])


# "Haag plays Elianti ." with one predicate: Haag=A0, Elianti=A1
ONE_PRED = "\n".join([
    row(1, "Haag", "haag", "NNP", 2, "SBJ", args=["A0"]),
    row(2, "plays", "play", "VBZ", 0, "ROOT", "Y", "play.01", args=["_"]),
    row(3, "Elianti", "elianti", "NNP", 2, "OBJ", args=["A1"]),
    row(4, ".", ".", ".", 2, "P", args=["_"]),
]) + "\n"

# three predicates in one sentence
THREE_PRED = "\n".join([
    row(1, "Kim", "kim", "NNP", 2, "SBJ", args=["A0", "_", "A0"]),
    row(2, "wants", "want", "VBZ", 0, "ROOT", "Y", "want.01", args=["_", "_", "_"]),
    row(3, "to", "to", "TO", 4, "OPRD", args=["_", "_", "_"]),
    row(4, "satisfy", "satisfy", "VB", 3, "IM", "Y", "satisfy.01", args=["A1", "_", "_"]),
    row(5, "and", "and", "CC", 4, "COORD", args=["_", "_", "_"]),
    row(6, "satisfy", "satisfy", "VB", 5, "CONJ", "Y", "satisfy.02", args=["_", "_", "_"]),
    row(7, "Lee", "lee", "NNP", 6, "OBJ", args=["_", "A2", "A1"]),
]) + "\n"

NO_PRED = "\n".join([
    row(1, "Hello", "hello", "UH", 0, "ROOT"),
    row(2, "!", "!", ".", 1, "P"),
]) + "\n"


@pytest.fixture
def small_corpus_text():
    return ONE_PRED + "\n" + THREE_PRED + "\n" + NO_PRED + "\n"


# two predicates of a two-sense lemma in a four-token sentence
TWO_SENSE = "\n".join([
    row(1, "Kim", "kim", "NNP", 2, "SBJ", args=["A0", "_"]),
    row(2, "satisfies", "satisfy", "VBZ", 0, "ROOT", "Y", "satisfy.01", args=["_", "_"]),
    row(3, "and", "and", "CC", 2, "COORD", args=["_", "_"]),
    row(4, "satisfies", "satisfy", "VBZ", 3, "CONJ", "Y", "satisfy.02", args=["_", "A1"]),
]) + "\n"


def tiny_config(**kw):
    from srlrefine.config import ModelConfig
    base = dict(d_w=3, d_dep=2, d_pos=2, d_h=2, n_layers=1, d_rho0=3, d_rho1=3, d_pi=2, d_g=3, d_r=3,
                dropout=0.0, recurrent_dropout=0.0)
    base.update(kw)
    return ModelConfig(**base)


def tiny_setup(text=None, seed=0, **kw):
    """(baseline model, batch, instances, vocab) on a tiny corpus."""
    import numpy as np
    from srlrefine.baseline import BaselineModel
    from srlrefine.conll import build_vocabulary, extract_instances, parse_corpus
    from srlrefine.features import make_batch
    sents = parse_corpus(text or ONE_PRED + "\n" + TWO_SENSE)
    vocab = build_vocabulary(sents)
    insts = extract_instances(sents)
    model = BaselineModel(vocab, tiny_config(**kw), np.random.default_rng(seed))
    model.eval()
    return model, make_batch(insts, vocab), insts, vocab
