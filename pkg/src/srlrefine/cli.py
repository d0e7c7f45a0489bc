"""Command-line entry point: ``python -m srlrefine <command> ...``.

Logs go to stderr, data only to files. Any module error ends the process with
a one-line diagnostic and exit status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import synth
from .autodiff.checkpoint import CheckpointError
from .checkpoints import ModelMismatchError, load_baseline, load_refiner, save_baseline, save_refiner
from .config import build_configs, read_config_file, to_dict
from .conll import (CoNLLError, build_vocabulary, extract_instances, gold_predictions, parse_corpus,
                    write_corpus, write_predictions)
from .encoder import read_word_vectors
from .evaluation import confusion_and_correction, constraint_violations, labeled_f1
from .training import Predictor, TrainingError, train_baseline, train_refiner

log = logging.getLogger("srlrefine")

MODULE_ERRORS = (ValueError, KeyError, OSError, CoNLLError, CheckpointError, ModelMismatchError,
                 TrainingError)


class CLIError(Exception):
    pass


def _read(path) -> list:
    return parse_corpus(Path(path).read_bytes())


def _pairs(args) -> dict[str, str]:
    """Config file entries, then ``key=value`` overrides; later entries win."""
    pairs = read_config_file(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "overrides", None) or []:
        if "=" not in item:
            raise CLIError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def _attach_log_file(path: Path):
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    return handler


# -- commands -----------------------------------------------------------------------

def cmd_gen_synth(args):
    known = {f.name for f in fields(synth.GrammarConfig)}
    kw = {}
    for key, raw in _pairs(args).items():
        if key not in known or key == "roles":
            raise CLIError(f"unknown grammar key {key!r}")
        default = getattr(synth.GrammarConfig(), key)
        if isinstance(default, bool):
            kw[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            kw[key] = type(default)(raw)
    cfg = synth.GrammarConfig(seed=args.seed, sentences=args.sentences, **kw)
    fractions = [float(x) for x in args.split.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = synth.generate(cfg)
    (out / "corpus.conll").write_text(text, encoding="utf-8")
    (out / "manifest.json").write_text(synth.manifest(cfg), encoding="utf-8")
    parts = synth.split(parse_corpus(text), fractions, seed=cfg.seed)
    for name, part in zip(("train", "dev", "test"), parts):
        (out / f"{name}.conll").write_text(write_corpus(part), encoding="utf-8")
    log.info("wrote %d sentences to %s (split %s)", cfg.sentences, out, [len(p) for p in parts])


def cmd_train_baseline(args):
    pairs = _pairs(args)
    pairs["stage"] = "baseline"
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    model_cfg, cfg = build_configs(pairs)
    train = _read(args.train)
    dev = extract_instances(_read(args.dev)) if args.dev else None
    vocab = build_vocabulary(train, model_cfg.min_count, model_cfg.lowercase)
    vectors = None
    if args.word_vectors:
        dim, vectors = read_word_vectors(args.word_vectors)
        if dim != model_cfg.d_w:
            model_cfg = replace(model_cfg, d_w=dim)
            log.info("word vector width %d overrides d_w", dim)
    out = Path(args.out)
    handler = _attach_log_file(out.with_suffix(out.suffix + ".log"))
    try:
        log.info("config %s", json.dumps({"model": to_dict(model_cfg), "train": to_dict(cfg)}, sort_keys=True))
        model, result = train_baseline(extract_instances(train), dev, vocab, model_cfg, cfg,
                                       log_fn=log.info, word_vectors=vectors)
        sha = save_baseline(out, model)
        log.info("saved baseline %s sha256=%s best_epoch=%d", out, sha, result.best_epoch)
    finally:
        log.removeHandler(handler)
        handler.close()


def cmd_train_refiner(args):
    pairs = _pairs(args)
    pairs["stage"] = "refiner"
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    if args.iterations is not None:
        pairs["iterations"] = str(args.iterations)
    if args.mode is not None:
        if args.mode == "baseline":
            raise CLIError("train-refiner needs --mode self or structured")
        pairs["mode"] = args.mode
    if args.untied:
        pairs["tied"] = "false"
    if args.no_gumbel:
        pairs["gumbel"] = "false"
    baseline, sha = load_baseline(args.baseline)
    # the refiner shares the baseline's embedding widths; other sizes may be overridden
    base = {k: str(v) for k, v in to_dict(baseline.cfg).items()}
    model_cfg, cfg = build_configs({**base, **pairs})
    train = extract_instances(_read(args.train))
    dev = extract_instances(_read(args.dev)) if args.dev else None
    out = Path(args.out)
    handler = _attach_log_file(out.with_suffix(out.suffix + ".log"))
    try:
        log.info("config %s baseline=%s", json.dumps({"model": to_dict(model_cfg), "train": to_dict(cfg)},
                                                     sort_keys=True), sha)
        refiner, result = train_refiner(train, dev, baseline, model_cfg, cfg, log_fn=log.info,
                                        expected_baseline_hash=args.expect_baseline, baseline_sha=sha)
        ref_sha = save_refiner(out, refiner, model_cfg, sha)
        log.info("saved refiner %s sha256=%s best_epoch=%d", out, ref_sha, result.best_epoch)
    finally:
        log.removeHandler(handler)
        handler.close()


def cmd_predict(args):
    baseline, sha = load_baseline(args.baseline)
    mode = args.mode or ("structured" if args.refiner else "baseline")
    T = 2 if args.iterations is None else args.iterations
    if T < 0:
        raise CLIError(f"--iterations must be nonnegative, got {T}")
    refiner = None
    if mode != "baseline" and T > 0:
        if not args.refiner:
            raise CLIError(f"--mode {mode} needs --refiner")
        refiner, meta = load_refiner(args.refiner, expected_baseline_hash=sha)
        if meta["mode"] != mode:
            raise CLIError(f"refiner checkpoint was trained in {meta['mode']!r} mode, not {mode!r}")
    sentences = _read(args.input)
    preds = Predictor(baseline, refiner).predict(extract_instances(sentences), T)[-1]
    Path(args.out).write_text(write_predictions(sentences, preds), encoding="utf-8")
    log.info("wrote %d predicate instances to %s (mode=%s, T=%d)", len(preds), args.out, mode,
             T if refiner else 0)


def _aligned(gold_sents, pred_path):
    pred_sents = _read(pred_path)
    if len(pred_sents) != len(gold_sents):
        raise CLIError(f"{pred_path}: {len(pred_sents)} sentences, gold has {len(gold_sents)}")
    for k, (g, p) in enumerate(zip(gold_sents, pred_sents)):
        if [t.form for t in g.tokens] != [t.form for t in p.tokens]:
            raise CLIError(f"{pred_path}: sentence {k + 1} tokens differ from gold")
    gold = extract_instances(gold_sents)
    preds = gold_predictions(extract_instances(pred_sents))
    if len(preds) != len(gold):
        raise CLIError(f"{pred_path}: {len(preds)} predicate instances, gold has {len(gold)}")
    return gold, preds


def cmd_evaluate(args):
    gold_sents = _read(args.gold)
    gold, preds = _aligned(gold_sents, args.predicted)
    report = labeled_f1(gold, preds)
    viol = constraint_violations(preds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = report.as_table() + f"\n{'violations U/C/R':<20}{viol.U}/{viol.C}/{viol.R}\n"
    out.with_suffix(".txt").write_text(text, encoding="utf-8")
    records = [report.as_json(), json.dumps({"metric": "violations", "U": viol.U, "C": viol.C, "R": viol.R},
                                            sort_keys=True)]
    out.with_suffix(".json").write_text("\n".join(records) + "\n", encoding="utf-8")
    log.info("labeled F1 %.4f (P %.4f R %.4f)", report.f1, report.precision, report.recall)


def cmd_analyze(args):
    gold_sents = _read(args.gold)
    gold, base = _aligned(gold_sents, args.baseline_pred)
    _, refined = _aligned(gold_sents, args.refined_pred)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counts = {"baseline": constraint_violations(base), "refined": constraint_violations(refined),
              "gold": constraint_violations(gold_predictions(gold))}
    lines = [f"{'':<10}{'U':>6}{'C':>6}{'R':>6}"]
    lines += [f"{name:<10}{c.U:>6}{c.C:>6}{c.R:>6}" for name, c in counts.items()]
    (out / "violations.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "violations.json").write_text(
        json.dumps({name: {"U": c.U, "C": c.C, "R": c.R} for name, c in counts.items()}, sort_keys=True) + "\n",
        encoding="utf-8")
    mats = confusion_and_correction(gold, base, refined)
    (out / "confusion.csv").write_text(mats.to_csv("confusion"), encoding="utf-8")
    (out / "correction.csv").write_text(mats.to_csv("correction"), encoding="utf-8")
    log.info("violations baseline U=%d refined U=%d", counts["baseline"].U, counts["refined"].U)


# -- argument parsing -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srlrefine", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, overrides=True):
        p.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
        if overrides:
            p.add_argument("--config", help="flat key = value configuration file")
            p.add_argument("overrides", nargs="*", metavar="key=value", help="configuration overrides")

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus with train/dev/test splits")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sentences", type=int, default=200)
    p.add_argument("--split", default="0.7,0.15,0.15", help="comma-separated train,dev,test fractions")
    p.add_argument("--out", required=True, help="output directory")
    common(p)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("train-baseline", help="train the factorized baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--seed", type=int)
    p.add_argument("--word-vectors", help="static vectors, one 'token v1 ... vd' per line")
    p.add_argument("--out", required=True, help="checkpoint path")
    common(p)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("train-refiner", help="train refinement networks on a frozen baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--baseline", required=True, help="baseline checkpoint")
    p.add_argument("--expect-baseline", help="refuse to train unless the baseline has this sha256")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--mode", choices=("baseline", "self", "structured"))
    p.add_argument("--untied", action="store_true")
    p.add_argument("--no-gumbel", action="store_true")
    p.add_argument("--out", required=True, help="checkpoint path")
    common(p)
    p.set_defaults(func=cmd_train_refiner)

    p = sub.add_parser("predict", help="label a CoNLL-2009 file")
    p.add_argument("--input", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--refiner")
    p.add_argument("--iterations", type=int, help="refinement steps (default 2; 0 = baseline decoding)")
    p.add_argument("--mode", choices=("baseline", "self", "structured"))
    p.add_argument("--out", required=True)
    common(p, overrides=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="labeled P/R/F1 with senses; writes <out>.txt and <out>.json")
    p.add_argument("gold")
    p.add_argument("predicted")
    p.add_argument("--out", default="eval")
    common(p, overrides=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="constraint violations and confusion/correction matrices")
    p.add_argument("gold")
    p.add_argument("baseline_pred")
    p.add_argument("refined_pred")
    p.add_argument("--out", required=True, help="output directory")
    common(p, overrides=False)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    # basicConfig is a no-op when a host application already configured logging
    logging.getLogger("srlrefine").setLevel(logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise CLIError("--threads must be positive")
            with threadpool_limits(limits=args.threads):
                args.func(args)
        else:
            args.func(args)
    except (CLIError, *MODULE_ERRORS) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"srlrefine {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
