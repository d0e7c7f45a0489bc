"""Saving and loading baseline and refiner models."""

from __future__ import annotations

import hashlib
from dataclasses import asdict

import numpy as np

from .autodiff import checkpoint
from .baseline import BaselineModel
from .config import ModelConfig
from .conll import Vocabulary
from .refiner import Refiner


class ModelMismatchError(ValueError):
    pass


def baseline_blob(model: BaselineModel) -> bytes:
    meta = {"kind": "baseline", "model_config": asdict(model.cfg), "vocabulary": model.vocab.to_json(),
            "vocabulary_hash": model.vocab.content_hash()}
    return checkpoint.dumps(model.state_dict(), meta)


def baseline_hash(model: BaselineModel) -> str:
    """Content hash of the serialized baseline; refiners are tagged with it."""
    return hashlib.sha256(baseline_blob(model)).hexdigest()


def save_baseline(path, model: BaselineModel) -> str:
    blob = baseline_blob(model)
    with open(path, "wb") as fh:
        fh.write(blob)
    return hashlib.sha256(blob).hexdigest()


def load_baseline(path) -> tuple[BaselineModel, str]:
    with open(path, "rb") as fh:
        blob = fh.read()
    tensors, meta = checkpoint.loads(blob)
    if meta.get("kind") != "baseline":
        raise ModelMismatchError(f"{path}: not a baseline checkpoint (kind={meta.get('kind')!r})")
    vocab = Vocabulary.from_json(meta["vocabulary"])
    if vocab.content_hash() != meta.get("vocabulary_hash"):
        raise ModelMismatchError(f"{path}: vocabulary hash does not match the stored manifest")
    model = BaselineModel(vocab, ModelConfig(**meta["model_config"]), np.random.default_rng(0))
    model.load_state_dict(tensors)
    model.eval()
    return model, hashlib.sha256(blob).hexdigest()


def save_refiner(path, refiner: Refiner, cfg: ModelConfig, baseline_sha: str) -> str:
    meta = {"kind": "refiner", "mode": refiner.mode, "tied": refiner.tied, "model_config": asdict(cfg),
            "n_roles": refiner.n_roles, "d_pi": refiner.d_pi, "d_x": _input_width(refiner),
            "baseline_hash": baseline_sha}
    return checkpoint.save(path, refiner.state_dict(), meta)


def load_refiner(path, expected_baseline_hash: str | None = None) -> tuple[Refiner, dict]:
    tensors, meta = checkpoint.load(path)
    if meta.get("kind") != "refiner":
        raise ModelMismatchError(f"{path}: not a refiner checkpoint (kind={meta.get('kind')!r})")
    if expected_baseline_hash is not None and meta["baseline_hash"] != expected_baseline_hash:
        raise ModelMismatchError(
            f"{path}: refiner was trained on baseline {meta['baseline_hash'][:12]}, "
            f"got {expected_baseline_hash[:12]}")
    cfg = ModelConfig(**meta["model_config"])
    refiner = Refiner(meta["n_roles"], meta["d_x"], meta["d_pi"], cfg, np.random.default_rng(0),
                      mode=meta["mode"], tied=meta["tied"])
    refiner.load_state_dict(tensors)
    refiner.eval()
    return refiner, meta


def _input_width(refiner: Refiner) -> int:
    return refiner.encoder.layers[0][0].W.shape[0]
