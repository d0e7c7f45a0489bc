"""Model and training configuration, readable from flat ``key = value`` files."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class ModelConfig:
    d_w: int = 300
    d_dep: int = 64
    d_pos: int = 64
    d_h: int = 428
    n_layers: int = 3
    d_rho0: int = 300
    d_rho1: int = 128
    d_pi: int = 128
    d_g: int = 200
    d_r: int = 200
    dropout: float = 0.3
    recurrent_dropout: float = 0.3
    lowercase: bool = False
    min_count: int = 1


# English runs use wider word vectors and encoder states.
ENGLISH = ModelConfig(d_w=1024, d_h=500)


@dataclass(frozen=True)
class TrainConfig:
    stage: str = "baseline"  # baseline | refiner
    learning_rate: float = 3e-4
    epochs: int | None = None  # None -> 600 for baseline, 300 for refiner
    batch_size: int = 32
    iterations: int = 2
    lambda_role: float = 5.0
    lambda_sense: float = 50.0
    patience: int = 25
    seed: int = 1
    mode: str = "structured"  # structured | self
    tied: bool = True
    gumbel: bool = True
    early_stopping: bool = True

    def __post_init__(self):
        if self.stage not in ("baseline", "refiner"):
            raise ValueError(f"stage must be 'baseline' or 'refiner', got {self.stage!r}")
        if self.mode not in ("structured", "self"):
            raise ValueError(f"mode must be 'structured' or 'self', got {self.mode!r}")
        if self.lambda_role < 0 or self.lambda_sense < 0:
            raise ValueError("Gumbel multipliers must be nonnegative")
        if self.stage == "refiner" and self.iterations < 1:
            raise ValueError("refiner training needs at least one iteration")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @property
    def n_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return 600 if self.stage == "baseline" else 300


def _coerce(raw: str, typ):
    text = raw.strip()
    if "bool" in str(typ):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if "None" in str(typ) and text.lower() in ("none", ""):
        return None
    if "int" in str(typ):
        return int(text)
    if "float" in str(typ):
        return float(text)
    return text


def parse_overrides(pairs: dict[str, str]) -> tuple[dict, dict]:
    """Split raw ``key -> value`` strings into (model, train) keyword dicts.

    Unknown keys raise ``KeyError``.
    """
    model_types = {f.name: f.type for f in fields(ModelConfig)}
    train_types = {f.name: f.type for f in fields(TrainConfig)}
    model_kw, train_kw = {}, {}
    for key, raw in pairs.items():
        if key in model_types:
            model_kw[key] = _coerce(raw, model_types[key])
        elif key in train_types:
            train_kw[key] = _coerce(raw, train_types[key])
        else:
            raise KeyError(f"unknown configuration key {key!r}")
    return model_kw, train_kw


def read_config_file(path) -> dict[str, str]:
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def build_configs(pairs: dict[str, str], model: ModelConfig | None = None,
                  train: TrainConfig | None = None) -> tuple[ModelConfig, TrainConfig]:
    model_kw, train_kw = parse_overrides(pairs)
    return replace(model or ModelConfig(), **model_kw), replace(train or TrainConfig(), **train_kw)


def model_config_from_dict(obj: dict) -> ModelConfig:
    return ModelConfig(**obj)


def to_dict(cfg) -> dict:
    return asdict(cfg)
