"""Run configuration: every threshold and hyperparameter, persisted with each run."""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class RunConfig:
    image_size: tuple[int, int] = (150, 150)
    quantization_threshold: float = 300.0  # 0..600, larger = coarser quantization
    merge_threshold: float = 0.4  # normalized mean-color distance
    descriptor_dim: int = 128
    ratio_threshold: float = 0.6
    min_region_matches: int = 3
    tau: float = 0.2
    epochs: int = 300
    hidden_size: int = 64
    learning_rate: float = 0.1
    l2: float = 0.0
    batch_size: int = 1024
    sample_size_fraction: float = 0.5
    seed: int = 0
    optimizer: str = "sgd"  # sgd | adam
    sampler: str = "importance"  # importance | uniform
    budget_unit: str = "epochs"  # epochs | steps
    standardize_features: bool = False
    prototypes: str = "all"  # all | train

    def validate(self) -> None:
        if not (0.0 <= self.quantization_threshold <= 600.0):
            raise ValueError("quantization_threshold must lie in [0,600]")
        if not (0.0 <= self.merge_threshold <= 1.0):
            raise ValueError("merge_threshold must lie in [0,1]")
        if not (0.0 < self.ratio_threshold <= 1.0):
            raise ValueError("ratio_threshold must lie in (0,1]")
        if self.min_region_matches < 1:
            raise ValueError("min_region_matches must be >= 1")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must lie in (0,1]")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise ValueError("image_size must be positive")
        if not (0.0 < self.sample_size_fraction <= 1.0):
            raise ValueError("sample_size_fraction must lie in (0,1]")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.sampler not in ("importance", "uniform"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.budget_unit not in ("epochs", "steps"):
            raise ValueError(f"unknown budget_unit {self.budget_unit!r}")
        if self.prototypes not in ("all", "train"):
            raise ValueError(f"unknown prototypes mode {self.prototypes!r}")


def _encode(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_encode(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode(key: str, raw: str):
    kind = RunConfig.__dataclass_fields__[key].type
    if key == "image_size":
        a, b = raw.split(",")
        return (int(a), int(b))
    if kind == "bool":
        if raw not in ("true", "false"):
            raise ValueError(f"bad boolean for {key}: {raw!r}")
        return raw == "true"
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def config_to_text(cfg: RunConfig) -> str:
    """Canonical flat key=value form; also the hashing preimage."""
    lines = [
        f"{f.name}={_encode(getattr(cfg, f.name))}"
        for f in dataclasses.fields(RunConfig)
    ]
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _decode(key, raw.strip())
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def config_hash(cfg: RunConfig) -> bytes:
    return hashlib.sha256(config_to_text(cfg).encode("utf-8")).digest()


def load_config(path: str | Path) -> RunConfig:
    return config_from_text(Path(path).read_text(encoding="utf-8"))


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config_to_text(cfg), encoding="utf-8")


# Per-dataset defaults from the published experimental setup.
DATASET_PRESETS: dict[str, dict] = {
    "eth-80": dict(epochs=30000, hidden_size=256, learning_rate=0.1, l2=0.0,
                   batch_size=1024, tau=0.2),
    "coil-100": dict(epochs=10000, hidden_size=512, learning_rate=0.1, l2=0.0,
                     batch_size=1024, tau=0.1),
    "aloi": dict(epochs=5000, hidden_size=128, learning_rate=0.1, l2=0.0,
                 batch_size=256, tau=0.2),
    "toy": dict(epochs=300, hidden_size=64, learning_rate=0.1, l2=0.0,
                batch_size=1024, tau=0.6, seed=7),
}


def preset_config(dataset: str, **overrides) -> RunConfig:
    params = dict(DATASET_PRESETS[dataset.lower()])
    params.update(overrides)
    cfg = RunConfig(**params)
    cfg.validate()
    return cfg
