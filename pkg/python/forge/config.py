"""
Configuration models for forge.

Every setting lives in a pydantic model; an experiment is described by one
``ExperimentConfig`` loaded from JSON. Unknown keys are rejected.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from forge.ecfp import EnumerationConfig
from forge.exceptions import ConfigValidationError
from forge.pooling import PoolingMethod


class _Settings(BaseModel):
    model_config = ConfigDict(extra="forbid")


EcfpSettings = EnumerationConfig


class PoolingSettings(_Settings):
    method: PoolingMethod = PoolingMethod.SORT_SLICE
    dim: int = Field(default=1024, ge=1)


class SplitSettings(_Settings):
    k: int = Field(default=2, ge=2)
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    stratify: bool = False


class TrainConfig(_Settings):
    """Optimiser and schedule; the learning rate at epoch e is lr * max(lr_decay**e, lr_floor)."""

    learning_rate: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=100, ge=0)
    seed: int = 0
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    lr_decay: float = Field(default=1.0, gt=0, le=1)
    lr_floor: float = Field(default=0.0, ge=0, le=1)

    def learning_rate_at(self, epoch: int) -> float:
        return self.learning_rate * max(self.lr_decay**epoch, self.lr_floor)


class KnnSettings(_Settings):
    k: int = Field(default=5, ge=1)
    minkowski_p: float = Field(default=1.0, ge=1)
    weighting: Literal["uniform", "distance"] = "uniform"


class MlpSettings(_Settings):
    hidden: List[int] = Field(default_factory=lambda: [256, 128], min_length=1)
    train: TrainConfig = Field(default_factory=TrainConfig)


class TwinSettings(_Settings):
    features: Literal["ecfp", "nfp"] = "ecfp"
    embedding: List[int] = Field(default_factory=lambda: [256, 128], min_length=1)
    ac_hidden: List[int] = Field(default_factory=lambda: [64])
    pd_hidden: List[int] = Field(default_factory=lambda: [64])
    train: TrainConfig = Field(default_factory=lambda: TrainConfig(batch_size=64, epochs=50))
    nfp: MlpSettings = Field(default_factory=MlpSettings)


class AcThresholds(_Settings):
    """Activity-difference cut-offs (p-units) for classifying pairs from predicted activities."""

    d_crit: float = 1.5
    lower: float = 1.0
    upper: float = 2.0

    @model_validator(mode="after")
    def _ordered(self) -> "AcThresholds":
        if not (0 < self.lower < self.upper and self.lower <= self.d_crit <= self.upper):
            raise ValueError("thresholds need 0 < lower <= d_crit <= upper and lower < upper")
        return self


class ExperimentConfig(_Settings):
    dataset: Path
    activity_units: Literal["p", "raw"] = "p"
    molar_scale: float = Field(default=1.0, gt=0)
    smiles_column: str = "smiles"
    label_column: str = "label"
    id_column: Optional[str] = None
    task: Literal["regression", "classification"] = "regression"
    ecfp: EcfpSettings = Field(default_factory=EcfpSettings)
    pooling: PoolingSettings = Field(default_factory=PoolingSettings)
    split: SplitSettings = Field(default_factory=SplitSettings)
    model: Literal["knn", "mlp", "twin"] = "knn"
    knn: KnnSettings = Field(default_factory=KnnSettings)
    mlp: MlpSettings = Field(default_factory=MlpSettings)
    twin: TwinSettings = Field(default_factory=TwinSettings)
    thresholds: AcThresholds = Field(default_factory=AcThresholds)
    output: Path = Path("results.json")
    clean: bool = True

    @model_validator(mode="after")
    def _task_fits_model(self) -> "ExperimentConfig":
        if self.task == "classification" and self.model != "knn":
            raise ValueError("classification experiments use the knn model")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise _wrap(exc, source) from exc

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigValidationError(f"cannot read config: {exc.strerror}", context={"file": str(path)}) from exc
        except json.JSONDecodeError as exc:
            raise ConfigValidationError(
                f"invalid JSON: {exc.msg}", context={"file": str(path), "line": exc.lineno, "column": exc.colno}
            ) from exc
        if not isinstance(data, dict):
            raise ConfigValidationError("config must be a JSON object", context={"file": str(path)})
        return cls.from_dict(data, source=str(path))

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Apply dotted-path overrides such as ``{"pooling.dim": 64}``; None values are skipped."""
        data = self.model_dump(mode="json")
        for dotted, value in overrides.items():
            if value is None:
                continue
            target = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                target = target.setdefault(key, {})
            target[leaf] = value
        return ExperimentConfig.from_dict(data)


def _wrap(exc: ValidationError, source: Optional[str]) -> ConfigValidationError:
    errors = exc.errors(include_url=False)
    first = errors[0]
    where = ".".join(str(part) for part in first["loc"]) or "<root>"
    context: Dict[str, Any] = {"field": where}
    if source:
        context["file"] = source
    return ConfigValidationError(f"{where}: {first['msg']}", errors=errors, context=context)


def validate_settings(model: type, data: Dict[str, Any]) -> Any:
    "Validate any settings model, converting pydantic failures to ConfigValidationError."
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise _wrap(exc, None) from exc


def env_threads() -> int:
    """Worker cap from FORGE_THREADS (default 1)."""
    raw = os.environ.get("FORGE_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigValidationError("FORGE_THREADS must be an integer", context={"value": raw}) from exc
    return max(1, value)
