from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, TypeVar

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from mate_reid.errors import ConfigError
from mate_reid.schemas import TrainMode
from mate_reid.utils import read_json

Profile = Literal["desk", "paper"]
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(slots=True)
class Settings:
    """Process-wide defaults loaded from environment variables."""

    profile: Profile = "desk"
    log_level: str = "INFO"
    workers: int = 1

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()

        env = os.environ
        values: dict[str, Any] = {}

        profile = env.get("MATE_PROFILE", "").strip().lower()
        if profile:
            if profile not in ("desk", "paper"):
                raise ConfigError(f"MATE_PROFILE must be 'desk' or 'paper', got {profile!r}")
            values["profile"] = profile

        log_level = env.get("MATE_LOG_LEVEL", "").strip().upper()
        if log_level:
            if log_level not in _LOG_LEVELS:
                raise ConfigError(f"MATE_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}, got {log_level!r}")
            values["log_level"] = log_level

        workers = env.get("MATE_WORKERS", "").strip()
        if workers:
            try:
                values["workers"] = int(workers)
            except ValueError as exc:
                raise ConfigError(f"MATE_WORKERS must be an integer, got {workers!r}") from exc
            if values["workers"] < 1:
                raise ConfigError("MATE_WORKERS must be at least 1")

        return cls(**values)


settings = Settings.from_env()


class _ConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class SynthConfig(_ConfigModel):
    """Parameters of the synthetic multi-camera generator."""

    schema_version: Literal[1] = 1
    num_cameras: int = Field(4, ge=2, description="M, the camera count")
    num_identities: int = Field(50, ge=2, description="G, training identities")
    reappear_fraction: float = Field(0.6, ge=0.0, le=1.0)
    samples_per_identity_per_camera: int = Field(8, ge=1)
    latent_dim: int = Field(16, ge=1)
    input_dim: int = Field(32, ge=1)
    camera_transform_scale: float = Field(0.4, ge=0.0)
    noise_sigma: float = Field(0.5, ge=0.0)
    test_identities: int = Field(50, ge=0)
    test_samples_per_identity_per_camera: int = Field(4, ge=2)
    seed: int = Field(0, ge=0, lt=2**64)


class CurriculumSchedule(_ConfigModel):
    tau_lower: float = Field(0.5, ge=0.0, le=1.0)
    tau_upper: float = Field(0.95, ge=0.0, le=1.0)
    rounds: int = Field(10, ge=1)

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "CurriculumSchedule":
        if self.tau_lower > self.tau_upper:
            raise ValueError(f"tau_lower {self.tau_lower} exceeds tau_upper {self.tau_upper}")
        return self


class SamplerConfig(_ConfigModel):
    identities_per_camera: int = Field(2, ge=1)
    images_per_identity: int = Field(4, ge=1)


class OptimizerConfig(_ConfigModel):
    lr_backbone: float = Field(0.005, gt=0.0)
    lr_heads: float = Field(0.05, gt=0.0)
    momentum: float = Field(0.0, ge=0.0, lt=1.0, description="0 disables momentum; the flag value is 0.9")


class NetConfig(_ConfigModel):
    hidden_sizes: tuple[int, ...] = (64,)
    feature_dim: int = Field(32, ge=1)

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_widths(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(width < 1 for width in value):
            raise ValueError("hidden layer widths must be positive")
        return value


class TrainConfig(_ConfigModel):
    schema_version: Literal[1] = 1
    mode: TrainMode = TrainMode.MATE
    rounds: int = Field(10, ge=1)
    epochs_per_round: int = Field(20, ge=1)
    final_round_epochs: int = Field(50, ge=1)
    lam: float = Field(0.5, ge=0.0, le=1.0, alias="lambda")
    tau_lower: float = Field(0.5, ge=0.0, le=1.0)
    tau_upper: float = Field(0.95, ge=0.0, le=1.0)
    cycle_length: int = Field(2, ge=2, le=4)
    sampler: SamplerConfig = SamplerConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    network: NetConfig = NetConfig()
    seed: int = Field(0, ge=0, lt=2**64)
    association_workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "TrainConfig":
        if self.tau_lower > self.tau_upper:
            raise ValueError(f"tau_lower {self.tau_lower} exceeds tau_upper {self.tau_upper}")
        return self

    @property
    def schedule(self) -> CurriculumSchedule:
        return CurriculumSchedule(tau_lower=self.tau_lower, tau_upper=self.tau_upper, rounds=self.rounds)

    def epochs_in_round(self, r: int) -> int:
        return self.final_round_epochs if r == self.rounds - 1 else self.epochs_per_round

    def updated(self, **changes: Any) -> "TrainConfig":
        """Return a validated copy with ``changes`` applied (nested dicts merge)."""
        if "lam" in changes:
            changes["lambda"] = changes.pop("lam")
        return build_model(TrainConfig, _deep_merge(self.model_dump(by_alias=True), changes))


class ExperimentSpec(_ConfigModel):
    """A batch of (mode, seed) runs evaluated on a shared dataset recipe."""

    schema_version: Literal[1] = 1
    dataset: SynthConfig | None = None
    dataset_path: str | None = None
    modes: tuple[TrainMode, ...] = Field(
        (TrainMode.MCST, TrainMode.EPCS, TrainMode.PCMT, TrainMode.MATE), min_length=1
    )
    train: dict[str, Any] = Field(default_factory=dict, description="TrainConfig overrides")
    profile: Profile | None = None
    output_dir: str = "runs"
    seeds: tuple[int, ...] = Field((0,), min_length=1)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentSpec":
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be distinct, got {list(self.seeds)}")
        if self.dataset is not None and self.dataset_path is not None:
            raise ValueError("give either dataset or dataset_path, not both")
        return self

    def synth_config(self) -> SynthConfig:
        return self.dataset if self.dataset is not None else SynthConfig()


# Model defaults follow the "paper" profile. The desk profile keeps fewer rounds with
# longer ones and raises the learning rates for the small encoder; the CLI and the
# experiments always resolve a profile through train_config().
PROFILES: dict[str, dict[str, Any]] = {
    "desk": {
        "rounds": 6,
        "epochs_per_round": 12,
        "final_round_epochs": 20,
        "lambda": 0.5,
        "tau_lower": 0.5,
        "tau_upper": 0.95,
        "optimizer": {"lr_backbone": 0.1, "lr_heads": 0.1},
    },
    "paper": {
        "rounds": 10,
        "epochs_per_round": 20,
        "final_round_epochs": 50,
        "lambda": 0.5,
        "tau_lower": 0.5,
        "tau_upper": 0.95,
        "optimizer": {"lr_backbone": 0.005, "lr_heads": 0.05},
    },
}

ModelT = TypeVar("ModelT", bound=BaseModel)


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_model(model: type[ModelT], data: dict[str, Any], *, source: str = "configuration") -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigError(f"invalid {model.__name__} in {source}: {problems}") from exc


def train_config(profile: str | None = None, overrides: dict[str, Any] | None = None) -> TrainConfig:
    """Profile constants with ``overrides`` merged on top."""
    name = profile or settings.profile
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {', '.join(PROFILES)}")
    return build_model(TrainConfig, _deep_merge(PROFILES[name], overrides or {}), source=f"profile {name}")


def load_config(path: str | Path, model: type[ModelT]) -> ModelT:
    return build_model(model, read_json(path), source=str(path))


def load_train_config(path: str | Path | None, profile: str | None = None) -> TrainConfig:
    overrides = read_json(path) if path else {}
    try:
        return train_config(profile, overrides)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}" if path else str(exc)) from exc
