"""
Reward aggregation types and the calibrated defaults.

Weights are always named (w_if/w_con, w_nat/w_art), never positional: the two
readings of the SC weight pair in the calibration write-up can both be
configured explicitly.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

WEIGHT_TOLERANCE = 1e-12
SUB_SCORE_NAMES = ("s_if", "s_con", "s_nat", "s_art")


class RewardAggError(ValueError):
    error_code = "RewardAggError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DomainError(RewardAggError):
    error_code = "DomainError"


class EmptyValidationSet(RewardAggError):
    error_code = "EmptyValidationSet"


class ConfigInvalid(RewardAggError):
    error_code = "ConfigInvalid"


class Strategy(str, Enum):
    WEIGHTED_GEOMETRIC = "weighted_geometric"
    BUCKET_MIN = "bucket_min"
    ARITHMETIC_MEAN = "arithmetic_mean"


class AggregationConfig(BaseModel):
    """Validated aggregation settings; defaults are the calibrated constants"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = 0.80
    w_if: float = 0.4
    w_con: float = 0.6
    w_nat: float = 0.5
    w_art: float = 0.5
    strategy: Strategy = Strategy.WEIGHTED_GEOMETRIC
    scale_max: float = 25.0
    # report reward / scale_max alongside the raw reward
    normalize: bool = False

    @model_validator(mode="after")
    def check_ranges(self):
        for name in ("alpha", "w_if", "w_con", "w_nat", "w_art", "scale_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} must lie in [0, 1]")
        for name in ("w_if", "w_con", "w_nat", "w_art"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if abs(self.w_if + self.w_con - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError("w_if + w_con must equal 1")
        if abs(self.w_nat + self.w_art - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError("w_nat + w_art must equal 1")
        if self.scale_max <= 0:
            raise ValueError("scale_max must be positive")
        return self

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "AggregationConfig":
        try:
            return cls.model_validate(data or {})
        except ValidationError as e:
            raise ConfigInvalid(f"invalid aggregation config: {e}")

    def with_overrides(self, **overrides) -> "AggregationConfig":
        merged = {**self.to_dict(), **{k: v for k, v in overrides.items() if v is not None}}
        return AggregationConfig.from_dict(merged)

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump()
        data["strategy"] = self.strategy.value
        return data


DEFAULT_CONFIG = AggregationConfig()


@dataclass(frozen=True)
class SubScores:
    s_if: float
    s_con: float
    s_nat: float
    s_art: float

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SubScores":
        try:
            return cls(*(float(data[name]) for name in SUB_SCORE_NAMES))
        except (KeyError, TypeError, ValueError) as e:
            raise DomainError(f"sub-scores need numeric {', '.join(SUB_SCORE_NAMES)}: {e}")

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in SUB_SCORE_NAMES}


@dataclass(frozen=True)
class RewardBreakdown:
    s_sc: float
    s_pq: float
    reward: float
    strategy: Strategy
    reward_normalized: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "s_sc": self.s_sc,
            "s_pq": self.s_pq,
            "reward": self.reward,
            "strategy": self.strategy.value,
        }
        if self.reward_normalized is not None:
            data["reward_normalized"] = self.reward_normalized
        return data
