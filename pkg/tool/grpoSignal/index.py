"""
GRPO group advantages and the unclipped surrogate objective.

Advantages standardize rewards within a group using the population
(divide-by-G) standard deviation. Groups whose spread falls below
epsilon_std get all-zero advantages and a degenerate flag instead of an
error, because an RL loop must tolerate all-equal rewards.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# RL-run presets (group size, KL weight, advantage clip)
RL_GROUP_SIZE = 12
RL_BETA = 0.04
RL_ADVANTAGE_CLIP = 5.0


class GrpoError(ValueError):
    error_code = "GrpoError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class GroupTooSmall(GrpoError):
    error_code = "GroupTooSmall"


class LengthMismatch(GrpoError):
    error_code = "LengthMismatch"


class NonPositiveRatio(GrpoError):
    error_code = "NonPositiveRatio"


class GrpoConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    group_size: int = Field(default=RL_GROUP_SIZE, ge=2)
    beta: float = Field(default=RL_BETA, ge=0.0)
    epsilon_std: float = Field(default=1e-8, gt=0.0)
    # None leaves advantages unclipped; RL_ADVANTAGE_CLIP matches the RL runs
    advantage_clip: Optional[float] = Field(default=None, gt=0.0)


@dataclass(frozen=True)
class AdvantageVector:
    advantages: List[float]
    degenerate: bool

    def __len__(self) -> int:
        return len(self.advantages)


@dataclass(frozen=True)
class SurrogateInputs:
    ratios: Sequence[float]
    advantages: AdvantageVector
    kl_value: float = 0.0


def group_advantages(rewards: Sequence[float], cfg: GrpoConfig = GrpoConfig()) -> AdvantageVector:
    """Standardize one group of rewards: (r_i - mean) / std"""
    values = np.asarray(rewards, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise GroupTooSmall(f"a GRPO group needs at least 2 rewards, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise GrpoError("group rewards must all be finite")

    mean = values.mean()
    std = values.std()  # population std, ddof=0
    if std < cfg.epsilon_std:
        return AdvantageVector([0.0] * values.size, degenerate=True)

    advantages = (values - mean) / std
    if cfg.advantage_clip is not None:
        advantages = np.clip(advantages, -cfg.advantage_clip, cfg.advantage_clip)
    return AdvantageVector(advantages.tolist(), degenerate=False)


def surrogate_objective(inp: SurrogateInputs, cfg: GrpoConfig = GrpoConfig()) -> float:
    """(1/G) * sum(ratio_i * A_i) - beta * KL"""
    ratios = np.asarray(inp.ratios, dtype=np.float64)
    advantages = np.asarray(inp.advantages.advantages, dtype=np.float64)
    if ratios.shape != advantages.shape:
        raise LengthMismatch(f"{ratios.size} ratios vs {advantages.size} advantages")
    if ratios.size == 0:
        raise GroupTooSmall("surrogate needs a non-empty group")
    if np.any(~np.isfinite(ratios)) or np.any(ratios <= 0):
        raise NonPositiveRatio("policy likelihood ratios must be finite and strictly positive")
    if inp.kl_value < 0 or not math.isfinite(inp.kl_value):
        raise GrpoError("kl_value must be a finite non-negative estimate")

    return float(np.mean(ratios * advantages) - cfg.beta * inp.kl_value)


__all__ = [
    "GrpoConfig",
    "AdvantageVector",
    "SurrogateInputs",
    "group_advantages",
    "surrogate_objective",
    "GroupTooSmall",
    "LengthMismatch",
    "NonPositiveRatio",
]
