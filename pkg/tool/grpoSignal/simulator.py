"""
Toy optimization loop showing how the aggregation strategy shapes GRPO dynamics.

This is an evolution-strategy stand-in for policy-gradient ascent, not a
diffusion-policy trainer: a 4-vector of sub-score "quality" is perturbed into
G candidates, candidates are rewarded, and the quality moves toward
advantage-weighted candidates.

Sampling uses numpy's PCG64 bit generator seeded with the 64-bit seed, so a
trajectory is a pure function of the SimSpec.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from langsmith import traceable

from ..rewardAgg.index import aggregate, sensitivity
from ..rewardAgg.schema import (
    DEFAULT_CONFIG,
    SUB_SCORE_NAMES,
    AggregationConfig,
    DomainError,
    Strategy,
    SubScores,
)
from .index import GrpoConfig, GrpoError, group_advantages

GRADIENT_PROBE = 1e-4


@dataclass(frozen=True)
class SimSpec:
    initial_quality: Sequence[float] = (12.0, 12.0, 12.0, 12.0)
    sigma: float = 1.0
    eta: float = 0.5
    steps: int = 500
    strategy: Strategy = Strategy.WEIGHTED_GEOMETRIC
    seed: int = 0
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    agg: AggregationConfig = DEFAULT_CONFIG

    def validate(self) -> None:
        if len(self.initial_quality) != 4:
            raise GrpoError("initial quality must be a 4-vector (s_if, s_con, s_nat, s_art)")
        if any(q < 0 or q > self.agg.scale_max for q in self.initial_quality):
            raise GrpoError(f"initial quality must lie in [0, {self.agg.scale_max:g}]")
        # sigma = 0 is accepted: it is the no-exploration control run
        if self.sigma < 0 or self.eta <= 0 or self.steps <= 0:
            raise GrpoError("sigma must be >= 0, eta and steps must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise GrpoError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    mean_reward: float
    quality: List[float]
    degenerate: bool
    # central-difference reward slope per sub-score at `quality`; None near a bound
    reward_gradient: List[Optional[float]]

    def to_dict(self) -> dict:
        return asdict(self)


def reward_gradient(theta: np.ndarray, cfg: AggregationConfig) -> List[Optional[float]]:
    point = SubScores(*theta.tolist())
    slopes: List[Optional[float]] = []
    for name in SUB_SCORE_NAMES:
        try:
            slopes.append(sensitivity(point, cfg, name, GRADIENT_PROBE))
        except DomainError:
            slopes.append(None)
    return slopes


@traceable(name="simulate_dynamics", metadata={"tool": "grpo_toy_loop"})
def simulate_dynamics(spec: SimSpec) -> List[TrajectoryPoint]:
    spec.validate()
    cfg = spec.agg.with_overrides(strategy=Strategy(spec.strategy).value)
    group_size = spec.grpo.group_size
    upper = cfg.scale_max

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    theta = np.asarray(spec.initial_quality, dtype=np.float64)
    trajectory: List[TrajectoryPoint] = []

    for step in range(1, spec.steps + 1):
        noise = rng.standard_normal((group_size, 4))
        candidates = np.clip(theta + spec.sigma * noise, 0.0, upper)
        rewards = [aggregate(SubScores(*row.tolist()), cfg).reward for row in candidates]
        advantage = group_advantages(rewards, spec.grpo)

        weights = np.asarray(advantage.advantages, dtype=np.float64)
        pull = (weights[:, None] * (candidates - theta)).mean(axis=0)
        theta = np.clip(theta + spec.eta * pull, 0.0, upper)

        trajectory.append(TrajectoryPoint(
            step=step,
            mean_reward=float(np.mean(rewards)),
            quality=theta.tolist(),
            degenerate=advantage.degenerate,
            reward_gradient=reward_gradient(theta, cfg),
        ))

    return trajectory


def write_trajectory_jsonl(trajectory: Sequence[TrajectoryPoint], path: str) -> None:
    output = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8") as file:
        for point in trajectory:
            file.write(json.dumps(point.to_dict()) + "\n")


__all__ = ["SimSpec", "TrajectoryPoint", "simulate_dynamics", "write_trajectory_jsonl"]
