#!/usr/bin/env python3
"""
Tests for GRPO advantages, the surrogate objective and the toy dynamics loop
"""

import json
import random

import numpy as np
import pytest

from tool.grpoSignal.index import (
    AdvantageVector,
    GroupTooSmall,
    GrpoConfig,
    LengthMismatch,
    NonPositiveRatio,
    SurrogateInputs,
    group_advantages,
    surrogate_objective,
)
from tool.grpoSignal.simulator import SimSpec, simulate_dynamics, write_trajectory_jsonl
from tool.rewardAgg.schema import Strategy

CFG = GrpoConfig(group_size=4)


def test_advantages_for_one_to_four():
    result = group_advantages([1, 2, 3, 4], CFG)
    assert not result.degenerate
    assert result.advantages == pytest.approx([-1.3416, -0.4472, 0.4472, 1.3416], abs=1e-4)


def test_constant_group_is_degenerate():
    result = group_advantages([5, 5, 5, 5], CFG)
    assert result.degenerate
    assert result.advantages == [0.0, 0.0, 0.0, 0.0]


def test_two_point_groups_are_plus_minus_one():
    assert group_advantages([3.0, 9.5], CFG).advantages == pytest.approx([-1.0, 1.0])
    assert group_advantages([9.5, 3.0], CFG).advantages == pytest.approx([1.0, -1.0])


def test_group_too_small():
    with pytest.raises(GroupTooSmall):
        group_advantages([1.0], CFG)


def test_standardization_on_random_groups():
    rng = random.Random(17)
    for _ in range(1000):
        rewards = [rng.uniform(0, 25) for _ in range(rng.randint(2, 16))]
        advantages = np.asarray(group_advantages(rewards, CFG).advantages)
        assert abs(advantages.mean()) < 1e-9
        assert abs(advantages.std() - 1.0) < 1e-9


def test_shift_and_scale_invariance():
    rng = random.Random(23)
    for _ in range(1000):
        rewards = [rng.uniform(0, 25) for _ in range(rng.randint(2, 12))]
        base = group_advantages(rewards, CFG).advantages
        shift = rng.uniform(-50, 50)
        scale = rng.uniform(0.1, 10)
        assert group_advantages([r + shift for r in rewards], CFG).advantages == pytest.approx(base, abs=1e-9)
        assert group_advantages([r * scale for r in rewards], CFG).advantages == pytest.approx(base, abs=1e-9)


def test_optional_advantage_clip():
    rewards = [0.0] * 99 + [25.0]
    unclipped = group_advantages(rewards, CFG).advantages
    clipped = group_advantages(rewards, GrpoConfig(advantage_clip=5.0)).advantages
    assert max(unclipped) > 5.0
    assert max(clipped) == 5.0


# ---------------------------------------------------------------- surrogate

def test_unit_ratios_against_zero_mean_advantages():
    advantages = group_advantages([1, 2, 3, 4], CFG)
    value = surrogate_objective(SurrogateInputs([1, 1, 1, 1], advantages, 0.0), CFG)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_kl_penalty_only():
    zeros = AdvantageVector([0.0] * 4, degenerate=True)
    value = surrogate_objective(SurrogateInputs([1, 1, 1, 1], zeros, 0.5), GrpoConfig(beta=0.02))
    assert value == pytest.approx(-0.01)


def test_weighted_ratio_example():
    advantages = AdvantageVector([1.0, -1 / 3, -1 / 3, -1 / 3], degenerate=False)
    value = surrogate_objective(SurrogateInputs([2, 1, 1, 1], advantages, 0.0), CFG)
    assert value == pytest.approx(0.25)


def test_surrogate_errors():
    advantages = AdvantageVector([1.0, -1.0], degenerate=False)
    with pytest.raises(LengthMismatch):
        surrogate_objective(SurrogateInputs([1, 1, 1], advantages), CFG)
    with pytest.raises(NonPositiveRatio):
        surrogate_objective(SurrogateInputs([1, 0], advantages), CFG)


# ---------------------------------------------------------------- simulator

def test_no_exploration_keeps_quality_fixed():
    spec = SimSpec(initial_quality=(12, 13, 14, 15), sigma=0.0, steps=20, seed=1)
    trajectory = simulate_dynamics(spec)
    assert all(point.quality == [12.0, 13.0, 14.0, 15.0] for point in trajectory)
    assert all(point.degenerate for point in trajectory)


def test_identical_seeds_give_identical_trajectories():
    spec = SimSpec(steps=50, seed=2 ** 63 + 5)
    assert simulate_dynamics(spec) == simulate_dynamics(spec)
    assert simulate_dynamics(spec) != simulate_dynamics(SimSpec(steps=50, seed=6))


def test_geometric_run_improves_mean_reward():
    spec = SimSpec(
        initial_quality=(12, 12, 12, 12),
        sigma=1.0,
        eta=0.5,
        steps=500,
        strategy=Strategy.WEIGHTED_GEOMETRIC,
        seed=42,
        grpo=GrpoConfig(group_size=12),
    )
    trajectory = simulate_dynamics(spec)
    assert len(trajectory) == 500
    assert trajectory[-1].mean_reward > trajectory[0].mean_reward


def test_bucket_min_run_has_dead_coordinates():
    spec = SimSpec(
        initial_quality=(12, 12, 12, 12),
        steps=500,
        strategy=Strategy.BUCKET_MIN,
        seed=42,
        grpo=GrpoConfig(group_size=12),
    )
    partner = {0: 1, 1: 0, 2: 3, 3: 2}
    checked = 0
    for point in simulate_dynamics(spec):
        for k, slope in enumerate(point.reward_gradient):
            if slope is None:
                continue
            if point.quality[k] - point.quality[partner[k]] > 2e-4:
                assert slope == 0.0
                checked += 1
    assert checked > 0


def test_trajectory_jsonl_export(tmp_path):
    trajectory = simulate_dynamics(SimSpec(steps=5, seed=3))
    target = tmp_path / "trajectory.jsonl"
    write_trajectory_jsonl(trajectory, str(target))
    records = [json.loads(line) for line in target.read_text(encoding="utf-8").splitlines()]
    assert [r["step"] for r in records] == [1, 2, 3, 4, 5]
    assert set(records[0]) >= {"step", "mean_reward", "quality"}
