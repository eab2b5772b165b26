"""
Sub-score aggregation into dimension scores and a scalar reward.

Strategies:
    weighted_geometric  R = S_SC^alpha * S_PQ^(1 - alpha)
    bucket_min          R = sqrt(min(s_if, s_con) * min(s_nat, s_art))
    arithmetic_mean     R = (s_if + s_con + s_nat + s_art) / 4

Everything stays on the raw [0, scale_max] scale.
"""

import math
from dataclasses import replace

from .schema import (
    DEFAULT_CONFIG,
    SUB_SCORE_NAMES,
    AggregationConfig,
    DomainError,
    RewardBreakdown,
    Strategy,
    SubScores,
)


def _check_score(name: str, value: float, cfg: AggregationConfig) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise DomainError(f"{name}={value!r} is not a finite number")
    if value < 0 or value > cfg.scale_max:
        raise DomainError(f"{name}={value} outside [0, {cfg.scale_max:g}]")


def _bounded(value: float, cfg: AggregationConfig) -> float:
    # convex combinations can overshoot the bound by an ulp
    return min(max(value, 0.0), cfg.scale_max)


def aggregate_sc(s_if: float, s_con: float, cfg: AggregationConfig = DEFAULT_CONFIG) -> float:
    _check_score("s_if", s_if, cfg)
    _check_score("s_con", s_con, cfg)
    return _bounded(cfg.w_if * s_if + cfg.w_con * s_con, cfg)


def aggregate_pq(s_nat: float, s_art: float, cfg: AggregationConfig = DEFAULT_CONFIG) -> float:
    _check_score("s_nat", s_nat, cfg)
    _check_score("s_art", s_art, cfg)
    return _bounded(cfg.w_nat * s_nat + cfg.w_art * s_art, cfg)


def _power(base: float, exponent: float) -> float:
    # limit convention: a zero exponent drops the factor entirely
    if exponent == 0:
        return 1.0
    return base ** exponent


def weighted_geometric(s_sc: float, s_pq: float, alpha: float) -> float:
    if (s_sc == 0 and alpha > 0) or (s_pq == 0 and alpha < 1):
        return 0.0
    return _power(s_sc, alpha) * _power(s_pq, 1.0 - alpha)


def aggregate(scores: SubScores, cfg: AggregationConfig = DEFAULT_CONFIG) -> RewardBreakdown:
    """Aggregate the four sub-scores under cfg.strategy"""
    s_sc = aggregate_sc(scores.s_if, scores.s_con, cfg)
    s_pq = aggregate_pq(scores.s_nat, scores.s_art, cfg)

    if cfg.strategy == Strategy.WEIGHTED_GEOMETRIC:
        reward = weighted_geometric(s_sc, s_pq, cfg.alpha)
    elif cfg.strategy == Strategy.BUCKET_MIN:
        reward = math.sqrt(min(scores.s_if, scores.s_con) * min(scores.s_nat, scores.s_art))
    elif cfg.strategy == Strategy.ARITHMETIC_MEAN:
        reward = (scores.s_if + scores.s_con + scores.s_nat + scores.s_art) / 4.0
    else:
        raise DomainError(f"unknown strategy {cfg.strategy!r}")

    reward = _bounded(reward, cfg)
    return RewardBreakdown(
        s_sc=s_sc,
        s_pq=s_pq,
        reward=reward,
        strategy=cfg.strategy,
        reward_normalized=reward / cfg.scale_max if cfg.normalize else None,
    )


def sensitivity(
    scores: SubScores,
    cfg: AggregationConfig,
    coordinate: str,
    h: float = 1e-4,
) -> float:
    """Central finite difference of the reward along one sub-score"""
    if coordinate not in SUB_SCORE_NAMES:
        raise DomainError(f"unknown coordinate {coordinate!r}; expected one of {SUB_SCORE_NAMES}")
    if not h > 0:
        raise DomainError("finite-difference step h must be positive")

    centre = getattr(scores, coordinate)
    lower, upper = centre - h, centre + h
    if lower < 0 or upper > cfg.scale_max:
        raise DomainError(
            f"probe [{lower}, {upper}] on {coordinate} leaves [0, {cfg.scale_max:g}]"
        )

    r_plus = aggregate(replace(scores, **{coordinate: upper}), cfg).reward
    r_minus = aggregate(replace(scores, **{coordinate: lower}), cfg).reward
    return (r_plus - r_minus) / (2.0 * h)


__all__ = [
    "aggregate_sc",
    "aggregate_pq",
    "aggregate",
    "weighted_geometric",
    "sensitivity",
]
