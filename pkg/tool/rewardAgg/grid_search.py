"""
Calibration grid search over (alpha, w_con) for the weighted geometric reward.

Accuracy of a lattice cell is strict pairwise preference accuracy: a pair
counts as correct only when reward(better) > reward(worse); ties are wrong.
PQ weights stay balanced at 0.5 / 0.5 and w_if = 1 - w_con.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from langsmith import traceable

from .index import aggregate
from .schema import (
    AggregationConfig,
    ConfigInvalid,
    EmptyValidationSet,
    Strategy,
    SubScores,
)

LATTICE_TOLERANCE = 1e-9

PreferencePair = Tuple[SubScores, SubScores]


@dataclass(frozen=True)
class GridSearchSpec:
    pairs: Sequence[PreferencePair] = field(default_factory=tuple)
    alpha_min: float = 0.60
    alpha_max: float = 0.95
    w_min: float = 0.40
    w_max: float = 0.75
    step: float = 0.05
    scale_max: float = 25.0


@dataclass(frozen=True)
class GridSearchResult:
    best: AggregationConfig
    best_accuracy: float
    alphas: List[float]
    w_cons: List[float]
    # surface[i][j] is the accuracy at (alphas[i], w_cons[j])
    surface: List[List[float]]

    @property
    def cells_evaluated(self) -> int:
        return len(self.alphas) * len(self.w_cons)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best": self.best.to_dict(),
            "best_accuracy": self.best_accuracy,
            "cells_evaluated": self.cells_evaluated,
            "alphas": self.alphas,
            "w_cons": self.w_cons,
            "surface": self.surface,
        }


def lattice(minimum: float, maximum: float, step: float) -> List[float]:
    """Points minimum + k*step for k = 0..n, with n*step == maximum - minimum"""
    if not step > 0:
        raise ConfigInvalid("grid step must be positive")
    if maximum < minimum:
        raise ConfigInvalid(f"range [{minimum}, {maximum}] is not well-ordered")
    span = maximum - minimum
    count = round(span / step)
    if abs(count * step - span) > LATTICE_TOLERANCE:
        raise ConfigInvalid(f"step {step} does not divide the range [{minimum}, {maximum}]")
    return [round(minimum + k * step, 12) for k in range(count + 1)]


def pairwise_accuracy(pairs: Sequence[PreferencePair], cfg: AggregationConfig) -> float:
    correct = sum(1 for better, worse in pairs if aggregate(better, cfg).reward > aggregate(worse, cfg).reward)
    return correct / len(pairs)


def cell_config(alpha: float, w_con: float, scale_max: float = 25.0) -> AggregationConfig:
    return AggregationConfig(
        alpha=alpha,
        w_if=1.0 - w_con,
        w_con=w_con,
        w_nat=0.5,
        w_art=0.5,
        strategy=Strategy.WEIGHTED_GEOMETRIC,
        scale_max=scale_max,
    )


@traceable(name="grid_search", metadata={"tool": "reward_calibration"})
def grid_search(spec: GridSearchSpec) -> GridSearchResult:
    """
    Evaluate every (alpha, w_con) cell and return the argmax plus the surface.

    Ties are broken by the smallest alpha, then the smallest w_con, so the
    result does not depend on evaluation order.
    """
    if not spec.pairs:
        raise EmptyValidationSet("grid search needs at least one preference pair")

    alphas = lattice(spec.alpha_min, spec.alpha_max, spec.step)
    w_cons = lattice(spec.w_min, spec.w_max, spec.step)
    if alphas[0] < 0 or alphas[-1] > 1 or w_cons[0] < 0 or w_cons[-1] > 1:
        raise ConfigInvalid("alpha and w_con ranges must stay inside [0, 1]")

    surface: List[List[float]] = []
    best_index = (0, 0)
    best_accuracy = -1.0
    for i, alpha in enumerate(alphas):
        row = []
        for j, w_con in enumerate(w_cons):
            accuracy = pairwise_accuracy(spec.pairs, cell_config(alpha, w_con, spec.scale_max))
            row.append(accuracy)
            # strict improvement only: earlier (smaller) alpha / w_con win ties
            if accuracy > best_accuracy:
                best_accuracy = accuracy
                best_index = (i, j)
        surface.append(row)

    best = cell_config(alphas[best_index[0]], w_cons[best_index[1]], spec.scale_max)
    print(
        f"🔍 Grid search: {len(alphas) * len(w_cons)} cells, best alpha={best.alpha:.2f} "
        f"w_con={best.w_con:.2f} accuracy={best_accuracy:.4f}"
    )
    return GridSearchResult(best, best_accuracy, alphas, w_cons, surface)


def load_preference_pairs(path: str) -> List[PreferencePair]:
    """Read JSONL records {"better": {...sub-scores}, "worse": {...}}"""
    pairs: List[PreferencePair] = []
    with open(Path(path), "r", encoding="utf-8") as file:
        for line in file:
            if not line.strip():
                continue
            record = json.loads(line)
            pairs.append((SubScores.from_dict(record["better"]), SubScores.from_dict(record["worse"])))
    return pairs


__all__ = [
    "GridSearchSpec",
    "GridSearchResult",
    "lattice",
    "pairwise_accuracy",
    "grid_search",
    "load_preference_pairs",
]
