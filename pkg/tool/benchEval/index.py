"""
Multi-pair ranking benchmark: annotation consensus, hierarchical gold ranking
and scoring of a reward model's predicted scores.

A group is correct only when the strict descending order of predicted scores
reproduces the gold order exactly; any tie among predictions is wrong.
Kendall's tau-b is reported per group for graded credit.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from langsmith import traceable
from scipy.stats import kendalltau

from .schema import (
    NEEDS_REVIEW,
    TIER_DIMENSIONS,
    AllTied,
    AnnotationBallot,
    BenchSample,
    Category,
    ConsensusResult,
    DuplicateAnnotator,
    EvalGroup,
    InvalidGroup,
    LengthMismatch,
    MissingScore,
    QualityTier,
    StrictOrderUnavailable,
    WrongBallotCount,
)

BALLOTS_PER_SAMPLE = 5
MAJORITY = 3
DEFAULT_TIE_BREAK = ("prompt_following", "quality")
GROUP_SIZES = (2, 3, 4)

PredictedScores = Mapping[str, float]


def consensus_vote(ballots: Sequence[AnnotationBallot]) -> ConsensusResult:
    """Per dimension, the tier with at least 3 of 5 votes, else needs_review"""
    if len(ballots) != BALLOTS_PER_SAMPLE:
        raise WrongBallotCount(f"expected {BALLOTS_PER_SAMPLE} ballots, got {len(ballots)}")
    annotators = [ballot.annotator_id for ballot in ballots]
    if len(set(annotators)) != len(annotators):
        raise DuplicateAnnotator(f"annotators voted twice: {sorted(a for a, n in Counter(annotators).items() if n > 1)}")

    outcomes: Dict[str, str] = {}
    votes: Dict[str, Dict[str, int]] = {}
    for dimension in TIER_DIMENSIONS:
        counts = Counter(getattr(ballot.tiers, dimension) for ballot in ballots)
        votes[dimension] = {tier.value: counts.get(tier, 0) for tier in QualityTier}
        winner = next((tier for tier in QualityTier if counts.get(tier, 0) >= MAJORITY), None)
        outcomes[dimension] = winner.value if winner else NEEDS_REVIEW
    return ConsensusResult(outcomes=outcomes, votes=votes)


def hierarchical_rank(
    samples: Sequence[BenchSample],
    tie_break: Sequence[str] = DEFAULT_TIE_BREAK,
) -> List[BenchSample]:
    """
    Order samples best-first by overall tier, breaking ties with the SC
    (prompt_following) tier and then the PQ (quality) tier.
    """
    if len(samples) < 2:
        raise StrictOrderUnavailable("ranking needs at least two samples")
    ordered = sorted(samples, key=lambda s: s.tiers.key(tie_break), reverse=True)
    for first, second in zip(ordered, ordered[1:]):
        if first.tiers.key(tie_break) == second.tiers.key(tie_break):
            raise StrictOrderUnavailable(
                f"samples {first.sample_id} and {second.sample_id} share identical tiers"
            )
    return ordered


def kendall_tau(pred_ranks: Sequence[float], gold_ranks: Sequence[float]) -> float:
    """
    Kendall's tau-b. Inputs are any comparable values sharing one
    orientation (larger means better in both).
    """
    if len(pred_ranks) != len(gold_ranks):
        raise LengthMismatch(f"{len(pred_ranks)} predictions vs {len(gold_ranks)} gold ranks")
    if len(pred_ranks) < 2:
        raise LengthMismatch("kendall tau needs at least two items")

    with np.errstate(invalid="ignore", divide="ignore"):
        tau = kendalltau(pred_ranks, gold_ranks, variant="b")[0]
    if np.isnan(tau):
        raise AllTied("tau-b is undefined when either ranking is entirely tied")
    return float(tau)


@dataclass(frozen=True)
class GroupResult:
    group_id: str
    size: int
    category: Category
    correct: bool
    tau: float
    # False when tau-b was undefined (all predictions tied); tau is then 0
    tau_defined: bool
    predicted_order: List[str]

    def to_dict(self) -> dict:
        return {
            "group_id": self.group_id,
            "size": self.size,
            "category": self.category.value,
            "correct": self.correct,
            "tau": self.tau,
            "tau_defined": self.tau_defined,
            "predicted_order": self.predicted_order,
        }


def score_group(group: EvalGroup, scores: PredictedScores) -> GroupResult:
    missing = [s.sample_id for s in group.samples if s.sample_id not in scores]
    if missing:
        raise MissingScore(f"group {group.group_id} has no predicted score for {missing}")

    predicted = [float(scores[s.sample_id]) for s in group.samples]
    has_tie = len(set(predicted)) != len(predicted)
    predicted_order = [
        s.sample_id for _, s in sorted(zip(predicted, group.samples), key=lambda pair: -pair[0])
    ]
    correct = not has_tie and predicted_order == group.gold_order()

    # gold rank 1 is best, so negate to share the larger-is-better orientation
    try:
        tau = kendall_tau(predicted, [-s.gold_rank for s in group.samples])
        tau_defined = True
    except AllTied:
        tau, tau_defined = 0.0, False

    return GroupResult(
        group_id=group.group_id,
        size=group.size,
        category=group.category,
        correct=correct,
        tau=tau,
        tau_defined=tau_defined,
        predicted_order=predicted_order,
    )


@dataclass(frozen=True)
class CategoryBreakdown:
    groups: int
    correct: int
    # correct / groups over every size in the category
    accuracy: float
    # unweighted mean of the category's per-size accuracies
    size_mean_accuracy: float
    per_size: Dict[int, float]

    def to_dict(self) -> dict:
        return {
            "groups": self.groups,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "size_mean_accuracy": self.size_mean_accuracy,
            "per_size": {f"{size}p": acc for size, acc in self.per_size.items()},
        }


@dataclass(frozen=True)
class BenchReport:
    accuracy_2p: Optional[float]
    accuracy_3p: Optional[float]
    accuracy_4p: Optional[float]
    overall: Optional[float]
    mean_tau: Optional[float]
    tau_excluded: int
    group_counts: Dict[int, int]
    per_category: Dict[str, CategoryBreakdown] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy_2p": self.accuracy_2p,
            "accuracy_3p": self.accuracy_3p,
            "accuracy_4p": self.accuracy_4p,
            "overall": self.overall,
            "mean_tau": self.mean_tau,
            "tau_excluded": self.tau_excluded,
            "group_counts": {f"{size}p": count for size, count in self.group_counts.items()},
            "per_category": {name: b.to_dict() for name, b in self.per_category.items()},
        }


def _size_accuracies(results: Iterable[GroupResult]) -> Dict[int, float]:
    totals: Counter = Counter()
    hits: Counter = Counter()
    for result in results:
        totals[result.size] += 1
        hits[result.size] += int(result.correct)
    return {size: hits[size] / totals[size] for size in GROUP_SIZES if totals[size]}


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


@traceable(name="evaluate_benchmark", metadata={"tool": "bench_eval"})
def evaluate_benchmark(groups: Sequence[EvalGroup], scores: PredictedScores) -> BenchReport:
    """
    Score every group and reduce to per-size accuracy, overall (the unweighted
    mean over the sizes present) and mean tau-b over groups where it is defined.
    """
    results = [score_group(group, scores) for group in groups]
    by_size = _size_accuracies(results)

    taus = [r.tau for r in results if r.tau_defined]
    per_category: Dict[str, CategoryBreakdown] = {}
    for category in Category:
        members = [r for r in results if r.category == category]
        if not members:
            continue
        correct = sum(int(r.correct) for r in members)
        category_sizes = _size_accuracies(members)
        per_category[category.value] = CategoryBreakdown(
            groups=len(members),
            correct=correct,
            accuracy=correct / len(members),
            size_mean_accuracy=_mean(list(category_sizes.values())),
            per_size=category_sizes,
        )

    return BenchReport(
        accuracy_2p=by_size.get(2),
        accuracy_3p=by_size.get(3),
        accuracy_4p=by_size.get(4),
        overall=_mean(list(by_size.values())),
        mean_tau=_mean(taus),
        tau_excluded=len(results) - len(taus),
        group_counts={size: sum(1 for r in results if r.size == size) for size in GROUP_SIZES},
        per_category=per_category,
    )


def overall_from_sizes(accuracies: Sequence[Optional[float]]) -> Optional[float]:
    return _mean([a for a in accuracies if a is not None])


def format_report_table(report: BenchReport) -> str:
    """Human-readable summary for the terminal only"""

    def cell(value: Optional[float]) -> str:
        return f"{value:.3f}" if value is not None else "  -  "

    lines = [
        "┌──────────────┬───────┬───────┬───────┬───────┬───────┐",
        "│ Split        │  2-P  │  3-P  │  4-P  │ Ovrl. │  tau  │",
        "├──────────────┼───────┼───────┼───────┼───────┼───────┤",
        f"│ {'All':<12} │ {cell(report.accuracy_2p)} │ {cell(report.accuracy_3p)} │ "
        f"{cell(report.accuracy_4p)} │ {cell(report.overall)} │ {cell(report.mean_tau)} │",
    ]
    for name, breakdown in report.per_category.items():
        lines.append(
            f"│ {name:<12} │ {cell(breakdown.per_size.get(2))} │ {cell(breakdown.per_size.get(3))} │ "
            f"{cell(breakdown.per_size.get(4))} │ {cell(breakdown.accuracy)} │       │"
        )
    lines.append("└──────────────┴───────┴───────┴───────┴───────┴───────┘")
    lines.append(f"Groups: {sum(report.group_counts.values())}   tau excluded (all tied): {report.tau_excluded}")
    return "\n".join(lines)


def load_benchmark(path: str) -> List[EvalGroup]:
    groups: List[EvalGroup] = []
    with open(Path(path), "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, 1):
            if not line.strip():
                continue
            try:
                groups.append(EvalGroup.model_validate(json.loads(line)))
            except ValueError as e:
                raise InvalidGroup(f"{path}:{line_number}: {e}")
    return groups


def load_predictions(path: str) -> Dict[str, float]:
    scores: Dict[str, float] = {}
    with open(Path(path), "r", encoding="utf-8") as file:
        for line in file:
            if line.strip():
                record = json.loads(line)
                scores[str(record["sample_id"])] = float(record["reward"])
    return scores


def write_benchmark(groups: Sequence[EvalGroup], path: str) -> None:
    with open(Path(path), "w", encoding="utf-8") as file:
        for group in groups:
            file.write(json.dumps(group.to_record(), ensure_ascii=False) + "\n")


__all__ = [
    "consensus_vote",
    "hierarchical_rank",
    "kendall_tau",
    "score_group",
    "evaluate_benchmark",
    "format_report_table",
    "load_benchmark",
    "load_predictions",
    "write_benchmark",
    "GroupResult",
    "BenchReport",
]
