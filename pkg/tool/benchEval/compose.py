"""
Benchmark group composition from per-source pools of annotated samples.

Each pool entry is one source set: every edit of a single source image under
one instruction. Candidate groups are enumerated per source set, shuffled
with the seed and the first n of each size are kept.
"""

import json
import random
from pathlib import Path
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

from langsmith import traceable

from .index import hierarchical_rank
from .schema import BenchSample, EvalGroup, InsufficientPool, InvalidGroup, RankedSample

SourceSet = Sequence[BenchSample]
Candidate = Tuple[BenchSample, ...]


def _distinct_overall(samples: Candidate) -> bool:
    return len({s.tiers.overall for s in samples}) == len(samples)


def _two_pair_candidates(source_set: SourceSet) -> List[Candidate]:
    return [pair for pair in combinations(source_set, 2) if _distinct_overall(pair)]


def _three_pair_candidates(source_set: SourceSet) -> List[Candidate]:
    # one Good, one Medium and one Bad sample
    return [triple for triple in combinations(source_set, 3) if _distinct_overall(triple)]


def _four_pair_candidates(source_set: SourceSet) -> List[Candidate]:
    """
    A 3-pair base plus a fourth sample that shares its overall tier with one
    member and differs from it only in the prompt-following/quality tiers.
    """
    candidates: List[Candidate] = []
    seen = set()
    for base in _three_pair_candidates(source_set):
        base_ids = {s.sample_id for s in base}
        for extra in source_set:
            if extra.sample_id in base_ids:
                continue
            twin = next(s for s in base if s.tiers.overall == extra.tiers.overall)
            members = frozenset(s.sample_id for s in base) | {extra.sample_id}
            if twin.tiers != extra.tiers and members not in seen:
                seen.add(members)
                candidates.append(base + (extra,))
    return candidates


CANDIDATE_BUILDERS = {
    2: _two_pair_candidates,
    3: _three_pair_candidates,
    4: _four_pair_candidates,
}


def _to_group(group_id: str, members: Candidate) -> EvalGroup:
    ordered = hierarchical_rank(members)
    ranked = [
        RankedSample(**sample.model_dump(exclude={"gold_rank"}), gold_rank=position)
        for position, sample in enumerate(ordered, 1)
    ]
    head = ordered[0]
    return EvalGroup(
        group_id=group_id,
        size=len(members),
        category=head.category,
        instruction=head.instruction,
        samples=ranked,
    )


@traceable(name="compose_groups", metadata={"tool": "bench_eval"})
def compose_groups(pool: Sequence[SourceSet], counts: Tuple[int, int, int], seed: int) -> List[EvalGroup]:
    """
    Compose n2 two-pair, n3 three-pair and n4 four-pair groups.

    Composition is a pure function of (pool, counts, seed). Raises
    InsufficientPool when a size has fewer candidates than requested.
    """
    rng = random.Random(seed)
    groups: List[EvalGroup] = []

    for size, wanted in zip((2, 3, 4), counts):
        if wanted < 0:
            raise InsufficientPool(f"group count for size {size} must be non-negative, got {wanted}")
        if wanted == 0:
            continue

        candidates: List[Candidate] = []
        for source_set in pool:
            candidates.extend(CANDIDATE_BUILDERS[size](source_set))
        if len(candidates) < wanted:
            raise InsufficientPool(
                f"requested {wanted} {size}-pair groups but the pool yields only {len(candidates)}"
            )

        rng.shuffle(candidates)
        for index, members in enumerate(candidates[:wanted]):
            groups.append(_to_group(f"{size}p-{index:04d}", members))

    print(f"🧩 Composed {len(groups)} groups ({sum(g.size for g in groups)} sample slots)")
    return groups


def count_by_size(groups: Sequence[EvalGroup]) -> Dict[int, int]:
    counts: Dict[int, int] = {2: 0, 3: 0, 4: 0}
    for group in groups:
        counts[group.size] += 1
    return counts


def load_sample_pool(path: str) -> List[List[BenchSample]]:
    """
    Read annotated BenchSample records (JSONL) and split them into source
    sets keyed by (source_ref, instruction), in first-seen order.
    """
    source_sets: Dict[Tuple[str, str], List[BenchSample]] = {}
    with open(Path(path), "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, 1):
            if not line.strip():
                continue
            try:
                sample = BenchSample.model_validate(json.loads(line))
            except ValueError as e:
                raise InvalidGroup(f"{path}:{line_number}: {e}")
            source_sets.setdefault((sample.source_ref, sample.instruction), []).append(sample)
    return list(source_sets.values())


__all__ = ["compose_groups", "count_by_size", "load_sample_pool"]
