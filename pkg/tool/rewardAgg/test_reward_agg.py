#!/usr/bin/env python3
"""
Tests for sub-score aggregation, sensitivity and calibration grid search
"""

import itertools
import json
import math
import random
from dataclasses import replace
from pathlib import Path

import pytest

from tool.rewardAgg.grid_search import (
    GridSearchSpec,
    cell_config,
    grid_search,
    lattice,
    pairwise_accuracy,
)
from tool.rewardAgg.index import aggregate, aggregate_pq, aggregate_sc, sensitivity
from tool.rewardAgg.schema import (
    DEFAULT_CONFIG,
    SUB_SCORE_NAMES,
    AggregationConfig,
    ConfigInvalid,
    DomainError,
    EmptyValidationSet,
    Strategy,
    SubScores,
)

REPO_ROOT = Path(__file__).resolve().parents[2]
GEOMETRIC = DEFAULT_CONFIG
BUCKET = DEFAULT_CONFIG.with_overrides(strategy="bucket_min")
MEAN = DEFAULT_CONFIG.with_overrides(strategy="arithmetic_mean")
ALL_STRATEGIES = (GEOMETRIC, BUCKET, MEAN)


def test_shipped_defaults_match_calibrated_constants():
    shipped = json.loads((REPO_ROOT / "reward_config.json").read_text(encoding="utf-8"))
    assert shipped == {
        "alpha": 0.8,
        "w_if": 0.4,
        "w_con": 0.6,
        "w_nat": 0.5,
        "w_art": 0.5,
        "strategy": "weighted_geometric",
        "scale_max": 25.0,
        "normalize": False,
    }
    assert AggregationConfig.from_dict(shipped) == DEFAULT_CONFIG


def test_config_rejects_bad_weights():
    with pytest.raises(ConfigInvalid):
        AggregationConfig.from_dict({"w_if": 0.5, "w_con": 0.6})
    with pytest.raises(ConfigInvalid):
        AggregationConfig.from_dict({"alpha": 1.2})
    with pytest.raises(ConfigInvalid):
        AggregationConfig.from_dict({"strategy": "median"})


# ---------------------------------------------------------------- dimension scores

def test_aggregate_sc_examples():
    cfg = AggregationConfig(w_if=0.4, w_con=0.6)
    assert aggregate_sc(20, 10, cfg) == pytest.approx(14.0)
    assert aggregate_sc(25, 25, cfg) == 25.0
    assert aggregate_sc(0, 0, cfg) == 0.0


def test_aggregate_pq_examples():
    assert aggregate_pq(18, 9) == pytest.approx(13.5)
    assert aggregate_pq(25, 25) == 25.0
    assert aggregate_pq(10, 10) == pytest.approx(10.0)


def test_out_of_range_input_is_a_domain_error():
    with pytest.raises(DomainError):
        aggregate_sc(26, 10)
    with pytest.raises(DomainError):
        aggregate(SubScores(1, 2, 3, -0.1))
    with pytest.raises(DomainError):
        aggregate(SubScores(1, 2, float("nan"), 4))


# ---------------------------------------------------------------- strategies

def test_geometric_oracle():
    # s_if = s_con = 16 gives S_SC = 16; s_nat = s_art = 25 gives S_PQ = 25
    breakdown = aggregate(SubScores(16, 16, 25, 25), GEOMETRIC)
    assert breakdown.s_sc == pytest.approx(16.0)
    assert breakdown.s_pq == pytest.approx(25.0)
    assert breakdown.reward == pytest.approx(16 ** 0.8 * 25 ** 0.2, abs=1e-12)
    assert breakdown.reward == pytest.approx(17.494, abs=1e-3)


def test_bucket_min_oracle():
    assert aggregate(SubScores(10, 20, 15, 25), BUCKET).reward == pytest.approx(12.2474, abs=1e-4)


def test_arithmetic_mean_oracle():
    assert aggregate(SubScores(10, 20, 15, 25), MEAN).reward == 17.5


@pytest.mark.parametrize("cfg", ALL_STRATEGIES, ids=lambda c: c.strategy.value)
def test_equal_sub_scores_give_that_value(cfg):
    for c in (0.0, 1.0, 7.3, 12.5, 25.0):
        assert aggregate(SubScores(c, c, c, c), cfg).reward == pytest.approx(c, abs=1e-12)


def test_zero_annihilation_for_geometric():
    assert aggregate(SubScores(0, 0, 20, 20), GEOMETRIC).reward == 0.0
    assert aggregate(SubScores(20, 20, 0, 0), GEOMETRIC).reward == 0.0


def test_limit_convention_at_alpha_extremes():
    only_pq = GEOMETRIC.with_overrides(alpha=0.0)
    only_sc = GEOMETRIC.with_overrides(alpha=1.0)
    assert aggregate(SubScores(0, 0, 20, 20), only_pq).reward == pytest.approx(20.0)
    assert aggregate(SubScores(20, 20, 0, 0), only_sc).reward == pytest.approx(20.0)


def test_normalize_flag():
    breakdown = aggregate(SubScores(10, 10, 10, 10), GEOMETRIC.with_overrides(normalize=True))
    assert breakdown.reward_normalized == pytest.approx(0.4)
    assert aggregate(SubScores(10, 10, 10, 10)).reward_normalized is None


def test_range_and_monotonicity_on_random_pairs():
    rng = random.Random(7)
    for _ in range(10000):
        cfg = rng.choice(ALL_STRATEGIES)
        base = SubScores(*(rng.uniform(0, 25) for _ in range(4)))
        name = rng.choice(SUB_SCORE_NAMES)
        higher = replace(base, **{name: rng.uniform(getattr(base, name), 25)})
        low, high = aggregate(base, cfg).reward, aggregate(higher, cfg).reward
        assert 0.0 <= low <= 25.0
        assert high >= low


def test_reward_reaches_max_only_at_full_scores():
    for cfg in ALL_STRATEGIES:
        assert aggregate(SubScores(25, 25, 25, 25), cfg).reward == pytest.approx(25.0)
        assert aggregate(SubScores(25, 24.9, 25, 25), cfg).reward < 25.0


# ---------------------------------------------------------------- sensitivity

def test_geometric_sensitivity_positive_at_centre():
    centre = SubScores(12.5, 12.5, 12.5, 12.5)
    for name in SUB_SCORE_NAMES:
        assert sensitivity(centre, GEOMETRIC, name, 1e-4) > 0


def test_bucket_min_sensitivity_examples():
    point = SubScores(10, 20, 15, 25)
    assert sensitivity(point, BUCKET, "s_con", 1e-4) == 0.0
    assert sensitivity(point, BUCKET, "s_if", 1e-4) == pytest.approx(
        math.sqrt(15) / (2 * math.sqrt(10)), abs=1e-4
    )


def test_sensitivity_probe_must_stay_in_range():
    with pytest.raises(DomainError):
        sensitivity(SubScores(0.0, 10, 10, 10), GEOMETRIC, "s_if", 1e-4)
    with pytest.raises(DomainError):
        sensitivity(SubScores(10, 10, 10, 10), GEOMETRIC, "s_total", 1e-4)


def test_sensitivity_dichotomy_on_random_points():
    rng = random.Random(99)
    h = 1e-4
    partner = {"s_if": "s_con", "s_con": "s_if", "s_nat": "s_art", "s_art": "s_nat"}
    for _ in range(1000):
        point = SubScores(*(rng.uniform(0.01, 24.99) for _ in range(4)))
        for name in SUB_SCORE_NAMES:
            assert sensitivity(point, GEOMETRIC, name, h) > 0
            gap = getattr(point, name) - getattr(point, partner[name])
            if gap > 2 * h:
                assert sensitivity(point, BUCKET, name, h) == 0.0


# ---------------------------------------------------------------- grid search

def test_lattice_uses_exact_steps():
    assert lattice(0.60, 0.95, 0.05) == [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
    with pytest.raises(ConfigInvalid):
        lattice(0.0, 1.0, 0.3)
    with pytest.raises(ConfigInvalid):
        lattice(0.9, 0.1, 0.1)


def test_grid_search_default_ranges_evaluate_64_cells():
    pairs = [(SubScores(20, 20, 20, 20), SubScores(10, 10, 10, 10))]
    result = grid_search(GridSearchSpec(pairs=pairs))
    assert result.cells_evaluated == 64
    assert len(result.surface) == 8 and all(len(row) == 8 for row in result.surface)


def test_dominating_pairs_pick_first_cell():
    rng = random.Random(5)
    pairs = []
    for _ in range(40):
        worse = SubScores(*(rng.uniform(0, 20) for _ in range(4)))
        better = SubScores(*(getattr(worse, n) + rng.uniform(0.5, 5) for n in SUB_SCORE_NAMES))
        pairs.append((better, worse))
    result = grid_search(GridSearchSpec(pairs=pairs))
    assert all(acc == 1.0 for row in result.surface for acc in row)
    assert (result.best.alpha, result.best.w_con) == (0.6, 0.4)
    assert result.best.w_if == pytest.approx(0.6)


def test_empty_validation_set():
    with pytest.raises(EmptyValidationSet):
        grid_search(GridSearchSpec(pairs=[]))


def brute_force_argmax(pairs):
    alphas = lattice(0.60, 0.95, 0.05)
    w_cons = lattice(0.40, 0.75, 0.05)
    scored = []
    for (i, alpha), (j, w_con) in itertools.product(enumerate(alphas), enumerate(w_cons)):
        cfg = cell_config(alpha, w_con)
        hits = sum(aggregate(b, cfg).reward > aggregate(w, cfg).reward for b, w in pairs)
        scored.append((-hits, i, j))
    _, i, j = min(scored)
    return alphas[i], w_cons[j]


def test_grid_search_matches_brute_force_on_random_sets():
    rng = random.Random(1234)
    for _ in range(50):
        pairs = [
            (
                SubScores(*(rng.uniform(0, 25) for _ in range(4))),
                SubScores(*(rng.uniform(0, 25) for _ in range(4))),
            )
            for _ in range(rng.randint(5, 30))
        ]
        result = grid_search(GridSearchSpec(pairs=pairs))
        assert (result.best.alpha, result.best.w_con) == brute_force_argmax(pairs)


def test_unique_best_cell_is_found():
    # better item wins on consistency, loses on instruction following: only heavy
    # w_con can rank these pairs correctly, and the PQ side is tied
    pairs = [(SubScores(10, 24, 15, 15), SubScores(21, 10, 15, 15))] * 3
    result = grid_search(GridSearchSpec(pairs=pairs))
    assert result.best_accuracy == 1.0
    assert pairwise_accuracy(pairs, cell_config(0.6, 0.4)) == 0.0
    assert (result.best.alpha, result.best.w_con) == brute_force_argmax(pairs)
