"""
Attention-collapse diagnostics over exported judge attention maps.

Raw per-layer/per-head maps are pooled onto a 24x24 probability grid, then
summarized per sample (entropy gap, source entropy, top-10% concentration)
and across samples (mean pairwise Pearson correlation of source grids).
"""

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from langsmith import traceable

GRID_SIDE = 24
GRID_CELLS = GRID_SIDE * GRID_SIDE
TOP_FRACTION = 0.10
TOP_K = math.ceil(TOP_FRACTION * GRID_CELLS)  # 58
MAX_ENTROPY = math.log(GRID_CELLS)
SUM_TOLERANCE = 1e-9
# pooling a uniform map leaves rounding noise well below this spread
CONSTANT_TOLERANCE = 1e-15


class AttentionError(ValueError):
    error_code = "AttentionError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class EmptyInput(AttentionError):
    error_code = "EmptyInput"


class AllZeroMap(AttentionError):
    error_code = "AllZeroMap"


class InvalidAttentionMap(AttentionError):
    error_code = "InvalidAttentionMap"


class ZeroVariance(AttentionError):
    error_code = "ZeroVariance"


class TooFewSamples(AttentionError):
    error_code = "TooFewSamples"


class AllPairsExcluded(AttentionError):
    error_code = "AllPairsExcluded"


@dataclass(frozen=True)
class AttentionMapRaw:
    shape: Tuple[int, int]
    weights: Sequence[float]

    def to_array(self) -> np.ndarray:
        h, w = self.shape
        if h <= 0 or w <= 0:
            raise InvalidAttentionMap(f"map shape must be positive, got {self.shape}")
        values = np.asarray(self.weights, dtype=np.float64)
        if values.size != h * w:
            raise InvalidAttentionMap(f"map declares {h}x{w} but carries {values.size} weights")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidAttentionMap("attention weights must be finite and non-negative")
        if not np.any(values > 0):
            raise AllZeroMap("attention map has no positive weight")
        return values.reshape(h, w)


@dataclass(frozen=True, eq=False)
class AttentionGrid:
    """Row-major 24x24 distribution, stored flat"""

    cells: np.ndarray

    @classmethod
    def from_cells(cls, cells: Sequence[float]) -> "AttentionGrid":
        values = np.asarray(cells, dtype=np.float64).reshape(-1)
        if values.size != GRID_CELLS:
            raise InvalidAttentionMap(f"a grid needs {GRID_CELLS} cells, got {values.size}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidAttentionMap("grid cells must be finite and non-negative")
        if abs(values.sum() - 1.0) > SUM_TOLERANCE:
            raise InvalidAttentionMap(f"grid must sum to 1, got {values.sum():.12f}")
        return cls(values)

    @classmethod
    def uniform(cls) -> "AttentionGrid":
        return cls(np.full(GRID_CELLS, 1.0 / GRID_CELLS))

    def as_matrix(self) -> np.ndarray:
        return self.cells.reshape(GRID_SIDE, GRID_SIDE)


@dataclass(frozen=True)
class SamplePair:
    sample_id: str
    source: AttentionGrid
    edited: AttentionGrid


def _overlap_matrix(length: int) -> np.ndarray:
    """
    (24, length) matrix: entry [i, r] is the fraction of source cell r lying
    inside output interval i. Columns sum to 1, so pooling preserves mass.
    """
    edges = np.linspace(0.0, float(length), GRID_SIDE + 1)
    starts = np.arange(length, dtype=np.float64)
    lo = np.maximum(edges[:-1, None], starts[None, :])
    hi = np.minimum(edges[1:, None], starts[None, :] + 1.0)
    return np.clip(hi - lo, 0.0, None)


def _pool(matrix: np.ndarray) -> np.ndarray:
    h, w = matrix.shape
    normalized = matrix / matrix.sum()
    return _overlap_matrix(h) @ normalized @ _overlap_matrix(w).T


def pool_to_grid(maps: Sequence[AttentionMapRaw]) -> AttentionGrid:
    """Normalize each map, area-pool it to 24x24, average and renormalize"""
    if not maps:
        raise EmptyInput("pool_to_grid needs at least one attention map")
    pooled = np.mean([_pool(raw.to_array()) for raw in maps], axis=0)
    total = pooled.sum()
    if total <= 0:
        raise AllZeroMap("pooled attention carries no mass")
    return AttentionGrid((pooled / total).reshape(-1))


def shannon_entropy(grid: AttentionGrid) -> float:
    """Natural-log entropy with 0 * ln 0 taken as 0"""
    positive = grid.cells[grid.cells > 0]
    return float(-np.sum(positive * np.log(positive)))


def entropy_gap(pair: SamplePair) -> float:
    return abs(shannon_entropy(pair.source) - shannon_entropy(pair.edited))


def concentration_index(grid: AttentionGrid) -> float:
    """Probability mass on the top ceil(10%) cells"""
    top = np.sort(grid.cells)[::-1][:TOP_K]
    return float(top.sum())


def is_constant(cells: np.ndarray) -> bool:
    return float(np.ptp(cells)) <= CONSTANT_TOLERANCE


def pearson(a: AttentionGrid, b: AttentionGrid) -> float:
    if is_constant(a.cells) or is_constant(b.cells):
        raise ZeroVariance("pearson correlation is undefined for a constant grid")
    x = a.cells - a.cells.mean()
    y = b.cells - b.cells.mean()
    sx = float(np.sqrt(np.dot(x, x)))
    sy = float(np.sqrt(np.dot(y, y)))
    return float(np.clip(np.dot(x, y) / (sx * sy), -1.0, 1.0))


def inter_sample_correlation(sources: Sequence[AttentionGrid]) -> Tuple[float, float, int]:
    """
    Mean and population std of pearson over all unordered pairs.
    Pairs with a constant grid are skipped and counted.
    """
    if len(sources) < 2:
        raise TooFewSamples(f"correlation needs at least two grids, got {len(sources)}")

    matrix = np.stack([grid.cells for grid in sources])
    centered = matrix - matrix.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    valid = np.ptp(matrix, axis=1) > CONSTANT_TOLERANCE

    n = len(sources)
    n_valid = int(valid.sum())
    total_pairs = n * (n - 1) // 2
    kept_pairs = n_valid * (n_valid - 1) // 2
    excluded = total_pairs - kept_pairs
    if kept_pairs == 0:
        raise AllPairsExcluded(f"all {total_pairs} pairs involve a constant grid")

    unit = centered[valid] / norms[valid, None]
    rho = np.clip(unit @ unit.T, -1.0, 1.0)
    upper = rho[np.triu_indices(n_valid, k=1)]
    return float(upper.mean()), float(upper.std()), excluded


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "MetricSummary":
        array = np.asarray(values, dtype=np.float64)
        return cls(float(array.mean()), float(array.std()))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class DiagnosticsReport:
    n: int
    gap: MetricSummary
    source_entropy: MetricSummary
    concentration: MetricSummary
    # None when fewer than two source grids are non-constant
    stability: Optional[MetricSummary]
    excluded_pairs: int
    evaluated_pairs: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gap": self.gap.to_dict(),
            "source_entropy": self.source_entropy.to_dict(),
            "concentration": self.concentration.to_dict(),
            "stability": self.stability.to_dict() if self.stability else None,
            "excluded_pairs": self.excluded_pairs,
            "evaluated_pairs": self.evaluated_pairs,
        }


@traceable(name="diagnose_corpus", metadata={"tool": "attention_diagnostics"})
def diagnose_corpus(pairs: Sequence[SamplePair]) -> DiagnosticsReport:
    if not pairs:
        raise EmptyInput("diagnose_corpus needs at least one sample pair")

    sources = [pair.source for pair in pairs]
    total_pairs = len(pairs) * (len(pairs) - 1) // 2
    stability: Optional[MetricSummary] = None
    excluded = total_pairs
    try:
        mean, std, excluded = inter_sample_correlation(sources)
        stability = MetricSummary(mean, std)
    except (TooFewSamples, AllPairsExcluded) as e:
        print(f"⚠️ Stability not reported: {e.message}")

    return DiagnosticsReport(
        n=len(pairs),
        gap=MetricSummary.of([entropy_gap(pair) for pair in pairs]),
        source_entropy=MetricSummary.of([shannon_entropy(grid) for grid in sources]),
        concentration=MetricSummary.of([concentration_index(grid) for grid in sources]),
        stability=stability,
        excluded_pairs=excluded,
        evaluated_pairs=total_pairs - excluded,
    )


def _grid_from_record(record: dict, side: str) -> AttentionGrid:
    pooled_key = f"{side}_grid"
    if pooled_key in record:
        return AttentionGrid.from_cells(record[pooled_key])
    entry = record[side]
    h, w = entry["shape"]
    return pool_to_grid([AttentionMapRaw((int(h), int(w)), weights) for weights in entry["maps"]])


def load_attention_corpus(path: str) -> List[SamplePair]:
    """
    JSONL records with raw maps ({"source": {"shape", "maps"}, "edited": ...})
    or pre-pooled grids ({"source_grid": [...], "edited_grid": [...]})
    """
    pairs: List[SamplePair] = []
    with open(Path(path), "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, 1):
            if not line.strip():
                continue
            record = json.loads(line)
            try:
                pairs.append(SamplePair(
                    sample_id=str(record.get("sample_id", line_number)),
                    source=_grid_from_record(record, "source"),
                    edited=_grid_from_record(record, "edited"),
                ))
            except KeyError as e:
                raise InvalidAttentionMap(f"{path}:{line_number}: missing field {e}")
    return pairs


__all__ = [
    "AttentionMapRaw",
    "AttentionGrid",
    "SamplePair",
    "DiagnosticsReport",
    "pool_to_grid",
    "shannon_entropy",
    "entropy_gap",
    "concentration_index",
    "pearson",
    "inter_sample_correlation",
    "diagnose_corpus",
    "load_attention_corpus",
]
