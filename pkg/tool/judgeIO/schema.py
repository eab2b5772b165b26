"""
Value types for structured judge outputs.

The SC stream yields regions (B), interleaved reasoning (T) and the pair
[s_if, s_con]; the PQ stream yields plain reasoning and [s_nat, s_art].
All types are frozen so they can be shared across threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

COORD_MIN = 0
COORD_MAX = 1000
SCORE_MIN = 0.0
SCORE_MAX = 25.0


class ParseMode(str, Enum):
    STRICT = "strict"
    CLAMP = "clamp"


@dataclass(frozen=True)
class BoundingBox:
    x1: int
    y1: int
    x2: int
    y2: int

    def as_list(self) -> List[int]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class EditRegion:
    id: int
    label: str
    bbox: BoundingBox

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label, "bbox_2d": self.bbox.as_list()}


@dataclass(frozen=True)
class ScorePair:
    first: float
    second: float
    # set when Clamp mode pulled a component back into range
    clamped: bool = field(default=False, compare=False)

    def as_list(self) -> List[float]:
        return [self.first, self.second]


@dataclass(frozen=True)
class ScOutput:
    regions: Tuple[EditRegion, ...]
    reasoning: str
    scores: ScorePair

    @property
    def s_if(self) -> float:
        return self.scores.first

    @property
    def s_con(self) -> float:
        return self.scores.second


@dataclass(frozen=True)
class PqOutput:
    reasoning: str
    scores: ScorePair

    @property
    def s_nat(self) -> float:
        return self.scores.first

    @property
    def s_art(self) -> float:
        return self.scores.second


@dataclass(frozen=True)
class ParseOptions:
    mode: ParseMode = ParseMode.STRICT
    # only consumed by prompt assembly; parsing is identical for the multi-image variant
    multi_image_input_count: Optional[int] = None
    # additionally enforce the refined-reasoning rules (one <|global|>, full bbox coverage)
    refined: bool = False
    scale_max: float = SCORE_MAX

    def __post_init__(self):
        if self.multi_image_input_count is not None and self.multi_image_input_count < 1:
            raise ValueError("multi_image_input_count must be a positive integer")
        if not self.scale_max > 0:
            raise ValueError("scale_max must be positive")


STRICT = ParseOptions()
CLAMP = ParseOptions(mode=ParseMode.CLAMP)
