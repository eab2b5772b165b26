"""
Benchmark records: tiers, annotated samples and ranked evaluation groups.

Field names follow the benchmark JSONL format so records load directly with
``EvalGroup.model_validate(json.loads(line))``.
"""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TIER_DIMENSIONS = ("prompt_following", "quality", "overall")
NEEDS_REVIEW = "needs_review"


class BenchError(ValueError):
    error_code = "BenchError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class WrongBallotCount(BenchError):
    error_code = "WrongBallotCount"


class DuplicateAnnotator(BenchError):
    error_code = "DuplicateAnnotator"


class StrictOrderUnavailable(BenchError):
    error_code = "StrictOrderUnavailable"


class InsufficientPool(BenchError):
    error_code = "InsufficientPool"


class MissingScore(BenchError):
    error_code = "MissingScore"


class LengthMismatch(BenchError):
    error_code = "LengthMismatch"


class AllTied(BenchError):
    error_code = "AllTied"


class InvalidGroup(BenchError):
    error_code = "InvalidGroup"


class QualityTier(str, Enum):
    GOOD = "good"
    MEDIUM = "medium"
    BAD = "bad"

    @property
    def rank(self) -> int:
        return {"good": 3, "medium": 2, "bad": 1}[self.value]

    @classmethod
    def parse(cls, value: Any) -> "QualityTier":
        if isinstance(value, QualityTier):
            return value
        text = str(value).strip().lower()
        # "poor" in the main text and "bad" in the annotation guide are one tier
        if text == "poor":
            return cls.BAD
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown quality tier {value!r}; expected good/medium/bad")


class Category(str, Enum):
    GENERAL = "General"
    HUMAN_BASIC = "Human-Basic"
    HUMAN_FINE = "Human-Fine"

    @classmethod
    def parse(cls, value: Any) -> "Category":
        if isinstance(value, Category):
            return value
        key = str(value).strip().lower().replace("_", "-").replace(" ", "-")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown category {value!r}")


class TierTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    prompt_following: QualityTier
    quality: QualityTier
    overall: QualityTier

    @field_validator("prompt_following", "quality", "overall", mode="before")
    @classmethod
    def parse_tier(cls, value):
        return QualityTier.parse(value)

    def key(self, tie_break=("prompt_following", "quality")) -> tuple:
        return (self.overall.rank,) + tuple(getattr(self, name).rank for name in tie_break)

    def to_dict(self) -> Dict[str, str]:
        return {name: getattr(self, name).value for name in TIER_DIMENSIONS}


class AnnotationBallot(BaseModel):
    model_config = ConfigDict(frozen=True)

    annotator_id: str
    tiers: TierTriple


class BenchSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    sample_id: str
    model_id: str = ""
    instruction: str = ""
    source_ref: str = ""
    edited_ref: str = ""
    tiers: TierTriple
    category: Category = Category.GENERAL
    subtask: str = ""

    @field_validator("category", mode="before")
    @classmethod
    def parse_category(cls, value):
        return Category.parse(value)


class RankedSample(BenchSample):
    gold_rank: int = Field(ge=1)


class EvalGroup(BaseModel):
    model_config = ConfigDict(frozen=True)

    group_id: str
    size: int
    category: Category = Category.GENERAL
    instruction: str = ""
    samples: List[RankedSample]

    @field_validator("category", mode="before")
    @classmethod
    def parse_category(cls, value):
        return Category.parse(value)

    @model_validator(mode="after")
    def check_group(self):
        if self.size not in (2, 3, 4):
            raise ValueError(f"group size must be 2, 3 or 4, got {self.size}")
        if len(self.samples) != self.size:
            raise ValueError(f"group {self.group_id} declares size {self.size} but has {len(self.samples)} samples")
        if sorted(s.gold_rank for s in self.samples) != list(range(1, self.size + 1)):
            raise ValueError(f"gold ranks of group {self.group_id} are not a permutation of 1..{self.size}")
        if len({s.sample_id for s in self.samples}) != self.size:
            raise ValueError(f"group {self.group_id} repeats a sample id")
        sources = {s.source_ref for s in self.samples if s.source_ref}
        if len(sources) > 1:
            raise ValueError(f"group {self.group_id} mixes source images {sorted(sources)}")
        return self

    def gold_order(self) -> List[str]:
        return [s.sample_id for s in sorted(self.samples, key=lambda s: s.gold_rank)]

    def to_record(self) -> Dict[str, Any]:
        return {
            "group_id": self.group_id,
            "size": self.size,
            "category": self.category.value,
            "instruction": self.instruction,
            "samples": [
                {
                    "sample_id": s.sample_id,
                    "model_id": s.model_id,
                    "instruction": s.instruction,
                    "category": s.category.value,
                    "tiers": s.tiers.to_dict(),
                    "gold_rank": s.gold_rank,
                    "source_ref": s.source_ref,
                    "edited_ref": s.edited_ref,
                    "subtask": s.subtask,
                }
                for s in self.samples
            ],
        }


class ConsensusResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    # per dimension: a QualityTier value or NEEDS_REVIEW
    outcomes: Dict[str, str]
    votes: Dict[str, Dict[str, int]]

    @property
    def needs_review(self) -> bool:
        return any(outcome == NEEDS_REVIEW for outcome in self.outcomes.values())

    def tiers(self) -> Optional[TierTriple]:
        """Consensus labels, or None while any dimension awaits expert review"""
        if self.needs_review:
            return None
        return TierTriple(**self.outcomes)
