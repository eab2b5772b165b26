"""
Wire models for reward scoring: requests, backend specs, responses and batch plans.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Optional
from urllib.parse import urlparse

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..judgeIO.schema import EditRegion, ScorePair
from ..rewardAgg.schema import ConfigInvalid, RewardBreakdown


class ServiceError(Exception):
    error_code = "ServiceError"
    http_status = 500

    def __init__(self, message: str, request_id: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.request_id = request_id

    def to_dict(self) -> Dict[str, Any]:
        return {"error_code": self.error_code, "message": self.message, "request_id": self.request_id}


class BackendUnavailable(ServiceError):
    error_code = "BackendUnavailable"
    http_status = 503


class JudgeOutputInvalid(ServiceError):
    error_code = "JudgeOutputInvalid"
    http_status = 502

    def __init__(self, message: str, raw_text: str = "", request_id: Optional[str] = None, cause_code: str = ""):
        super().__init__(message, request_id)
        self.raw_text = raw_text
        # the judge-io error class that rejected the transcript
        self.cause_code = cause_code

    def to_dict(self) -> Dict[str, Any]:
        body = super().to_dict()
        body["cause"] = self.cause_code
        body["raw_text"] = self.raw_text
        return body


class BindFailure(ServiceError):
    error_code = "BindFailure"


class BadRequest(ServiceError):
    error_code = "BadRequest"
    http_status = 400


class ScoreMode(str, Enum):
    SC = "sc"
    PQ = "pq"
    FULL = "full"

    @classmethod
    def parse(cls, value: Any) -> "ScoreMode":
        if isinstance(value, ScoreMode):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"mode must be one of sc/pq/full, got {value!r}")

    @property
    def needs_sc(self) -> bool:
        return self in (ScoreMode.SC, ScoreMode.FULL)

    @property
    def needs_pq(self) -> bool:
        return self in (ScoreMode.PQ, ScoreMode.FULL)


class RewardRequest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    request_id: str = ""
    instruction: str = ""
    source_refs: List[str] = Field(default_factory=list)
    edited_ref: str
    mode: ScoreMode = ScoreMode.FULL
    # partial AggregationConfig fields, merged over the service config at scoring time
    config_override: Optional[Dict[str, Any]] = None

    @field_validator("mode", mode="before")
    @classmethod
    def parse_mode(cls, value):
        return ScoreMode.parse(value)

    @model_validator(mode="after")
    def check_sources(self):
        if not self.edited_ref:
            raise ValueError("edited_ref must be a non-empty image reference")
        if self.mode.needs_sc and not self.source_refs:
            raise ValueError(f"mode {self.mode.value} needs at least one source_ref")
        if self.mode.needs_sc and not self.instruction.strip():
            raise ValueError(f"mode {self.mode.value} needs an editing instruction")
        return self


class JudgeBackendSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["mock", "remote"] = "mock"
    seed: int = 0
    endpoint: str = ""
    model: str = ""
    timeout: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=3, ge=0)
    # send local files as base64 data URLs instead of bare references
    inline_images: bool = False
    api_key: str = Field(default="", repr=False)

    @model_validator(mode="after")
    def check_remote(self):
        if self.kind == "remote":
            parsed = urlparse(self.endpoint)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise ValueError(f"remote endpoint must be an http(s) URL, got {self.endpoint!r}")
        return self

    def describe(self) -> str:
        if self.kind == "mock":
            return f"mock(seed={self.seed})"
        return f"remote({self.endpoint}, model={self.model or '-'}, key configured: {'yes' if self.api_key else 'no'})"


@dataclass
class StageTiming:
    sc_ms: Optional[float] = None
    pq_ms: Optional[float] = None
    aggregate_ms: Optional[float] = None
    total_ms: float = 0.0

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {"sc_ms": self.sc_ms, "pq_ms": self.pq_ms, "aggregate_ms": self.aggregate_ms, "total_ms": self.total_ms}


@dataclass
class RewardResponse:
    request_id: str
    mode: ScoreMode
    breakdown: Optional[RewardBreakdown] = None
    sc_scores: Optional[ScorePair] = None
    pq_scores: Optional[ScorePair] = None
    regions: List[EditRegion] = field(default_factory=list)
    sc_reasoning: str = ""
    pq_reasoning: str = ""
    timing: StageTiming = field(default_factory=StageTiming)

    @property
    def reward(self) -> Optional[float]:
        return self.breakdown.reward if self.breakdown else None

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            "request_id": self.request_id,
            "mode": self.mode.value,
            "reward": self.reward,
            "breakdown": self.breakdown.to_dict() if self.breakdown else None,
            "sc_scores": [self.sc_scores.first, self.sc_scores.second] if self.sc_scores else None,
            "pq_scores": [self.pq_scores.first, self.pq_scores.second] if self.pq_scores else None,
            "regions": [region.to_dict() for region in self.regions],
            "sc_reasoning": self.sc_reasoning,
            "pq_reasoning": self.pq_reasoning,
        }
        if include_timing:
            body["timing"] = self.timing.to_dict()
        return body


@dataclass(frozen=True)
class BatchPlan:
    # prefix_key -> request ids in input order; keys in first-seen order
    groups: Dict[str, List[str]]

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group_count": self.group_count,
            "groups": [{"prefix_key": key, "request_ids": ids} for key, ids in self.groups.items()],
        }


__all__ = [
    "ServiceError",
    "BackendUnavailable",
    "JudgeOutputInvalid",
    "BindFailure",
    "BadRequest",
    "ConfigInvalid",
    "ScoreMode",
    "RewardRequest",
    "JudgeBackendSpec",
    "StageTiming",
    "RewardResponse",
    "BatchPlan",
]
