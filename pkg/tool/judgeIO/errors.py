"""
Exception classes raised while reading judge transcripts.

Every class carries a stable ``error_code`` equal to its class name so the
CLI and the HTTP layer can report per-error counts without string matching.
"""

from typing import Optional


class JudgeOutputError(ValueError):
    """Base class for every judge transcript failure"""

    error_code = "JudgeOutputError"

    def __init__(self, message: str, raw_text: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.raw_text = raw_text

    def to_dict(self) -> dict:
        return {"error_code": self.error_code, "message": self.message}


class MalformedPayload(JudgeOutputError):
    error_code = "MalformedPayload"


class MissingField(JudgeOutputError):
    error_code = "MissingField"


class ScoreOutOfRange(JudgeOutputError):
    error_code = "ScoreOutOfRange"


class InvalidBbox(JudgeOutputError):
    error_code = "InvalidBbox"


class DuplicateRegionId(JudgeOutputError):
    error_code = "DuplicateRegionId"


class DanglingBboxRef(JudgeOutputError):
    error_code = "DanglingBboxRef"


# Refined-reasoning rules, only raised when ParseOptions.refined is set
class GlobalTokenCount(JudgeOutputError):
    error_code = "GlobalTokenCount"


class UncoveredRegion(JudgeOutputError):
    error_code = "UncoveredRegion"


class BboxRefWithoutRegions(JudgeOutputError):
    error_code = "BboxRefWithoutRegions"


RULE_ERRORS = {
    "GlobalTokenCount": GlobalTokenCount,
    "UncoveredRegion": UncoveredRegion,
    "DanglingBboxRef": DanglingBboxRef,
    "BboxRefWithoutRegions": BboxRefWithoutRegions,
}
