"""
Spatial-token grammar for judge reasoning.

Token syntax is exact: ``<|bbox_`` + decimal digits + ``|>`` and ``<|global|>``.
Anything else, including near-misses such as ``<|bbox_x|>``, stays text.
"""

import re
from dataclasses import dataclass, field
from typing import Iterable, List, Union

from .schema import EditRegion

TOKEN_PATTERN = re.compile(r"<\|bbox_(\d+)\|>|<\|global\|>")
GLOBAL_TOKEN = "<|global|>"


def bbox_token(region_id: int) -> str:
    return f"<|bbox_{region_id}|>"


@dataclass(frozen=True)
class TextSpan:
    text: str

    def render(self) -> str:
        return self.text


@dataclass(frozen=True)
class BboxRef:
    id: int
    # original digits, so "<|bbox_007|>" renders back unchanged
    digits: str = field(default="", compare=False)

    def render(self) -> str:
        return f"<|bbox_{self.digits or self.id}|>"


@dataclass(frozen=True)
class GlobalMark:
    def render(self) -> str:
        return GLOBAL_TOKEN


ReasoningToken = Union[TextSpan, BboxRef, GlobalMark]


def tokenize_reasoning(reasoning: str) -> List[ReasoningToken]:
    """Split reasoning into a lossless stream of text spans and spatial tokens"""
    tokens: List[ReasoningToken] = []
    cursor = 0
    for match in TOKEN_PATTERN.finditer(reasoning):
        if match.start() > cursor:
            tokens.append(TextSpan(reasoning[cursor:match.start()]))
        digits = match.group(1)
        if digits is None:
            tokens.append(GlobalMark())
        else:
            tokens.append(BboxRef(int(digits), digits))
        cursor = match.end()
    if cursor < len(reasoning):
        tokens.append(TextSpan(reasoning[cursor:]))
    return tokens


def render_tokens(tokens: Iterable[ReasoningToken]) -> str:
    return "".join(token.render() for token in tokens)


def referenced_ids(tokens: Iterable[ReasoningToken]) -> List[int]:
    return [token.id for token in tokens if isinstance(token, BboxRef)]


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def rules(self) -> List[str]:
        return [v.rule for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [{"rule": v.rule, "detail": v.detail} for v in self.violations],
        }


def validate_refined_reasoning(reasoning: str, regions: List[EditRegion]) -> ValidationReport:
    """
    Check the refinement-stage rules on a reasoning string.

    Passes iff there is exactly one <|global|>, every region id is cited at
    least once and no citation points at an undeclared id. With no regions,
    no bbox token may appear at all. Only presence and coverage are checked,
    not token position.
    """
    tokens = tokenize_reasoning(reasoning)
    violations: List[Violation] = []

    global_count = sum(1 for token in tokens if isinstance(token, GlobalMark))
    if global_count != 1:
        violations.append(Violation(
            "GlobalTokenCount", f"expected exactly one {GLOBAL_TOKEN}, found {global_count}"
        ))

    cited = referenced_ids(tokens)
    declared = [region.id for region in regions]

    if not declared:
        if cited:
            violations.append(Violation(
                "BboxRefWithoutRegions",
                f"edit_region is empty but {len(cited)} bbox token(s) were inserted",
            ))
        return ValidationReport(tuple(violations))

    declared_set = set(declared)
    for region_id in declared:
        if region_id not in cited:
            violations.append(Violation("UncoveredRegion", f"region {region_id} is never cited"))

    for region_id in sorted(set(cited) - declared_set):
        violations.append(Violation("DanglingBboxRef", f"{bbox_token(region_id)} has no region"))

    return ValidationReport(tuple(violations))
