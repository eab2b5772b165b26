"""
Judge transcript parsing and serialization.

Judges wrap their JSON payload in prose or code fences, so the first balanced
top-level ``{...}`` block in the transcript is taken as the payload. All
functions are pure and safe to call from any thread.
"""

import json
import math
import re
from typing import Any, Dict, List, Optional, Tuple

from .errors import (
    RULE_ERRORS,
    DanglingBboxRef,
    DuplicateRegionId,
    InvalidBbox,
    MalformedPayload,
    MissingField,
    ScoreOutOfRange,
)
from .schema import (
    COORD_MAX,
    COORD_MIN,
    SCORE_MIN,
    STRICT,
    BoundingBox,
    EditRegion,
    ParseMode,
    ParseOptions,
    PqOutput,
    ScOutput,
    ScorePair,
)
from .tokens import (
    BboxRef,
    GlobalMark,
    bbox_token,
    referenced_ids,
    tokenize_reasoning,
    validate_refined_reasoning,
)


def find_balanced_object(raw: str) -> Optional[str]:
    """Return the first balanced top-level {...} block, honouring JSON strings"""
    start = raw.find("{")
    if start == -1:
        return None
    depth = 0
    in_string = False
    escaped = False
    for index in range(start, len(raw)):
        char = raw[index]
        if in_string:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
            continue
        if char == '"':
            in_string = True
        elif char == "{":
            depth += 1
        elif char == "}":
            depth -= 1
            if depth == 0:
                return raw[start:index + 1]
    return None


def extract_payload(raw: str) -> Dict[str, Any]:
    if not isinstance(raw, str):
        raise MalformedPayload("judge output must be text", raw_text=str(raw))
    block = find_balanced_object(raw)
    if block is None:
        raise MalformedPayload("no balanced JSON object found in judge output", raw_text=raw)
    try:
        payload = json.loads(block)
    except json.JSONDecodeError as e:
        raise MalformedPayload(f"payload is not valid JSON: {e}", raw_text=raw)
    if not isinstance(payload, dict):
        raise MalformedPayload("payload is not a JSON object", raw_text=raw)
    return payload


def _require(payload: Dict[str, Any], key: str, raw: str) -> Any:
    if key not in payload:
        raise MissingField(f"'{key}' is missing from the judge payload", raw_text=raw)
    return payload[key]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _parse_scores(value: Any, opts: ParseOptions, raw: str) -> ScorePair:
    if not isinstance(value, list) or len(value) != 2 or not all(_is_number(v) for v in value):
        raise MalformedPayload("'score' must be a list of two numbers", raw_text=raw)

    components = []
    clamped = False
    for position, score in enumerate(value):
        score = float(score)
        if math.isnan(score):
            raise ScoreOutOfRange(f"score[{position}] is NaN", raw_text=raw)
        if score < SCORE_MIN or score > opts.scale_max:
            if opts.mode == ParseMode.STRICT:
                raise ScoreOutOfRange(
                    f"score[{position}]={score} outside [0, {opts.scale_max:g}]", raw_text=raw
                )
            score = min(max(score, SCORE_MIN), opts.scale_max)
            clamped = True
        components.append(score)
    return ScorePair(components[0], components[1], clamped=clamped)


def _parse_region_id(value: Any, raw: str) -> int:
    # grounding prompts ask for "id": "0~n", so digit strings are accepted too
    if isinstance(value, str) and value.strip().isdigit():
        return int(value.strip())
    if isinstance(value, int) and not isinstance(value, bool) and value >= 0:
        return value
    if isinstance(value, float) and value.is_integer() and value >= 0:
        return int(value)
    raise MalformedPayload(f"region id {value!r} is not a non-negative integer", raw_text=raw)


def _parse_coordinate(value: Any, raw: str) -> int:
    if not _is_number(value):
        raise InvalidBbox(f"bbox coordinate {value!r} is not a number", raw_text=raw)
    if isinstance(value, float):
        if not value.is_integer():
            raise InvalidBbox(f"bbox coordinate {value} is not an integer", raw_text=raw)
        value = int(value)
    return value


def parse_bbox(value: Any, raw: str = "") -> BoundingBox:
    if not isinstance(value, list) or len(value) != 4:
        raise InvalidBbox("'bbox_2d' must be a list of four coordinates", raw_text=raw)
    x1, y1, x2, y2 = (_parse_coordinate(v, raw) for v in value)
    for coordinate in (x1, y1, x2, y2):
        if coordinate < COORD_MIN or coordinate > COORD_MAX:
            raise InvalidBbox(f"bbox {value} leaves the [0, 1000] grid", raw_text=raw)
    if x1 >= x2 or y1 >= y2:
        raise InvalidBbox(f"bbox {value} is not ordered (need x1 < x2 and y1 < y2)", raw_text=raw)
    return BoundingBox(x1, y1, x2, y2)


def parse_regions(value: Any, raw: str = "") -> Tuple[EditRegion, ...]:
    if not isinstance(value, list):
        raise MalformedPayload("'edit_region' must be a list", raw_text=raw)

    regions: List[EditRegion] = []
    seen = set()
    for entry in value:
        if not isinstance(entry, dict):
            raise MalformedPayload("each edit_region entry must be an object", raw_text=raw)
        for key in ("id", "label", "bbox_2d"):
            _require(entry, key, raw)
        region_id = _parse_region_id(entry["id"], raw)
        label = entry["label"]
        if not isinstance(label, str) or not label.strip():
            raise MalformedPayload(f"region {region_id} has an empty label", raw_text=raw)
        if region_id in seen:
            raise DuplicateRegionId(f"region id {region_id} appears more than once", raw_text=raw)
        seen.add(region_id)
        regions.append(EditRegion(region_id, label, parse_bbox(entry["bbox_2d"], raw)))
    return tuple(regions)


def _parse_reasoning(payload: Dict[str, Any], raw: str) -> str:
    reasoning = _require(payload, "reasoning", raw)
    if not isinstance(reasoning, str):
        raise MalformedPayload("'reasoning' must be a string", raw_text=raw)
    return reasoning


def parse_sc_output(raw: str, opts: ParseOptions = STRICT) -> ScOutput:
    """
    Parse an SC judge transcript into a validated ScOutput.

    The same shape serves the single-source and the multi-image SC prompts.
    With ``opts.refined`` the refinement rules (exactly one <|global|>, every
    region cited) are enforced as well.
    """
    payload = extract_payload(raw)
    regions = parse_regions(_require(payload, "edit_region", raw), raw)
    reasoning = _parse_reasoning(payload, raw)
    scores = _parse_scores(_require(payload, "score", raw), opts, raw)

    declared = {region.id for region in regions}
    for region_id in referenced_ids(tokenize_reasoning(reasoning)):
        if region_id not in declared:
            raise DanglingBboxRef(f"{bbox_token(region_id)} cites an undeclared region", raw_text=raw)

    if opts.refined:
        report = validate_refined_reasoning(reasoning, list(regions))
        if not report.passed:
            violation = report.violations[0]
            raise RULE_ERRORS[violation.rule](violation.detail, raw_text=raw)

    return ScOutput(regions=regions, reasoning=reasoning, scores=scores)


def parse_pq_output(raw: str, opts: ParseOptions = STRICT) -> PqOutput:
    """Parse a PQ judge transcript (edited image only, no spatial tokens)"""
    payload = extract_payload(raw)
    reasoning = _parse_reasoning(payload, raw)
    scores = _parse_scores(_require(payload, "score", raw), opts, raw)

    for token in tokenize_reasoning(reasoning):
        if isinstance(token, BboxRef):
            raise DanglingBboxRef(f"{token.render()} in PQ reasoning, which has no regions", raw_text=raw)
        if isinstance(token, GlobalMark):
            raise MalformedPayload("PQ reasoning must not contain spatial tokens", raw_text=raw)

    return PqOutput(reasoning=reasoning, scores=scores)


def serialize_sc(out: ScOutput) -> str:
    payload = {
        "edit_region": [region.to_dict() for region in out.regions],
        "reasoning": out.reasoning,
        "score": out.scores.as_list(),
    }
    return json.dumps(payload, ensure_ascii=False)


def serialize_pq(out: PqOutput) -> str:
    return json.dumps({"reasoning": out.reasoning, "score": out.scores.as_list()}, ensure_ascii=False)


def parse_grounding_output(raw: str, expected_count: Optional[int] = None) -> Tuple[EditRegion, ...]:
    """Parse the grounding-stage answer ({"edit_region": [...]}) into regions"""
    payload = extract_payload(raw)
    regions = parse_regions(_require(payload, "edit_region", raw), raw)
    if expected_count is not None and len(regions) != expected_count:
        raise MalformedPayload(
            f"expected {expected_count} region(s), grounding returned {len(regions)}", raw_text=raw
        )
    return regions


CHECK_RESULT_PATTERN = re.compile(r"check_result\s*:\s*(true|false)", re.IGNORECASE)


def parse_refinement_output(raw: str) -> Tuple[bool, str]:
    """
    Parse the consistency-check answer.

    Returns (check_result, refined_text); refined_text is empty when the
    check failed.
    """
    match = CHECK_RESULT_PATTERN.search(raw or "")
    if match is None:
        raise MissingField("'check_result' line is missing", raw_text=raw)
    if match.group(1).lower() == "false":
        return False, ""
    refined = raw[match.end():].strip()
    if not refined:
        raise MissingField("check_result is true but no refined reasoning follows", raw_text=raw)
    return True, refined


__all__ = [
    "extract_payload",
    "find_balanced_object",
    "parse_bbox",
    "parse_regions",
    "parse_sc_output",
    "parse_pq_output",
    "serialize_sc",
    "serialize_pq",
    "parse_grounding_output",
    "parse_refinement_output",
]
