"""
Deterministic mock judge.

Every value in a mock transcript is drawn from a 64-bit BLAKE2b hash lane of
(instruction, image refs, seed, lane name), so identical inputs always yield
byte-identical transcripts. Sub-scores are integers in [0, 25].
"""

import hashlib
import json
import re
from typing import List, Optional, Sequence

from langsmith import traceable

from ..judgeIO.index import parse_regions, serialize_pq, serialize_sc
from ..judgeIO.schema import BoundingBox, EditRegion, PqOutput, ScOutput, ScorePair
from ..judgeIO.tokens import GLOBAL_TOKEN, bbox_token
from .prompts import (
    GROUNDING_TEMPLATE,
    PQ_REASONING_TEMPLATE,
    PQ_TEMPLATE,
    REFINEMENT_TEMPLATE,
    instruction_from_prompt,
)

SCORE_LEVELS = 26  # integers 0..25
MAX_MOCK_REGIONS = 3
BOX_NUM_PATTERN = re.compile(r"\*\*Number of Edit Regions\*\*: (\d+)")
LABELS = ("subject", "background", "object", "garment", "sky", "face", "text sign", "lighting")


def hash_lane(instruction: str, refs: Sequence[str], seed: int, lane: str) -> int:
    material = json.dumps([instruction, list(refs), int(seed), lane], ensure_ascii=False, separators=(",", ":"))
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _mock_regions(instruction: str, refs: Sequence[str], seed: int, count: Optional[int] = None) -> List[EditRegion]:
    if count is None:
        count = hash_lane(instruction, refs, seed, "region_count") % (MAX_MOCK_REGIONS + 1)
    regions: List[EditRegion] = []
    for region_id in range(count):
        h = hash_lane(instruction, refs, seed, f"region_{region_id}")
        x1 = h % 900
        y1 = (h >> 10) % 900
        x2 = x1 + 1 + (h >> 20) % (1000 - x1)
        y2 = y1 + 1 + (h >> 30) % (1000 - y1)
        label = LABELS[(h >> 40) % len(LABELS)]
        regions.append(EditRegion(id=region_id, label=label, bbox=BoundingBox(x1, y1, x2, y2)))
    return regions


def _score_pair(instruction: str, refs: Sequence[str], seed: int, prefix: str) -> ScorePair:
    return ScorePair(
        hash_lane(instruction, refs, seed, f"{prefix}_first") % SCORE_LEVELS,
        hash_lane(instruction, refs, seed, f"{prefix}_second") % SCORE_LEVELS,
    )


def _grounded_reasoning(regions: Sequence[EditRegion]) -> str:
    """One sentence per region then exactly one global sentence"""
    if not regions:
        return f"The two images look identical, so the edit was not applied. {GLOBAL_TOKEN} The source is fully preserved."
    sentences = [f"The {bbox_token(r.id)}{r.label} shows the requested change." for r in regions]
    sentences.append(f"{GLOBAL_TOKEN} The rest of the image is preserved.")
    return " ".join(sentences)


def mock_sc_output(instruction: str, refs: Sequence[str], seed: int) -> ScOutput:
    regions = _mock_regions(instruction, refs, seed)
    return ScOutput(
        regions=tuple(regions),
        reasoning=_grounded_reasoning(regions),
        scores=_score_pair(instruction, refs, seed, "sc"),
    )


def mock_pq_output(refs: Sequence[str], seed: int) -> PqOutput:
    scores = _score_pair("", refs, seed, "pq")
    return PqOutput(
        reasoning=f"Naturalness rated {scores.first}/25 and artifacts {scores.second}/25.",
        scores=scores,
    )


def _regions_in_refinement_prompt(prompt: str) -> List[EditRegion]:
    """The region list appended after the template (its last edit_region line)"""
    marker = "- edit_region: "
    start = prompt.rfind(marker)
    if start == -1:
        return []
    line = prompt[start + len(marker):].split("\n", 1)[0]
    return list(parse_regions(json.loads(line)))


@traceable(name="mock_judge", metadata={"backend": "mock"})
def mock_judge(prompt: str, refs: Sequence[str], seed: int) -> str:
    """
    Answer an assembled prompt with a schema-conformant transcript.

    The answer shape follows the prompt: SC prompts get regions, grounded
    reasoning and scores; PQ prompts get plain reasoning and scores; the
    data-construction prompts get grounding or consistency-check answers.
    """
    if prompt in (PQ_TEMPLATE, PQ_REASONING_TEMPLATE):
        return serialize_pq(mock_pq_output(refs, seed))

    if prompt.startswith(GROUNDING_TEMPLATE.split("\n", 1)[0]):
        match = BOX_NUM_PATTERN.search(prompt)
        regions = _mock_regions(prompt, refs, seed, int(match.group(1)) if match else None)
        return json.dumps({"edit_region": [r.to_dict() for r in regions]}, ensure_ascii=False)

    if prompt.startswith(REFINEMENT_TEMPLATE[:80]):
        regions = _regions_in_refinement_prompt(prompt)
        return "check_result: true\n" + _grounded_reasoning(regions)

    instruction = instruction_from_prompt(prompt)
    if '"edit_region"' in prompt:
        return serialize_sc(mock_sc_output(instruction, refs, seed))

    # reasoning-generation prompts: reasoning and scores without regions
    scores = _score_pair(instruction, refs, seed, "sc")
    return json.dumps(
        {"reasoning": "The instruction is followed and the layout is preserved.", "score": scores.as_list()},
        ensure_ascii=False,
    )


__all__ = ["mock_judge", "mock_sc_output", "mock_pq_output", "hash_lane"]
