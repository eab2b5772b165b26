"""
Prefix-sharing batch plan.

Requests whose judge prompts share the same template, instruction and source
images produce an identical prompt prefix; grouping them lets a downstream
inference server reuse its prefix cache across the group.
"""

import hashlib
import json
from typing import Dict, List, Sequence

from .prompts import PromptTemplate, sc_template_for
from .schema import BatchPlan, RewardRequest


def prefix_template(request: RewardRequest) -> PromptTemplate:
    if request.mode.needs_sc:
        return sc_template_for(len(request.source_refs))
    return PromptTemplate.PQ


def prefix_key(request: RewardRequest) -> str:
    """
    Digest of (template id, instruction, ordered source refs).

    PQ-only requests are the exception: their key uses the template id
    alone, because the PQ prompt carries neither instruction nor sources
    and every PQ request shares the same prefix. Three PQ requests with
    three different instructions therefore form one group, not three.
    """
    template = prefix_template(request)
    if template is PromptTemplate.PQ:
        # the PQ prompt carries neither instruction nor sources
        material = [template.value, "", []]
    else:
        material = [template.value, request.instruction, list(request.source_refs)]
    encoded = json.dumps(material, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return hashlib.blake2b(encoded, digest_size=16).hexdigest()


def plan_batch(requests: Sequence[RewardRequest]) -> BatchPlan:
    groups: Dict[str, List[str]] = {}
    for index, request in enumerate(requests):
        request_id = request.request_id or f"#{index}"
        groups.setdefault(prefix_key(request), []).append(request_id)
    return BatchPlan(groups=groups)


__all__ = ["prefix_key", "prefix_template", "plan_batch"]
