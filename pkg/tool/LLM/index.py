import asyncio
import base64
import mimetypes
import os
import random
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence, Tuple

import aiohttp

# LangSmith tracing
from langsmith import traceable

from ..judgeIO.errors import JudgeOutputError
from ..judgeIO.index import parse_grounding_output, parse_pq_output, parse_refinement_output, parse_sc_output
from ..judgeIO.schema import CLAMP, EditRegion, PqOutput, ScOutput
from ..judgeIO.tokens import ValidationReport, validate_refined_reasoning
from .mock import mock_judge
from .prompts import (
    build_grounding_prompt,
    build_pq_reasoning_prompt,
    build_refinement_prompt,
    build_sc_reasoning_prompt,
)
from .schema import BackendUnavailable, JudgeBackendSpec, JudgeOutputInvalid

RETRY_BASE_DELAY = 0.5
RETRY_MAX_DELAY = 8.0
RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}

# (url, headers, body, timeout) -> (status, parsed json or text)
Transport = Callable[[str, Dict[str, str], Dict[str, Any], float], Awaitable[Tuple[int, Any]]]


async def aiohttp_transport(url: str, headers: Dict[str, str], body: Dict[str, Any], timeout: float) -> Tuple[int, Any]:
    client_timeout = aiohttp.ClientTimeout(total=timeout)
    async with aiohttp.ClientSession(timeout=client_timeout) as session:
        async with session.post(url, headers=headers, json=body) as response:
            try:
                data = await response.json(content_type=None)
            except Exception:
                # Handle cases where the response body isn't JSON
                data = await response.text()
            return response.status, data


def image_part(ref: str, inline: bool) -> Dict[str, Any]:
    """
    Chat-completions image part. Local files become base64 data URLs only
    when the backend needs inline data; anything else is passed by reference.
    """
    if inline and os.path.isfile(ref):
        mime = mimetypes.guess_type(ref)[0] or "image/png"
        with open(ref, "rb") as file:
            encoded = base64.b64encode(file.read()).decode("ascii")
        return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{encoded}"}}
    return {"type": "image_url", "image_url": {"url": ref}}


def build_chat_body(model: str, prompt: str, image_refs: Sequence[str], inline: bool) -> Dict[str, Any]:
    content = [image_part(ref, inline) for ref in image_refs]
    content.append({"type": "text", "text": prompt})
    body: Dict[str, Any] = {
        "messages": [{"role": "user", "content": content}],
        "temperature": 0,
        "stream": False,
    }
    if model:
        body["model"] = model
    return body


def extract_message_text(response: Any) -> str:
    """Single text answer from the first choice of a chat-completions response"""
    if isinstance(response, str):
        return response
    if not isinstance(response, dict):
        raise BackendUnavailable(f"unexpected judge response type {type(response).__name__}")
    choices = response.get("choices") or [{}]
    first = choices[0] if isinstance(choices[0], dict) else {}
    content = (first.get("message") or {}).get("content")
    if content is None:
        content = first.get("text")
    if isinstance(content, list):
        content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
    if not isinstance(content, str):
        raise BackendUnavailable("judge response carries no message content")
    return content


def backoff_delay(attempt: int, rng: random.Random) -> float:
    """Exponential backoff with full jitter on top of the base step"""
    step = min(RETRY_MAX_DELAY, RETRY_BASE_DELAY * (2 ** attempt))
    return step + rng.uniform(0, RETRY_BASE_DELAY)


class RemoteJudgeClient:
    """Chat-completions style VLM endpoint"""

    def __init__(
        self,
        spec: JudgeBackendSpec,
        transport: Optional[Transport] = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ):
        self.spec = spec
        self.transport = transport or aiohttp_transport
        self.sleep = sleep
        self.rng = random.Random()

    def headers(self) -> Dict[str, str]:
        headers = {"accept": "application/json", "Content-Type": "application/json"}
        if self.spec.api_key:
            headers["Authorization"] = f"Bearer {self.spec.api_key}"
        return headers

    @traceable(name="remote_judge_call", metadata={"backend": "remote"})
    async def complete(self, prompt: str, image_refs: Sequence[str]) -> str:
        body = build_chat_body(self.spec.model, prompt, image_refs, self.spec.inline_images)
        attempts = self.spec.max_retries + 1
        last_error = "no attempt made"

        for attempt in range(attempts):
            try:
                status, data = await self.transport(self.spec.endpoint, self.headers(), body, self.spec.timeout)
            except (aiohttp.ClientError, asyncio.TimeoutError, OSError) as error:
                last_error = f"{type(error).__name__}: {error}"
            else:
                if 200 <= status < 300:
                    return extract_message_text(data)
                last_error = f"HTTP {status}"
                if status not in RETRYABLE_STATUS:
                    break

            if attempt + 1 < attempts:
                delay = backoff_delay(attempt, self.rng)
                print(f"⚠️ Judge call failed ({last_error}), retry {attempt + 1}/{self.spec.max_retries} in {delay:.2f}s")
                await self.sleep(delay)

        raise BackendUnavailable(f"judge endpoint unavailable after {attempts} attempt(s): {last_error}")


class JudgeBackend:
    """Common face of the mock and remote judges"""

    def __init__(self, spec: JudgeBackendSpec, transport: Optional[Transport] = None, sleep=asyncio.sleep):
        self.spec = spec
        self.remote = RemoteJudgeClient(spec, transport, sleep) if spec.kind == "remote" else None

    async def complete(self, prompt: str, image_refs: Sequence[str]) -> str:
        if self.remote is None:
            return mock_judge(prompt, list(image_refs), self.spec.seed)
        return await self.remote.complete(prompt, image_refs)

    def describe(self) -> str:
        return self.spec.describe()


def _invalid(error: JudgeOutputError) -> JudgeOutputInvalid:
    return JudgeOutputInvalid(error.message, raw_text=error.raw_text, cause_code=error.error_code)


# ---------------------------------------------------------------- data construction

@traceable(name="ground_edit_regions")
async def ground_edit_regions(
    backend: JudgeBackend, instruction: str, box_num: int, source_ref: str, edited_ref: str
) -> List[EditRegion]:
    """Grounding stage: locate exactly box_num edited regions"""
    raw = await backend.complete(build_grounding_prompt(instruction, box_num), [source_ref, edited_ref])
    try:
        return list(parse_grounding_output(raw, expected_count=box_num))
    except JudgeOutputError as error:
        raise _invalid(error)


@traceable(name="generate_reasoning")
async def generate_reasoning(
    backend: JudgeBackend, instruction: str, image_refs: Sequence[str], domain: str = "general"
) -> PqOutput:
    """
    Reasoning-generation stage. domain is "general", "human" or "pq"; the
    answer is {"reasoning", "score"} in every case.
    """
    prompt = build_pq_reasoning_prompt() if domain == "pq" else build_sc_reasoning_prompt(instruction, domain)
    raw = await backend.complete(prompt, image_refs)
    try:
        # same payload shape as a PQ answer; clamp keeps noisy expert scores usable
        return parse_pq_output(raw, CLAMP)
    except JudgeOutputError as error:
        raise _invalid(error)


@traceable(name="refine_reasoning")
async def refine_reasoning(
    backend: JudgeBackend,
    instruction: str,
    regions: Sequence[EditRegion],
    reasoning: str,
    image_refs: Sequence[str],
) -> Tuple[bool, str, Optional[ValidationReport]]:
    """
    Consistency check plus token interleaving. Returns (check_result,
    refined_text, report); report is None when the check failed.
    """
    raw = await backend.complete(build_refinement_prompt(instruction, regions, reasoning), image_refs)
    try:
        consistent, refined = parse_refinement_output(raw)
    except JudgeOutputError as error:
        raise _invalid(error)
    if not consistent:
        return False, "", None
    return True, refined, validate_refined_reasoning(refined, list(regions))


def parse_sc_transcript(raw: str, opts) -> ScOutput:
    try:
        return parse_sc_output(raw, opts)
    except JudgeOutputError as error:
        raise _invalid(error)


def parse_pq_transcript(raw: str, opts) -> PqOutput:
    try:
        return parse_pq_output(raw, opts)
    except JudgeOutputError as error:
        raise _invalid(error)


# Main exported functions
__all__ = [
    "RemoteJudgeClient",
    "JudgeBackend",
    "aiohttp_transport",
    "build_chat_body",
    "extract_message_text",
    "backoff_delay",
    "ground_edit_regions",
    "generate_reasoning",
    "refine_reasoning",
    "parse_sc_transcript",
    "parse_pq_transcript",
]
