# Import necessary modules and dependencies
import time
from typing import Any, Dict

from langsmith import traceable

# Import the ScoreState and utility functions from the shared types module
from reward_types import ScoreState, create_message, elapsed_ms, log_message

from tool.judgeIO.schema import ParseOptions
from tool.LLM.index import parse_sc_transcript
from tool.LLM.prompts import build_sc_prompt
from tool.LLM.schema import ServiceError


@traceable(name="sc_judge_agent")
async def sc_judge_agent(state: ScoreState) -> Dict[str, Any]:
    """SC Judge Agent - source image(s) + edited image through the semantic consistency prompt"""
    agent_name = "SC Judge Agent"
    request = state["request"]
    started = time.perf_counter()

    try:
        prompt = build_sc_prompt(request.instruction, len(request.source_refs))
        image_refs = [*request.source_refs, request.edited_ref]
        raw = await state["backend"].complete(prompt, image_refs)
        output = parse_sc_transcript(raw, ParseOptions(scale_max=state["config"].scale_max))

        return {
            "sc_output": output,
            "timing": {"sc_ms": elapsed_ms(started, time.perf_counter())},
            "messages": [
                create_message(agent_name, f"SC scores {output.scores.as_list()} with {len(output.regions)} region(s)", "success")
            ],
        }

    except Exception as e:
        error = e if isinstance(e, (ServiceError, ValueError)) else ServiceError(f"SC stream failed: {e}")
        error_msg = f"SC judging failed: {error}"
        log_message(agent_name, error_msg, "ERROR")
        return {
            "timing": {"sc_ms": elapsed_ms(started, time.perf_counter())},
            "errors": [error_msg],
            "failures": [error],
            "messages": [create_message(agent_name, error_msg, "error")],
        }
