# Import necessary modules and dependencies
import time
from typing import Any, Dict

from langsmith import traceable

# Import the ScoreState and utility functions from the shared types module
from reward_types import ScoreState, create_message, elapsed_ms, log_message

from tool.judgeIO.schema import ParseOptions
from tool.LLM.index import parse_pq_transcript
from tool.LLM.prompts import build_pq_prompt
from tool.LLM.schema import ServiceError


@traceable(name="pq_judge_agent")
async def pq_judge_agent(state: ScoreState) -> Dict[str, Any]:
    """PQ Judge Agent - only the edited image goes to the perceptual quality prompt"""
    agent_name = "PQ Judge Agent"
    request = state["request"]
    started = time.perf_counter()

    try:
        raw = await state["backend"].complete(build_pq_prompt(), [request.edited_ref])
        output = parse_pq_transcript(raw, ParseOptions(scale_max=state["config"].scale_max))

        return {
            "pq_output": output,
            "timing": {"pq_ms": elapsed_ms(started, time.perf_counter())},
            "messages": [create_message(agent_name, f"PQ scores {output.scores.as_list()}", "success")],
        }

    except Exception as e:
        error = e if isinstance(e, (ServiceError, ValueError)) else ServiceError(f"PQ stream failed: {e}")
        error_msg = f"PQ judging failed: {error}"
        log_message(agent_name, error_msg, "ERROR")
        return {
            "timing": {"pq_ms": elapsed_ms(started, time.perf_counter())},
            "errors": [error_msg],
            "failures": [error],
            "messages": [create_message(agent_name, error_msg, "error")],
        }
