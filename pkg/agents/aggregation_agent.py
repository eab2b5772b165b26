# Import necessary modules and dependencies
import time
from typing import Any, Dict

from langsmith import traceable

# Import the ScoreState and utility functions from the shared types module
from reward_types import ScoreState, create_message, elapsed_ms, log_message

from tool.LLM.schema import ScoreMode
from tool.rewardAgg.index import aggregate
from tool.rewardAgg.schema import SubScores


@traceable(name="aggregation_agent")
def aggregation_agent(state: ScoreState) -> Dict[str, Any]:
    """Aggregation Agent - folds both streams into the scalar reward (Full mode only)"""
    agent_name = "Aggregation Agent"
    request = state["request"]

    if state.get("failures"):
        log_message(agent_name, "Skipping aggregation, a judge stream failed", "WARNING")
        return {}
    if request.mode is not ScoreMode.FULL:
        return {"messages": [create_message(agent_name, f"No aggregation in {request.mode.value} mode")]}

    started = time.perf_counter()
    try:
        sc, pq = state["sc_output"], state["pq_output"]
        scores = SubScores(s_if=sc.s_if, s_con=sc.s_con, s_nat=pq.s_nat, s_art=pq.s_art)
        breakdown = aggregate(scores, state["config"])
        return {
            "breakdown": breakdown,
            "timing": {"aggregate_ms": elapsed_ms(started, time.perf_counter())},
            "messages": [create_message(agent_name, f"Reward {breakdown.reward:.4f}", "success")],
        }

    except Exception as e:
        error_msg = f"Aggregation failed: {e}"
        log_message(agent_name, error_msg, "ERROR")
        return {
            "errors": [error_msg],
            "failures": [e],
            "messages": [create_message(agent_name, error_msg, "error")],
        }
