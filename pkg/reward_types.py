"""
Shared types and utilities for the reward scoring pipeline.
This module contains the ScoreState definition and utility functions
that are used across all agents to avoid circular imports.
"""

import operator
from datetime import datetime
from typing import Annotated, Any, Dict, List, Optional, TypedDict

from tool.judgeIO.schema import PqOutput, ScOutput
from tool.LLM.index import JudgeBackend
from tool.LLM.schema import RewardRequest
from tool.rewardAgg.schema import AggregationConfig, RewardBreakdown


def merge_timings(left: Dict[str, float], right: Dict[str, float]) -> Dict[str, float]:
    return {**(left or {}), **(right or {})}


# State definition for the pipeline
class ScoreState(TypedDict, total=False):
    """State that gets passed between agents in the pipeline"""
    # Input parameters
    request: RewardRequest
    backend: JudgeBackend
    config: AggregationConfig

    # Results from each stage
    sc_output: Optional[ScOutput]
    pq_output: Optional[PqOutput]
    breakdown: Optional[RewardBreakdown]

    # Pipeline metadata; the judge nodes run in parallel so shared keys need reducers
    workflow_id: str
    timing: Annotated[Dict[str, float], merge_timings]
    errors: Annotated[List[str], operator.add]
    failures: Annotated[List[Exception], operator.add]

    # Messages for agent communication
    messages: Annotated[List[Dict], operator.add]


# Utility functions
def log_message(agent_name: str, message: str, level: str = "INFO"):
    """Log a message with agent name and timestamp"""
    timestamp = datetime.now().strftime("%H:%M:%S")
    print(f"[{timestamp}] {level} - {agent_name}: {message}")


def create_message(agent_name: str, content: str, message_type: str = "status") -> Dict[str, Any]:
    """Create a standardized message format"""
    return {
        "agent": agent_name,
        "timestamp": datetime.now().isoformat(),
        "type": message_type,
        "content": content
    }


def elapsed_ms(started: float, finished: float) -> float:
    return max(0.0, (finished - started) * 1000.0)
