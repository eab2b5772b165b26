import asyncio
import time
import uuid
from typing import Any, Dict, List, Optional, Sequence, Union

from dotenv import load_dotenv

# LangSmith tracing setup
from langsmith import traceable

# Import shared pipeline types and utilities
from reward_types import ScoreState, elapsed_ms, log_message

from agents.sc_judge_agent import sc_judge_agent
from agents.pq_judge_agent import pq_judge_agent
from agents.aggregation_agent import aggregation_agent

from langgraph.graph import StateGraph, START, END

from tool.LLM.index import JudgeBackend
from tool.LLM.schema import (
    JudgeBackendSpec,
    RewardRequest,
    RewardResponse,
    ScoreMode,
    ServiceError,
    StageTiming,
)
from tool.rewardAgg.schema import DEFAULT_CONFIG, AggregationConfig

load_dotenv()

BackendLike = Union[JudgeBackend, JudgeBackendSpec]


# conditional routing functions

def route_streams(state: ScoreState) -> List[str]:
    """SC and PQ judging fan out in parallel; PQ needs only the edited image"""
    mode = state["request"].mode
    streams = []
    if mode.needs_sc:
        streams.append("sc_judge")
    if mode.needs_pq:
        streams.append("pq_judge")
    return streams


def create_workflow() -> StateGraph:
    """Create the LangGraph scoring pipeline"""

    workflow = StateGraph(ScoreState)

    # Add nodes (agents) to the graph
    workflow.add_node("sc_judge", sc_judge_agent)
    workflow.add_node("pq_judge", pq_judge_agent)
    workflow.add_node("aggregation", aggregation_agent)

    # both judge branches finish in the same step, so aggregation runs once after them
    workflow.add_conditional_edges(START, route_streams, ["sc_judge", "pq_judge"])
    workflow.add_edge("sc_judge", "aggregation")
    workflow.add_edge("pq_judge", "aggregation")
    workflow.add_edge("aggregation", END)

    return workflow


_compiled = None


def compiled_workflow():
    global _compiled
    if _compiled is None:
        _compiled = create_workflow().compile()
    return _compiled


def as_backend(backend: BackendLike) -> JudgeBackend:
    return backend if isinstance(backend, JudgeBackend) else JudgeBackend(backend)


def effective_config(request: RewardRequest, cfg: AggregationConfig) -> AggregationConfig:
    if not request.config_override:
        return cfg
    return cfg.with_overrides(**request.config_override)


def build_response(request: RewardRequest, state: Dict[str, Any], total_ms: float) -> RewardResponse:
    timing = state.get("timing") or {}
    sc = state.get("sc_output")
    pq = state.get("pq_output")
    return RewardResponse(
        request_id=request.request_id,
        mode=request.mode,
        breakdown=state.get("breakdown") if request.mode is ScoreMode.FULL else None,
        sc_scores=sc.scores if sc else None,
        pq_scores=pq.scores if pq else None,
        regions=list(sc.regions) if sc else [],
        sc_reasoning=sc.reasoning if sc else "",
        pq_reasoning=pq.reasoning if pq else "",
        timing=StageTiming(
            sc_ms=timing.get("sc_ms"),
            pq_ms=timing.get("pq_ms"),
            aggregate_ms=timing.get("aggregate_ms"),
            total_ms=total_ms,
        ),
    )


@traceable(name="score_request", metadata={"workflow_type": "reward_scoring"})
async def ascore_request(
    request: RewardRequest,
    backend: BackendLike,
    cfg: AggregationConfig = DEFAULT_CONFIG,
) -> RewardResponse:
    """
    Run one request through the pipeline. The first typed failure recorded by
    a node is re-raised with the request id attached.
    """
    started = time.perf_counter()
    config = effective_config(request, cfg)

    initial_state: ScoreState = {
        "request": request,
        "backend": as_backend(backend),
        "config": config,
        "sc_output": None,
        "pq_output": None,
        "breakdown": None,
        "workflow_id": request.request_id or f"score_{uuid.uuid4().hex[:12]}",
        "timing": {},
        "errors": [],
        "failures": [],
        "messages": [],
    }

    final_state = await compiled_workflow().ainvoke(initial_state)

    failures = final_state.get("failures") or []
    if failures:
        error = failures[0]
        if isinstance(error, ServiceError) and error.request_id is None:
            error.request_id = request.request_id
        raise error

    return build_response(request, final_state, elapsed_ms(started, time.perf_counter()))


def score_request(
    request: RewardRequest,
    backend: BackendLike,
    cfg: AggregationConfig = DEFAULT_CONFIG,
) -> RewardResponse:
    """Synchronous wrapper for scripts and the CLI"""
    loop = asyncio.new_event_loop()
    try:
        return loop.run_until_complete(ascore_request(request, backend, cfg))
    finally:
        loop.close()


async def ascore_batch(
    requests: Sequence[RewardRequest],
    backend: BackendLike,
    cfg: AggregationConfig = DEFAULT_CONFIG,
    concurrency: int = 32,
) -> List[Union[RewardResponse, Exception]]:
    """
    Score every request concurrently. Each slot holds either the response or
    the exception that request raised; one failure never touches its siblings.
    """
    judge = as_backend(backend)
    gate = asyncio.Semaphore(max(1, concurrency))

    async def run_one(request: RewardRequest) -> Union[RewardResponse, Exception]:
        async with gate:
            try:
                return await ascore_request(request, judge, cfg)
            except Exception as e:
                log_message("Batch Scorer", f"request {request.request_id or '-'} failed: {e}", "WARNING")
                return e

    return list(await asyncio.gather(*(run_one(request) for request in requests)))


def score_batch(
    requests: Sequence[RewardRequest],
    backend: BackendLike,
    cfg: AggregationConfig = DEFAULT_CONFIG,
    concurrency: Optional[int] = None,
) -> List[Union[RewardResponse, Exception]]:
    loop = asyncio.new_event_loop()
    try:
        return loop.run_until_complete(ascore_batch(requests, backend, cfg, concurrency or 32))
    finally:
        loop.close()
