"""
Tests for the reward HTTP service through Flask's test client.
"""

import asyncio
import socket
import threading

import pytest

from api import ServiceMetrics, create_app, run_async, serve
from reward_workflow import score_request
from tool.LLM.index import JudgeBackend
from tool.LLM.schema import BindFailure, JudgeBackendSpec, RewardRequest, RewardResponse, ScoreMode, StageTiming
from tool.rewardAgg.schema import DEFAULT_CONFIG


class FlakyBackend(JudgeBackend):
    """Mock judge that answers prose for edited refs starting with 'broken'"""

    async def complete(self, prompt, image_refs):
        if image_refs[-1].startswith("broken"):
            return "The edit is fine, I would give it a high score."
        return await super().complete(prompt, image_refs)


def body(i: int, edited_prefix: str = "out", **overrides) -> dict:
    fields = {
        "request_id": f"r{i}",
        "instruction": "replace the red car with a bicycle",
        "source_refs": ["street.png"],
        "edited_ref": f"{edited_prefix}_{i}.png",
        "mode": "full",
    }
    fields.update(overrides)
    return fields


@pytest.fixture
def client(mock_spec):
    app = create_app(mock_spec, DEFAULT_CONFIG, baseline_ms_per_image=100.0)
    app.testing = True
    return app.test_client()


def test_health_probe(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    data = response.get_json()
    assert data["status"] == "ok"
    assert data["backend"] == "mock(seed=7)"


def test_score_one_request_is_deterministic(client):
    first = client.post("/v1/score", json=body(1)).get_json()
    second = client.post("/v1/score", json=body(1)).get_json()
    assert first["reward"] is not None
    assert first["breakdown"] == second["breakdown"]
    assert first["regions"] == second["regions"]
    assert first["timing"]["total_ms"] >= 0


def test_score_matches_the_library_pipeline(client, mock_spec):
    data = client.post("/v1/score", json=body(3)).get_json()
    direct = score_request(RewardRequest(**body(3)), mock_spec, DEFAULT_CONFIG)
    assert data["reward"] == direct.reward


def test_pq_mode_over_http(client):
    data = client.post("/v1/score", json=body(2, mode="pq", source_refs=[])).get_json()
    assert data["mode"] == "pq"
    assert data["reward"] is None
    assert data["regions"] == []
    assert data["pq_scores"] is not None


def test_malformed_body_is_a_structured_400_and_service_stays_up(client):
    response = client.post("/v1/score", data="{not json", content_type="application/json")
    assert response.status_code == 400
    assert response.get_json()["error_code"] == "BadRequest"

    response = client.post("/v1/score", json={"request_id": "x1", "instruction": "a", "source_refs": ["s"]})
    assert response.status_code == 400
    error = response.get_json()
    assert error["error_code"] == "BadRequest"
    assert error["request_id"] == "x1"
    assert "edited_ref" in error["message"]

    assert client.get("/healthz").status_code == 200


def test_bad_override_is_a_client_error(client):
    response = client.post("/v1/score", json=body(1, config_override={"alpha": 2.0}))
    assert response.status_code == 400
    assert response.get_json()["error_code"] == "ConfigInvalid"


def test_unknown_route_is_structured(client):
    response = client.get("/v2/nothing")
    assert response.status_code == 404
    assert response.get_json()["error_code"] == "NotFound"


def test_batch_of_576_is_one_prefix_group_and_advances_counters(client):
    requests = [body(i) for i in range(576)]
    response = client.post("/v1/score_batch", json={"requests": requests})
    assert response.status_code == 200
    data = response.get_json()

    assert len(data["responses"]) == 576
    assert data["plan"]["group_count"] == 1
    assert data["plan"]["groups"][0]["request_ids"] == [f"r{i}" for i in range(576)]
    assert all(item["reward"] is not None for item in data["responses"])

    metrics = client.get("/metrics").get_json()
    assert metrics["requests_total"] == 576
    assert metrics["completed"] == 576
    assert metrics["failed"] == 0
    assert metrics["batches"] == 1
    assert metrics["mean_per_image_ms"] > 0
    assert metrics["throughput_img_per_s"] > 0
    assert metrics["speedup_vs_baseline"] == pytest.approx(100.0 / metrics["mean_per_image_ms"])


def test_batch_is_deterministic(client):
    requests = [body(i) for i in range(24)]
    first = client.post("/v1/score_batch", json=requests).get_json()["responses"]
    second = client.post("/v1/score_batch", json=requests).get_json()["responses"]
    assert [r["breakdown"] for r in first] == [r["breakdown"] for r in second]


def test_injected_malformed_transcripts_stay_isolated(mock_spec):
    app = create_app(FlakyBackend(mock_spec), DEFAULT_CONFIG)
    flaky = app.test_client()
    clean = create_app(mock_spec, DEFAULT_CONFIG).test_client()

    # one in twenty (5%) of the edited images gets a prose transcript
    requests = [body(i, edited_prefix="broken" if i % 20 == 0 else "out") for i in range(576)]
    data = flaky.post("/v1/score_batch", json=requests).get_json()
    reference = clean.post("/v1/score_batch", json=requests).get_json()

    broken = [i for i in range(576) if i % 20 == 0]
    for i, item in enumerate(data["responses"]):
        if i in broken:
            assert item["error_code"] == "JudgeOutputInvalid"
            assert item["request_id"] == f"r{i}"
            assert item["raw_text"].startswith("The edit is fine")
        else:
            assert item["breakdown"] == reference["responses"][i]["breakdown"]

    metrics = flaky.get("/metrics").get_json()
    assert metrics["failed"] == len(broken)
    assert metrics["completed"] == 576 - len(broken)


def test_invalid_items_in_a_batch_do_not_block_siblings(client):
    requests = [body(0), {"request_id": "bad", "mode": "full"}, "not an object", body(3)]
    data = client.post("/v1/score_batch", json=requests).get_json()
    slots = data["responses"]
    assert slots[0]["reward"] is not None
    assert slots[1]["error_code"] == "BadRequest" and slots[1]["request_id"] == "bad"
    assert slots[2]["error_code"] == "BadRequest"
    assert slots[3]["reward"] is not None
    assert data["plan"]["group_count"] == 1


def test_empty_batch_is_rejected(client):
    response = client.post("/v1/score_batch", json=[])
    assert response.status_code == 400
    assert response.get_json()["error_code"] == "BadRequest"


def test_single_request_judge_failure_maps_to_502(mock_spec):
    flaky = create_app(FlakyBackend(mock_spec), DEFAULT_CONFIG).test_client()
    response = flaky.post("/v1/score", json=body(5, edited_prefix="broken"))
    assert response.status_code == 502
    error = response.get_json()
    assert error["error_code"] == "JudgeOutputInvalid"
    assert error["request_id"] == "r5"


def test_unreachable_backend_maps_to_503():
    async def refuse(url, headers, body, timeout):
        raise OSError("connection refused")

    async def no_sleep(delay):
        return None

    spec = JudgeBackendSpec(kind="remote", endpoint="http://judge.local/v1", max_retries=1)
    app = create_app(JudgeBackend(spec, transport=refuse, sleep=no_sleep), DEFAULT_CONFIG)
    response = app.test_client().post("/v1/score", json=body(1, mode="pq"))
    assert response.status_code == 503
    assert response.get_json()["error_code"] == "BackendUnavailable"


def test_metrics_start_empty():
    snapshot = ServiceMetrics().snapshot()
    assert snapshot["requests_total"] == 0
    assert snapshot["mean_per_image_ms"] is None
    assert snapshot["throughput_img_per_s"] is None


def test_serve_on_a_taken_port_raises_bind_failure(mock_spec):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    try:
        port = blocker.getsockname()[1]
        with pytest.raises(BindFailure):
            serve(f"127.0.0.1:{port}", mock_spec, DEFAULT_CONFIG)
    finally:
        blocker.close()


class StepClock:
    """Clock that returns preset readings in order"""

    def __init__(self, *readings):
        self.readings = list(readings)

    def __call__(self):
        return self.readings.pop(0)


def finished(request_id):
    return RewardResponse(
        request_id=request_id,
        mode=ScoreMode.PQ,
        timing=StageTiming(total_ms=100.0),
    )


def test_overlapping_requests_share_busy_time():
    # two requests over [0.0, 0.1] and [0.05, 0.15]: busy for 150 ms, not 200 ms
    metrics = ServiceMetrics(clock=StepClock(0.0, 0.15))
    with metrics.busy():
        with metrics.busy():
            metrics.record([finished("a")], 100.0)
        metrics.record([finished("b")], 100.0)
    snapshot = metrics.snapshot()
    assert snapshot["completed"] == 2
    assert snapshot["throughput_img_per_s"] == pytest.approx(2 / 0.15)


def test_idle_gaps_do_not_count_as_busy():
    metrics = ServiceMetrics(clock=StepClock(0.0, 0.1, 5.0, 5.1))
    for request_id in ("a", "b"):
        with metrics.busy():
            metrics.record([finished(request_id)], 100.0)
    assert metrics.snapshot()["throughput_img_per_s"] == pytest.approx(2 / 0.2)


class SlowBackend(JudgeBackend):
    """Mock judge that holds each call until every concurrent caller arrived"""

    def __init__(self, spec, barrier):
        super().__init__(spec)
        self.barrier = barrier

    async def complete(self, prompt, image_refs):
        self.barrier.wait(timeout=10)
        await asyncio.sleep(0.2)
        return await super().complete(prompt, image_refs)


def test_concurrent_requests_report_wall_clock_throughput(mock_spec):
    callers = 4
    app = create_app(SlowBackend(mock_spec, threading.Barrier(callers)), DEFAULT_CONFIG)
    results = [None] * callers

    def call(i):
        results[i] = app.test_client().post("/v1/score", json=body(i, mode="pq", source_refs=[])).get_json()

    threads = [threading.Thread(target=call, args=(i,)) for i in range(callers)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join(timeout=30)

    summed_ms = sum(item["timing"]["total_ms"] for item in results)
    metrics = app.test_client().get("/metrics").get_json()
    assert metrics["completed"] == callers
    # summing per-request time would give callers / summed seconds
    assert metrics["throughput_img_per_s"] > 2 * callers / (summed_ms / 1000.0)


def test_run_async_leaves_no_loop_on_the_worker_thread():
    async def answer():
        return 42

    seen = {}

    def worker():
        seen["value"] = run_async(answer())
        try:
            seen["leftover"] = asyncio.get_event_loop()
        except RuntimeError:
            seen["leftover"] = None

    thread = threading.Thread(target=worker)
    thread.start()
    thread.join(timeout=10)
    assert seen == {"value": 42, "leftover": None}
