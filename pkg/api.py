from flask import Flask, request, jsonify
from flask_cors import CORS
from typing import Any, Dict, List, Optional, Tuple, Union
import asyncio
import os
import threading
import time
from contextlib import contextmanager
from datetime import datetime

from dotenv import load_dotenv
from pydantic import ValidationError
from werkzeug.exceptions import HTTPException
from werkzeug.serving import make_server

# Import the LangGraph scoring pipeline
from reward_workflow import BackendLike, as_backend, ascore_batch, ascore_request
from langsmith_config import get_langsmith_config, init_tracing
from reward_config import load_aggregation_config, load_backend_spec, parse_bind

from tool.LLM.batching import plan_batch
from tool.LLM.schema import BadRequest, BindFailure, RewardRequest, RewardResponse, ServiceError
from tool.rewardAgg.schema import AggregationConfig, ConfigInvalid

load_dotenv()

MAX_BATCH_SIZE = 4096


class ServiceMetrics:
    """
    Monotonic counters in the units of the latency report: ms/image for
    latency, images/s for throughput. One image is one scored request.
    Throughput divides by the union of busy periods, so overlapping
    requests on the threaded server count their shared time once.
    """

    def __init__(self, baseline_ms_per_image: Optional[float] = None, clock=time.perf_counter):
        self.lock = threading.Lock()
        self.clock = clock
        self.in_flight = 0
        self.busy_since: Optional[float] = None
        self.baseline_ms_per_image = baseline_ms_per_image
        self.requests_total = 0
        self.completed = 0
        self.failed = 0
        self.image_ms_total = 0.0
        self.busy_ms_total = 0.0
        self.batches = 0
        self.batch_ms_total = 0.0

    def record(self, responses: List[Union[RewardResponse, Exception]], wall_ms: float, batch: bool = False):
        with self.lock:
            for item in responses:
                self.requests_total += 1
                if isinstance(item, RewardResponse):
                    self.completed += 1
                    self.image_ms_total += item.timing.total_ms
                else:
                    self.failed += 1
            if batch:
                self.batches += 1
                self.batch_ms_total += wall_ms

    @contextmanager
    def busy(self):
        """Mark one request in flight; the busy clock runs while any is"""
        with self.lock:
            if self.in_flight == 0:
                self.busy_since = self.clock()
            self.in_flight += 1
        try:
            yield
        finally:
            with self.lock:
                self.in_flight -= 1
                if self.in_flight == 0:
                    self.busy_ms_total += (self.clock() - self.busy_since) * 1000.0
                    self.busy_since = None

    def record_rejected(self, count: int = 1):
        with self.lock:
            self.requests_total += count
            self.failed += count

    def snapshot(self) -> Dict[str, Any]:
        with self.lock:
            per_image = self.image_ms_total / self.completed if self.completed else None
            busy_ms = self.busy_ms_total
            if self.busy_since is not None:
                busy_ms += (self.clock() - self.busy_since) * 1000.0
            throughput = self.completed / (busy_ms / 1000.0) if self.completed and busy_ms > 0 else None
            speedup = None
            if self.baseline_ms_per_image and per_image:
                speedup = self.baseline_ms_per_image / per_image
            return {
                "requests_total": self.requests_total,
                "completed": self.completed,
                "failed": self.failed,
                "mean_per_image_ms": per_image,
                "throughput_img_per_s": throughput,
                "batches": self.batches,
                "mean_batch_latency_ms": self.batch_ms_total / self.batches if self.batches else None,
                "baseline_ms_per_image": self.baseline_ms_per_image,
                "speedup_vs_baseline": speedup,
            }


def error_body(error: Exception, request_id: Optional[str] = None) -> Tuple[Dict[str, Any], int]:
    """Structured error body plus HTTP status for any failure"""
    if isinstance(error, ServiceError):
        body = error.to_dict()
        if body.get("request_id") is None:
            body["request_id"] = request_id
        return body, error.http_status
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ())) or "body"
        return {"error_code": "BadRequest", "message": f"{location}: {first['msg']}", "request_id": request_id}, 400
    code = getattr(error, "error_code", None)
    if code:
        # domain errors (ConfigInvalid, DomainError, ...) are client faults
        return {"error_code": code, "message": str(error), "request_id": request_id}, 400
    return {"error_code": "InternalError", "message": str(error), "request_id": request_id}, 500


def parse_request(data: Any) -> RewardRequest:
    if not isinstance(data, dict):
        raise BadRequest("request body must be a JSON object")
    return RewardRequest.model_validate(data)


def _request_id_of(data: Any) -> Optional[str]:
    return data.get("request_id") if isinstance(data, dict) else None


def run_async(coroutine):
    # Flask handlers are synchronous; every call gets its own loop
    loop = asyncio.new_event_loop()
    asyncio.set_event_loop(loop)
    try:
        return loop.run_until_complete(coroutine)
    finally:
        asyncio.set_event_loop(None)
        loop.close()


def create_app(backend: BackendLike, cfg: AggregationConfig, baseline_ms_per_image: Optional[float] = None) -> Flask:
    """Build the HTTP service around one judge backend and one aggregation config"""
    app = Flask(__name__)
    CORS(app)  # Enable CORS for all domains and routes
    app.config['JSON_SORT_KEYS'] = False

    judge = as_backend(backend)
    metrics = ServiceMetrics(baseline_ms_per_image)
    app.extensions["reward_metrics"] = metrics

    @app.route("/healthz", methods=["GET"])
    def healthz():
        """Liveness probe"""
        return jsonify({
            "status": "ok",
            "backend": judge.describe(),
            "strategy": cfg.strategy.value,
            "langsmith_enabled": get_langsmith_config().get("tracing_enabled", False),
            "timestamp": datetime.now().isoformat(),
        })

    @app.route("/metrics", methods=["GET"])
    def get_metrics():
        return jsonify(metrics.snapshot())

    @app.route("/v1/score", methods=["POST"])
    def score():
        """
        Score one request.

        Expected JSON payload:
        {
            "request_id": "r1",
            "instruction": "make the sky pink",
            "source_refs": ["src.png"],
            "edited_ref": "out.png",
            "mode": "full",          # sc / pq / full
            "config_override": {"alpha": 0.7}
        }
        """
        data = request.get_json(silent=True)
        try:
            reward_request = parse_request(data)
        except (BadRequest, ValidationError) as e:
            metrics.record_rejected()
            body, status = error_body(e, _request_id_of(data))
            return jsonify(body), status

        started = time.perf_counter()
        try:
            with metrics.busy():
                response = run_async(ascore_request(reward_request, judge, cfg))
        except Exception as e:
            metrics.record([e], (time.perf_counter() - started) * 1000.0)
            body, status = error_body(e, reward_request.request_id)
            print(f"❌ Request {reward_request.request_id or '-'} failed: {body['error_code']}")
            return jsonify(body), status

        metrics.record([response], (time.perf_counter() - started) * 1000.0)
        return jsonify(response.to_dict())

    @app.route("/v1/score_batch", methods=["POST"])
    def score_batch():
        """
        Score a list of requests. Accepts a bare list or {"requests": [...]}.
        Every slot of "responses" is either a RewardResponse or an error body,
        in input order; "plan" echoes the prefix grouping of the valid requests.
        """
        data = request.get_json(silent=True)
        items = data.get("requests") if isinstance(data, dict) else data
        if not isinstance(items, list) or not items:
            body, status = error_body(BadRequest("batch body must be a non-empty list of requests"))
            return jsonify(body), status
        if len(items) > MAX_BATCH_SIZE:
            body, status = error_body(BadRequest(f"batch exceeds {MAX_BATCH_SIZE} requests"))
            return jsonify(body), status

        slots: List[Optional[Dict[str, Any]]] = [None] * len(items)
        valid: List[Tuple[int, RewardRequest]] = []
        for index, item in enumerate(items):
            try:
                valid.append((index, parse_request(item)))
            except (BadRequest, ValidationError) as e:
                slots[index] = error_body(e, _request_id_of(item))[0]
        if len(valid) < len(items):
            metrics.record_rejected(len(items) - len(valid))

        plan = plan_batch([req for _, req in valid]) if valid else None

        started = time.perf_counter()
        with metrics.busy():
            results = run_async(ascore_batch([req for _, req in valid], judge, cfg)) if valid else []
        wall_ms = (time.perf_counter() - started) * 1000.0
        metrics.record(results, wall_ms, batch=True)

        for (index, req), result in zip(valid, results):
            if isinstance(result, RewardResponse):
                slots[index] = result.to_dict()
            else:
                slots[index] = error_body(result, req.request_id)[0]

        failed = sum(1 for slot in slots if "error_code" in slot)
        print(f"📦 Batch of {len(items)}: {len(items) - failed} scored, {failed} failed, {wall_ms:.1f} ms")
        return jsonify({
            "responses": slots,
            "plan": plan.to_dict() if plan else {"group_count": 0, "groups": []},
            "batch_latency_ms": wall_ms,
        })

    @app.errorhandler(Exception)
    def unexpected(error):
        if isinstance(error, HTTPException):
            return jsonify({"error_code": error.name.replace(" ", ""), "message": error.description, "request_id": None}), error.code
        body, status = error_body(error)
        return jsonify(body), status

    return app


def serve(
    bind: str,
    backend: BackendLike,
    cfg: AggregationConfig,
    baseline_ms_per_image: Optional[float] = None,
):
    """Start the threaded HTTP service; blocks until interrupted"""
    host, port = parse_bind(bind)
    app = create_app(backend, cfg, baseline_ms_per_image)
    try:
        server = make_server(host, port, app, threaded=True)
    except (OSError, SystemExit) as e:
        raise BindFailure(f"cannot bind {host}:{port}: {e}")

    print(f"🚀 Reward service listening on http://{host}:{port}")
    print(f"🔧 Judge backend: {as_backend(backend).describe()}")
    print(f"📊 Metrics: http://{host}:{port}/metrics")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("\n👋 Reward service stopped")
    finally:
        server.server_close()


def _baseline_from_env() -> Optional[float]:
    raw = os.getenv("REWARD_BASELINE_MS_PER_IMAGE")
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        raise ConfigInvalid(f"REWARD_BASELINE_MS_PER_IMAGE={raw!r} is not a number")


if __name__ == "__main__":
    init_tracing()
    serve(os.getenv("REWARD_BIND", ""), load_backend_spec(), load_aggregation_config(), _baseline_from_env())
