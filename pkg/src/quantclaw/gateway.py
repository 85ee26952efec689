"""HTTP front door: detect -> decide -> select -> forward, with telemetry.

Requests are served against an immutable snapshot of routing state;
admin mutations swap the snapshot atomically and never leave a request
observing a mixed state.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, replace

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .config import GatewayConfig, build_classifier
from .detection import RuleSet, hybrid_detect
from .errors import (
    PoolExhaustedError,
    ProtocolError,
    QuantClawError,
    TelemetryError,
    UpstreamDownError,
    UpstreamTimeoutError,
    ValidationError,
)
from .pool import forward, forwarded_cost
from .profiles import PrecisionLevel, ProfileSet, load_profiles, request_cost
from .routing import (
    PolicyConfig,
    RoutingDecision,
    RoutingMode,
    decide,
    select_variant,
)
from .telemetry import EventKind, Journal, aggregate

HEADER_PREFIX = "X-QuantClaw-"


@dataclass(frozen=True)
class RoutingSnapshot:
    """Everything a request needs to route, captured atomically."""

    rules: RuleSet
    profiles: ProfileSet
    mode: RoutingMode
    policy: PolicyConfig


class GatewayState:
    def __init__(self, config: GatewayConfig):
        self.config = config
        self.pool = config.pool
        self.classifier = build_classifier(config.classifier_settings)
        self.journal = Journal(config.journal_path, config.journal_max_bytes)
        self._snapshot = RoutingSnapshot(
            rules=config.rules,
            profiles=config.profiles,
            mode=config.mode,
            policy=config.policy,
        )
        self._admin_lock = threading.Lock()

    @property
    def snapshot(self) -> RoutingSnapshot:
        return self._snapshot

    def swap(self, **changes) -> RoutingSnapshot:
        with self._admin_lock:
            self._snapshot = replace(self._snapshot, **changes)
            return self._snapshot

    def shutdown(self) -> None:
        try:
            self.journal.append(EventKind.ADMIN, {"action": "shutdown"})
        except TelemetryError:
            pass
        self.journal.close()


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, **extra})


def _extract_query(body: dict) -> str:
    messages = body.get("messages")
    if not isinstance(messages, list) or not messages:
        raise ProtocolError("body must contain a non-empty 'messages' list")
    for msg in reversed(messages):
        if isinstance(msg, dict) and msg.get("role") == "user":
            content = msg.get("content")
            if isinstance(content, str) and content:
                return content
    raise ProtocolError("no user message with text content found")


def _baseline_costs(state: GatewayState, result, chosen_variant, profile) -> tuple[float, float]:
    """Counterfactual cost/latency had the request gone to the highest precision."""
    selectable = state.pool.selectable()
    highest_bits = max(v.precision.bit_width for v in selectable)
    high_variants = [v for v in selectable if v.precision.bit_width == highest_bits]
    high_variant = min(high_variants, key=lambda v: v.variant_id)
    baseline_cost = request_cost(result.tokens_in, result.tokens_out, high_variant.prices)
    if chosen_variant.precision.bit_width == highest_bits:
        baseline_latency = result.total_latency_s
    elif profile is not None and profile.low.latency_s > 0:
        baseline_latency = result.total_latency_s * (
            profile.high.latency_s / profile.low.latency_s
        )
    else:
        baseline_latency = result.total_latency_s
    return baseline_cost, baseline_latency


def create_app(config: GatewayConfig) -> FastAPI:
    state = GatewayState(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        state.shutdown()

    app = FastAPI(title="quantclaw gateway", lifespan=lifespan)
    app.state.gw = state

    def authorized(request: Request) -> bool:
        auth = request.headers.get("authorization", "")
        return auth == f"Bearer {config.admin_token}"

    @app.post("/v1/chat/completions")
    async def chat(request: Request):
        t0 = time.perf_counter()
        try:
            body = json.loads(await request.body())
            if not isinstance(body, dict):
                raise ProtocolError("body must be a JSON object")
            query = _extract_query(body)
        except (json.JSONDecodeError, ProtocolError) as e:
            return _error(400, f"malformed request: {e}")

        snap = state.snapshot
        request_id = uuid.uuid4().hex[:12]
        detection = hybrid_detect(
            query, snap.rules, state.classifier, config.fallback_category
        )
        decision = decide(
            detection.category, snap.profiles, snap.mode, snap.policy,
            state.pool.precisions(),
        )
        try:
            variant_id = select_variant(decision.precision, state.pool)
        except PoolExhaustedError as e:
            record = RoutingDecision(
                request_id=request_id,
                task_category=detection.category,
                stage=detection.stage.value,
                precision=decision.precision,
                variant_id="",
                mode=snap.mode,
                rationale=decision.rationale,
                expected_rel_score_drop=decision.expected_rel_score_drop,
                expected_rel_gain=decision.expected_rel_gain,
            )
            _journal_safe(state, EventKind.DECISION, record.to_json())
            return _error(503, str(e), request_id=request_id)

        variant = state.pool.get(variant_id)
        record = RoutingDecision(
            request_id=request_id,
            task_category=detection.category,
            stage=detection.stage.value,
            precision=variant.precision,
            variant_id=variant_id,
            mode=snap.mode,
            rationale=decision.rationale,
            expected_rel_score_drop=decision.expected_rel_score_drop,
            expected_rel_gain=decision.expected_rel_gain,
        )

        overhead_start = time.perf_counter() - t0
        try:
            result = forward(state.pool, variant, body, config.forward_timeout_s)
        except (UpstreamTimeoutError, UpstreamDownError, ProtocolError) as e:
            _journal_safe(state, EventKind.DECISION, record.to_json())
            return _error(502, str(e), variant_id=variant_id, request_id=request_id)

        profile = snap.profiles.get(detection.category)
        cost = forwarded_cost(result, variant)
        baseline_cost, baseline_latency = _baseline_costs(state, result, variant, profile)

        decision_payload = record.to_json()
        decision_payload["overhead_s"] = overhead_start
        _journal_safe(state, EventKind.DECISION, decision_payload)
        _journal_safe(
            state,
            EventKind.UPSTREAM,
            {
                "request_id": request_id,
                "variant_id": variant_id,
                "tokens_in": result.tokens_in,
                "tokens_out": result.tokens_out,
                "tokens_estimated": result.tokens_estimated,
                "cost_usd": cost,
                "baseline_cost_usd": baseline_cost,
                "latency_s": result.total_latency_s,
                "baseline_latency_s": baseline_latency,
                "ttft_s": result.ttft_s,
                "upstream_status": result.upstream_status,
            },
        )
        headers = {
            HEADER_PREFIX + "Request-Id": request_id,
            HEADER_PREFIX + "Task": detection.category,
            HEADER_PREFIX + "Stage": detection.stage.value,
            HEADER_PREFIX + "Precision": variant.precision.name,
            HEADER_PREFIX + "Variant": variant_id,
            HEADER_PREFIX + "Mode": snap.mode.value,
            HEADER_PREFIX + "Rationale": decision.rationale.value,
        }
        return JSONResponse(content=result.response_body, headers=headers)

    # --- admin -----------------------------------------------------------
    def _admin_guard(request: Request):
        if not authorized(request):
            return _error(401, "invalid or missing admin token")
        return None

    @app.get("/admin/mode")
    async def get_mode(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        return {"mode": state.snapshot.mode.value}

    @app.post("/admin/mode")
    async def set_mode(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        body = await request.json()
        try:
            mode = RoutingMode.parse(body.get("mode", ""))
        except ValidationError as e:
            return _error(422, str(e))
        state.swap(mode=mode)
        _journal_safe(state, EventKind.ADMIN, {"action": "set_mode", "mode": mode.value})
        return {"mode": mode.value}

    @app.get("/admin/overrides")
    async def get_overrides(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        return {
            "overrides": {
                c: p.name for c, p in state.snapshot.policy.overrides.items()
            }
        }

    @app.post("/admin/overrides")
    async def set_override(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        body = await request.json()
        try:
            category = config.registry.validate(body.get("category", ""))
            if body.get("precision") is None:
                policy = state.snapshot.policy.without_override(category)
                action = "clear_override"
                precision_name = None
            else:
                precision = PrecisionLevel.parse(body["precision"])
                if precision.bit_width not in {
                    p.bit_width for p in state.pool.precisions()
                }:
                    raise ValidationError(
                        f"precision {precision.name} is not served by the pool"
                    )
                policy = state.snapshot.policy.with_override(category, precision)
                action = "set_override"
                precision_name = precision.name
        except (ValidationError, QuantClawError) as e:
            return _error(422, str(e))
        state.swap(policy=policy)
        _journal_safe(
            state,
            EventKind.ADMIN,
            {"action": action, "category": category, "precision": precision_name},
        )
        return {"overrides": {c: p.name for c, p in policy.overrides.items()}}

    @app.get("/admin/profiles")
    async def get_profiles(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        from .profiles import profiles_to_json

        return profiles_to_json(state.snapshot.profiles)

    @app.get("/admin/pool")
    async def get_pool(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        return {"variants": state.pool.snapshot_health()}

    @app.post("/admin/reload")
    async def reload(request: Request):
        if (err := _admin_guard(request)) is not None:
            return err
        try:
            profiles = load_profiles(config.profiles_path)
            rules = RuleSet.load(config.rules_path, config.registry)
        except QuantClawError as e:
            return _error(422, f"reload rejected, previous snapshot still serving: {e}")
        state.swap(profiles=profiles, rules=rules)
        _journal_safe(state, EventKind.ADMIN, {"action": "reload"})
        return {"status": "reloaded"}

    # --- observability ----------------------------------------------------
    @app.get("/metrics")
    async def metrics(from_seq: int = 0, to_seq: int | None = None):
        snap = aggregate(state.journal.events(), from_seq=from_seq, to_seq=to_seq)
        return snap.to_json()

    @app.get("/events")
    async def events(from_seq: int = 0, limit: int = 100):
        page = state.journal.events(from_seq=from_seq)[:limit]
        return {"events": [e.to_json() for e in page], "max_seq": state.journal.max_seq}

    @app.get("/events/stream")
    async def events_stream(request: Request, from_seq: int = 0):
        head = state.journal.max_seq + 1
        if from_seq > head:
            return _error(416, f"from_seq {from_seq} is beyond head {head}")

        async def gen():
            import anyio

            cursor = from_seq
            while True:
                if await request.is_disconnected():
                    return
                batch = state.journal.events(from_seq=cursor)
                for event in batch:
                    yield f"id: {event.seq}\ndata: {json.dumps(event.to_json())}\n\n"
                    cursor = event.seq + 1
                await anyio.sleep(0.1)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app


def _journal_safe(state: GatewayState, kind: EventKind, payload: dict) -> None:
    # Observability is best-effort; routing never fails on journal faults.
    try:
        state.journal.append(kind, payload)
    except TelemetryError:
        pass
