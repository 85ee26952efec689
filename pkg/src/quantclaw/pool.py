"""Registry of upstream model variants, forwarding, and health tracking."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum

import httpx

from .errors import (
    ConfigError,
    ProtocolError,
    UpstreamDownError,
    UpstreamTimeoutError,
)
from .profiles import PrecisionLevel, PricePair, request_cost

TOKEN_ESTIMATE_FACTOR = 1.3  # whitespace tokens undercount subword tokens


class Health(Enum):
    HEALTHY = "healthy"
    DEGRADED = "degraded"
    DOWN = "down"


@dataclass
class ModelVariant:
    variant_id: str
    model_id: str
    precision: PrecisionLevel
    endpoint_url: str
    prices: PricePair
    health: Health = Health.HEALTHY
    last_probe: float = 0.0


@dataclass(frozen=True)
class UpstreamResult:
    response_body: dict
    tokens_in: int
    tokens_out: int
    ttft_s: float
    total_latency_s: float
    upstream_status: int
    tokens_estimated: bool = False

    def __post_init__(self):
        if self.tokens_in < 0 or self.tokens_out < 0:
            raise ProtocolError("token counts must be >= 0")
        if self.ttft_s > self.total_latency_s:
            raise ProtocolError("ttft cannot exceed total latency")


class ModelPool:
    """Thread-safe variant registry. Down variants are never selectable."""

    def __init__(self, variants: list[ModelVariant] | None = None):
        self._lock = threading.Lock()
        self._variants: dict[str, ModelVariant] = {}
        for v in variants or []:
            self.register(v)

    def register(self, variant: ModelVariant) -> None:
        with self._lock:
            if variant.variant_id in self._variants:
                raise ConfigError(f"duplicate variant id: {variant.variant_id!r}")
            key = (variant.model_id, variant.precision.name)
            for other in self._variants.values():
                if (other.model_id, other.precision.name) == key:
                    raise ConfigError(f"duplicate (model, precision) pair: {key}")
            self._variants[variant.variant_id] = variant

    def remove(self, variant_id: str) -> None:
        with self._lock:
            self._variants.pop(variant_id, None)

    def get(self, variant_id: str) -> ModelVariant:
        with self._lock:
            if variant_id not in self._variants:
                raise ConfigError(f"unknown variant: {variant_id!r}")
            return self._variants[variant_id]

    def variants(self) -> list[ModelVariant]:
        with self._lock:
            return list(self._variants.values())

    def selectable(self) -> list[ModelVariant]:
        """Healthy or degraded variants; degraded stays in rotation."""
        return [v for v in self.variants() if v.health is not Health.DOWN]

    def precisions(self) -> list[PrecisionLevel]:
        return sorted(
            {v.precision for v in self.variants()}, key=lambda p: -p.bit_width
        )

    def mark(self, variant_id: str, health: Health) -> None:
        with self._lock:
            if variant_id in self._variants:
                self._variants[variant_id].health = health
                self._variants[variant_id].last_probe = time.time()

    def snapshot_health(self) -> dict:
        return {
            v.variant_id: {
                "model_id": v.model_id,
                "precision": v.precision.name,
                "health": v.health.value,
                "endpoint_url": v.endpoint_url,
                "last_probe": v.last_probe,
            }
            for v in self.variants()
        }


def _estimate_tokens(text: str) -> int:
    return int(round(len(text.split()) * TOKEN_ESTIMATE_FACTOR))


def _extract_text(payload: dict) -> str:
    parts = []
    for msg in payload.get("messages", []):
        content = msg.get("content", "")
        if isinstance(content, str):
            parts.append(content)
    return " ".join(parts)


def forward(
    pool: ModelPool,
    variant: ModelVariant,
    payload: dict,
    timeout_s: float = 30.0,
    bearer_token: str | None = None,
) -> UpstreamResult:
    """POST the chat payload to the variant and measure ttft / latency.

    Token counts come from the upstream usage block; when absent, a
    whitespace heuristic estimates them and the result is flagged.
    """
    headers = {"content-type": "application/json"}
    if bearer_token:
        headers["authorization"] = f"Bearer {bearer_token}"
    start = time.perf_counter()
    try:
        with httpx.Client(timeout=timeout_s) as client:
            with client.stream(
                "POST", variant.endpoint_url, json=payload, headers=headers
            ) as resp:
                ttft = None
                chunks = []
                for chunk in resp.iter_bytes():
                    if ttft is None:
                        ttft = time.perf_counter() - start
                    chunks.append(chunk)
                total = time.perf_counter() - start
                if ttft is None:
                    ttft = total
                status = resp.status_code
                raw = b"".join(chunks)
    except httpx.TimeoutException:
        pool.mark(variant.variant_id, Health.DEGRADED)
        raise UpstreamTimeoutError(
            f"variant {variant.variant_id} timed out after {timeout_s}s"
        )
    except httpx.ConnectError:
        pool.mark(variant.variant_id, Health.DOWN)
        raise UpstreamDownError(f"variant {variant.variant_id} refused connection")

    try:
        import json as _json

        body = _json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise ProtocolError(
            f"variant {variant.variant_id} returned a malformed body"
        )

    usage = body.get("usage") if isinstance(body, dict) else None
    if isinstance(usage, dict) and "prompt_tokens" in usage and "completion_tokens" in usage:
        tokens_in = int(usage["prompt_tokens"])
        tokens_out = int(usage["completion_tokens"])
        estimated = False
    else:
        tokens_in = _estimate_tokens(_extract_text(payload))
        reply = ""
        if isinstance(body, dict):
            for choice in body.get("choices", []):
                reply += choice.get("message", {}).get("content", "") or ""
        tokens_out = _estimate_tokens(reply)
        estimated = True

    return UpstreamResult(
        response_body=body,
        tokens_in=tokens_in,
        tokens_out=tokens_out,
        ttft_s=ttft,
        total_latency_s=total,
        upstream_status=status,
        tokens_estimated=estimated,
    )


def forwarded_cost(result: UpstreamResult, variant: ModelVariant) -> float:
    return request_cost(result.tokens_in, result.tokens_out, variant.prices)


def probe_health(pool: ModelPool, variant: ModelVariant, timeout_s: float = 2.0) -> Health:
    """Lightweight ping; every outcome maps to a health state, never an error."""
    try:
        with httpx.Client(timeout=timeout_s) as client:
            client.get(variant.endpoint_url)
        state = Health.HEALTHY
    except httpx.TimeoutException:
        state = Health.DEGRADED
    except httpx.HTTPError:
        state = Health.DOWN
    pool.mark(variant.variant_id, state)
    return state
