"""Gateway configuration loading. Startup fails loudly, naming the section."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .detection import CategoryRegistry, RuleSet, StubClassifier
from .errors import ConfigError
from .pool import ModelPool, ModelVariant
from .profiles import PrecisionLevel, PricePair, ProfileSet, load_profiles
from .routing import PolicyConfig, RoutingMode


@dataclass
class GatewayConfig:
    host: str
    port: int
    registry: CategoryRegistry
    rules_path: Path
    profiles_path: Path
    fallback_category: str
    classifier_settings: dict
    mode: RoutingMode
    policy: PolicyConfig
    pool: ModelPool
    forward_timeout_s: float
    journal_path: Path | None
    journal_max_bytes: int | None
    admin_token: str
    rules: RuleSet = field(repr=False, default=None)
    profiles: ProfileSet = field(repr=False, default=None)


def _require(data: dict, key: str, section: str):
    if key not in data:
        raise ConfigError(f"config section {section!r}: missing required field {key!r}")
    return data[key]


def _parse_variant(obj: dict, i: int) -> ModelVariant:
    section = f"pool.variants[{i}]"
    prices = _require(obj, "prices", section)
    return ModelVariant(
        variant_id=_require(obj, "variant_id", section),
        model_id=_require(obj, "model_id", section),
        precision=PrecisionLevel.parse(_require(obj, "precision", section)),
        endpoint_url=_require(obj, "endpoint_url", section),
        prices=PricePair(
            input_per_mtok=float(_require(prices, "input_per_mtok", section + ".prices")),
            output_per_mtok=float(_require(prices, "output_per_mtok", section + ".prices")),
        ),
    )


def build_classifier(settings: dict):
    backend = settings.get("backend", "none")
    if backend == "none":
        return None
    if backend == "stub":
        return StubClassifier(
            category=settings.get("category", "research"),
            confidence=float(settings.get("confidence", 0.9)),
        )
    if backend == "centroid":
        from .detection import CentroidClassifier, HashEmbeddingBackend

        seeds = settings.get("seeds")
        if not seeds:
            raise ConfigError("config section 'classifier': centroid backend needs 'seeds'")
        return CentroidClassifier(HashEmbeddingBackend(), seeds)
    raise ConfigError(f"config section 'classifier': unknown backend {backend!r}")


def load_config(path: str | Path) -> GatewayConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    base = path.parent

    listen = data.get("listen", {})
    host = listen.get("host", "127.0.0.1")
    port = int(listen.get("port", 8080))

    registry = CategoryRegistry(data.get("categories")) if "categories" in data else CategoryRegistry()

    rules_path = base / _require(data, "rules_path", "top-level")
    profiles_path = base / _require(data, "profiles_path", "top-level")
    rules = RuleSet.load(rules_path, registry)
    profiles = load_profiles(profiles_path)

    fallback = data.get("fallback_category", "unknown")
    if fallback not in registry:
        raise ConfigError(f"config section 'fallback_category': {fallback!r} not in registry")

    classifier_settings = data.get("classifier", {"backend": "none"})
    build_classifier(classifier_settings)  # validate eagerly

    policy_data = data.get("policy", {})
    mode = RoutingMode.parse(policy_data.get("mode", "latency"))
    overrides = {}
    for cat, prec in policy_data.get("overrides", {}).items():
        if cat not in registry:
            raise ConfigError(f"config section 'policy.overrides': unknown category {cat!r}")
        overrides[cat] = PrecisionLevel.parse(prec)
    policy = PolicyConfig(
        epsilon_score=float(policy_data.get("epsilon_score", 0.01)),
        tau_latency=float(policy_data.get("tau_latency", 0.05)),
        tau_cost=float(policy_data.get("tau_cost", 0.05)),
        overrides=overrides,
    )

    pool_data = _require(data, "pool", "top-level")
    variants = [_parse_variant(v, i) for i, v in enumerate(pool_data.get("variants", []))]
    if not variants:
        raise ConfigError("config section 'pool': at least one variant is required")
    pool = ModelPool(variants)
    for cat, prec in overrides.items():
        if prec.bit_width not in {v.precision.bit_width for v in variants}:
            raise ConfigError(
                f"config section 'policy.overrides': {cat!r} -> {prec.name} not served by pool"
            )

    telemetry = data.get("telemetry", {})
    journal_path = base / telemetry["journal_path"] if "journal_path" in telemetry else None
    max_bytes = telemetry.get("max_bytes")

    return GatewayConfig(
        host=host,
        port=port,
        registry=registry,
        rules_path=rules_path,
        profiles_path=profiles_path,
        fallback_category=fallback,
        classifier_settings=classifier_settings,
        mode=mode,
        policy=policy,
        pool=pool,
        forward_timeout_s=float(pool_data.get("forward_timeout_s", 30.0)),
        journal_path=journal_path,
        journal_max_bytes=max_bytes,
        admin_token=_require(data, "admin_token", "top-level"),
        rules=rules,
        profiles=profiles,
    )
