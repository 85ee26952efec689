"""Precision routing: category + profiles + mode + overrides -> precision.

Precedence: operator override, then sensitivity group, then mode
evaluation for moderate tasks, then a high-precision default when no
profile exists. `decide` is pure and total over valid inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ConfigError, PoolExhaustedError, ValidationError
from .profiles import PrecisionLevel, ProfileSet, SensitivityGroup

DEFAULT_EPSILON_SCORE = 0.01
DEFAULT_TAU_LATENCY = 0.05
DEFAULT_TAU_COST = 0.05


class RoutingMode(Enum):
    LATENCY_ORIENTED = "latency"
    COST_ORIENTED = "cost"

    @classmethod
    def parse(cls, name: str) -> "RoutingMode":
        for mode in cls:
            if name.lower() in (mode.value, mode.name.lower()):
                return mode
        raise ValidationError(f"unknown routing mode: {name!r}")


class Rationale(Enum):
    OVERRIDE_RULE = "override-rule"
    HIGH_SENSITIVITY = "high-sensitivity"
    LOW_SENSITIVITY = "low-sensitivity"
    MODE_EVALUATION = "mode-evaluation"
    NO_PROFILE_DEFAULT = "no-profile-default"


@dataclass(frozen=True)
class PolicyConfig:
    epsilon_score: float = DEFAULT_EPSILON_SCORE
    tau_latency: float = DEFAULT_TAU_LATENCY
    tau_cost: float = DEFAULT_TAU_COST
    overrides: dict[str, PrecisionLevel] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("epsilon_score", "tau_latency", "tau_cost"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")

    def with_override(self, category: str, precision: PrecisionLevel) -> "PolicyConfig":
        merged = dict(self.overrides)
        merged[category] = precision
        return replace(self, overrides=merged)

    def without_override(self, category: str) -> "PolicyConfig":
        merged = {c: p for c, p in self.overrides.items() if c != category}
        return replace(self, overrides=merged)


@dataclass(frozen=True)
class Decision:
    precision: PrecisionLevel
    rationale: Rationale
    expected_rel_score_drop: float | None = None
    expected_rel_gain: float | None = None


@dataclass(frozen=True)
class RoutingDecision:
    """Audit record of one routed request."""

    request_id: str
    task_category: str
    stage: str
    precision: PrecisionLevel
    variant_id: str
    mode: RoutingMode
    rationale: Rationale
    expected_rel_score_drop: float | None
    expected_rel_gain: float | None
    timestamp: float = field(default_factory=time.time)

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "task_category": self.task_category,
            "stage": self.stage,
            "precision": self.precision.name,
            "variant_id": self.variant_id,
            "mode": self.mode.value,
            "rationale": self.rationale.value,
            "expected_rel_score_drop": self.expected_rel_score_drop,
            "expected_rel_gain": self.expected_rel_gain,
            "timestamp": self.timestamp,
        }


def _relative_gain(profile, mode: RoutingMode) -> float:
    if mode is RoutingMode.LATENCY_ORIENTED:
        base = profile.high.latency_s
        low = profile.low.latency_s
    else:
        base = profile.high.cost_usd
        low = profile.low.cost_usd
    if base <= 0:
        return 0.0
    return (base - low) / base


def decide(
    category: str,
    profiles: ProfileSet,
    mode: RoutingMode,
    policy: PolicyConfig,
    pool_precisions: list[PrecisionLevel],
) -> Decision:
    """Choose a precision level for a task category.

    pool_precisions is the set of precisions the pool can serve; "high"
    and "low" mean its extremes by bit width.
    """
    if not pool_precisions:
        raise ConfigError("pool offers no precision levels")
    highest = max(pool_precisions, key=lambda p: p.bit_width)
    lowest = min(pool_precisions, key=lambda p: p.bit_width)

    if category in policy.overrides:
        return Decision(policy.overrides[category], Rationale.OVERRIDE_RULE)

    profile = profiles.get(category)
    if profile is None:
        return Decision(highest, Rationale.NO_PROFILE_DEFAULT)

    gain = _relative_gain(profile, mode)
    if profile.group is SensitivityGroup.HIGH:
        return Decision(highest, Rationale.HIGH_SENSITIVITY, profile.rel_degradation, gain)
    if profile.group is SensitivityGroup.LOW:
        return Decision(lowest, Rationale.LOW_SENSITIVITY, profile.rel_degradation, gain)

    tau = policy.tau_latency if mode is RoutingMode.LATENCY_ORIENTED else policy.tau_cost
    go_low = profile.rel_degradation <= policy.epsilon_score and gain >= tau
    return Decision(
        lowest if go_low else highest,
        Rationale.MODE_EVALUATION,
        profile.rel_degradation,
        gain,
    )


def select_variant(precision: PrecisionLevel, pool) -> str:
    """Pick a servable variant: exact precision first, else nearest higher.

    Deterministic among equals (lowest variant id). Down variants never
    qualify; see model pool health rules.
    """
    candidates = pool.selectable()
    exact = [v for v in candidates if v.precision.bit_width == precision.bit_width]
    if exact:
        return min(exact, key=lambda v: v.variant_id).variant_id
    higher = [v for v in candidates if v.precision.bit_width > precision.bit_width]
    if higher:
        nearest_bits = min(v.precision.bit_width for v in higher)
        at_nearest = [v for v in higher if v.precision.bit_width == nearest_bits]
        return min(at_nearest, key=lambda v: v.variant_id).variant_id
    raise PoolExhaustedError(
        f"no healthy variant at or above {precision.name} ({precision.bit_width}-bit)"
    )
