"""Replay simulator: expected score/cost/latency under three policies.

Compares all-high, all-low, and adaptive routing over a workload of
(category, tokens_in, tokens_out) rows, using profile metrics as
expectations. Fully deterministic: no sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .profiles import (
    PricePair,
    PricingRule,
    ProfileSet,
    discounted_price,
    request_cost,
)
from .routing import PolicyConfig, PrecisionLevel, Rationale, RoutingMode, decide

SIM_PRECISIONS = [PrecisionLevel.BF16, PrecisionLevel.INT4]


@dataclass(frozen=True)
class WorkloadRow:
    category: str
    tokens_in: int
    tokens_out: int


@dataclass
class PolicyTotals:
    requests: int = 0
    score_sum: float = 0.0
    scored_requests: int = 0
    cost_usd: float = 0.0
    latency_s: float = 0.0

    @property
    def avg_score(self) -> float:
        return self.score_sum / self.scored_requests if self.scored_requests else 0.0

    @property
    def avg_latency_s(self) -> float:
        return self.latency_s / self.requests if self.requests else 0.0

    def to_json(self) -> dict:
        return {
            "requests": self.requests,
            "avg_score": self.avg_score,
            "total_cost_usd": self.cost_usd,
            "total_latency_s": self.latency_s,
            "avg_latency_s": self.avg_latency_s,
        }


@dataclass
class SimulationReport:
    all_high: PolicyTotals
    all_low: PolicyTotals
    adaptive: PolicyTotals
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "all_high": self.all_high.to_json(),
            "all_low": self.all_low.to_json(),
            "adaptive": self.adaptive.to_json(),
            "warnings": self.warnings,
        }


def load_workload(path: str | Path) -> list[WorkloadRow]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            rows.append(
                WorkloadRow(
                    category=obj["category"],
                    tokens_in=int(obj["tokens_in"]),
                    tokens_out=int(obj["tokens_out"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ValidationError(f"{path}:{lineno}: bad workload record: {e}")
    return rows


def simulate(
    workload: list[WorkloadRow],
    profiles: ProfileSet,
    mode: RoutingMode,
    pricing: PricingRule | None = None,
    policy: PolicyConfig | None = None,
) -> SimulationReport:
    pricing = pricing or profiles.pricing
    if pricing is None:
        raise ValidationError("no pricing rule: pass one or include it in the profiles file")
    policy = policy or PolicyConfig()
    high_prices: PricePair = pricing.high_price
    low_prices = discounted_price(pricing)

    report = SimulationReport(PolicyTotals(), PolicyTotals(), PolicyTotals())
    for row in workload:
        profile = profiles.get(row.category)
        high_cost = request_cost(row.tokens_in, row.tokens_out, high_prices)
        low_cost = request_cost(row.tokens_in, row.tokens_out, low_prices)

        report.all_high.requests += 1
        report.all_high.cost_usd += high_cost
        report.all_low.requests += 1
        report.all_low.cost_usd += low_cost
        report.adaptive.requests += 1
        if profile is not None:
            report.all_high.score_sum += profile.high.score
            report.all_high.scored_requests += 1
            report.all_high.latency_s += profile.high.latency_s
            report.all_low.score_sum += profile.low.score
            report.all_low.scored_requests += 1
            report.all_low.latency_s += profile.low.latency_s

        decision = decide(row.category, profiles, mode, policy, SIM_PRECISIONS)
        routed_high = decision.precision.bit_width == max(
            p.bit_width for p in SIM_PRECISIONS
        )
        if decision.rationale is Rationale.NO_PROFILE_DEFAULT:
            report.warnings.append(
                f"category {row.category!r} has no profile; routed high by default"
            )
            report.adaptive.cost_usd += high_cost
            continue
        arm = profile.high if routed_high else profile.low
        report.adaptive.score_sum += arm.score
        report.adaptive.scored_requests += 1
        report.adaptive.cost_usd += high_cost if routed_high else low_cost
        report.adaptive.latency_s += arm.latency_s
    return report
