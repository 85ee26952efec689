"""Sensitivity profiles and the quantitative analytics behind routing.

Covers degradation arithmetic, sensitivity grouping, power-law scaling
fits, token pricing, and throughput/SLO statistics. Everything here is a
pure function over immutable inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ConfigError, DomainError, InsufficientDataError, ValidationError

DEFAULT_T_LOW = 0.005
DEFAULT_T_HIGH = 0.02


class PrecisionLevel(Enum):
    """Numeric format of a servable model variant, ordered by bit width."""

    BF16 = ("BF16", 16)
    FP8 = ("FP8", 8)
    INT8 = ("INT8", 8)
    INT4 = ("INT4", 4)
    NVFP4 = ("NVFP4", 4)

    def __init__(self, label: str, bits: int):
        self.label = label
        self.bit_width = bits

    @classmethod
    def parse(cls, name: str) -> "PrecisionLevel":
        try:
            return cls[name.upper().replace("-", "_")]
        except KeyError:
            raise ConfigError(f"unknown precision level: {name!r}")


class SensitivityGroup(Enum):
    HIGH = "high"
    MODERATE = "moderate"
    LOW = "low"


@dataclass(frozen=True)
class VariantMetrics:
    """Score / cost / latency triplet for one precision arm of a task."""

    score: float
    cost_usd: float = 0.0
    latency_s: float = 0.0

    def __post_init__(self):
        if self.cost_usd < 0:
            raise ValidationError(f"cost_usd must be >= 0, got {self.cost_usd}")
        if self.latency_s < 0:
            raise ValidationError(f"latency_s must be >= 0, got {self.latency_s}")


@dataclass(frozen=True)
class SensitivityProfile:
    task_category: str
    high: VariantMetrics
    low: VariantMetrics
    rel_degradation: float
    group: SensitivityGroup


@dataclass(frozen=True)
class DegradationPoint:
    """One (model size, score gap) observation feeding the scaling fit."""

    model_id: str
    n_params_b: float
    delta: float

    def __post_init__(self):
        if self.n_params_b <= 0:
            raise ValidationError(
                f"{self.model_id}: n_params_b must be positive, got {self.n_params_b}"
            )


@dataclass(frozen=True)
class ScalingFit:
    """Power-law coefficients for delta = a * N**b, fitted in log-log space."""

    a: float
    b: float
    r_squared: float
    points_used: int
    points_excluded: int = 0


@dataclass(frozen=True)
class PricePair:
    """Dollars per million tokens, input and output rates."""

    input_per_mtok: float
    output_per_mtok: float

    def __post_init__(self):
        if self.input_per_mtok < 0 or self.output_per_mtok < 0:
            raise ValidationError("per-Mtok prices must be >= 0")


@dataclass(frozen=True)
class PricingRule:
    high_price: PricePair
    discount_factor: float


@dataclass(frozen=True)
class ThroughputRow:
    input_len: int
    output_len: int
    high_tps: float
    low_tps: float

    def __post_init__(self):
        for name in ("input_len", "output_len", "high_tps", "low_tps"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")

    @property
    def gain(self) -> float:
        return (self.low_tps - self.high_tps) / self.high_tps


def relative_degradation(high_score: float, low_score: float, label: str = "") -> float:
    """(high - low) / high; negative means low precision scored higher."""
    if high_score <= 0:
        where = f" for {label!r}" if label else ""
        raise DomainError(f"high_score must be positive{where}, got {high_score}")
    return (high_score - low_score) / high_score


def classify_sensitivity(
    rel_degradation: float,
    t_low: float = DEFAULT_T_LOW,
    t_high: float = DEFAULT_T_HIGH,
) -> SensitivityGroup:
    """Bucket a relative degradation into High / Moderate / Low.

    High is inclusive at t_high, Low is inclusive at t_low.
    """
    if t_low >= t_high:
        raise ConfigError(f"thresholds must satisfy t_low < t_high, got ({t_low}, {t_high})")
    if rel_degradation >= t_high:
        return SensitivityGroup.HIGH
    if rel_degradation <= t_low:
        return SensitivityGroup.LOW
    return SensitivityGroup.MODERATE


def fit_power_law(points: list[DegradationPoint]) -> ScalingFit:
    """Ordinary least squares on (ln N, ln delta) over strictly positive deltas.

    Non-positive deltas cannot enter the log domain; they are excluded and
    counted, never silently dropped.
    """
    included = [p for p in points if p.delta > 0]
    excluded = [p for p in points if p.delta <= 0]
    if len(included) < 2:
        raise InsufficientDataError(
            f"need at least 2 points with delta > 0, got {len(included)} "
            f"(excluded: {[p.model_id for p in excluded]})",
            excluded=excluded,
        )
    xs = [math.log(p.n_params_b) for p in included]
    ys = [math.log(p.delta) for p in included]
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise InsufficientDataError("all points share one model size; slope is undefined")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    b = sxy / sxx
    intercept = my - b * mx
    ss_res = sum((y - (intercept + b * x)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingFit(
        a=math.exp(intercept),
        b=b,
        r_squared=r2,
        points_used=n,
        points_excluded=len(excluded),
    )


def predict_delta(fit: ScalingFit, n_params_b: float) -> float:
    if n_params_b <= 0:
        raise DomainError(f"n_params_b must be positive, got {n_params_b}")
    return fit.a * n_params_b**fit.b


def discounted_price(rule: PricingRule) -> PricePair:
    """Scale both per-Mtok rates by the discount factor."""
    f = rule.discount_factor
    if not 0 < f <= 1:
        raise ConfigError(f"discount_factor must be in (0, 1], got {f}")
    return PricePair(
        input_per_mtok=rule.high_price.input_per_mtok * f,
        output_per_mtok=rule.high_price.output_per_mtok * f,
    )


def request_cost(tokens_in: int, tokens_out: int, prices: PricePair) -> float:
    """Linear token pricing in dollars; rates are per million tokens."""
    if tokens_in < 0 or tokens_out < 0:
        raise DomainError("token counts must be >= 0")
    return (
        tokens_in * prices.input_per_mtok + tokens_out * prices.output_per_mtok
    ) / 1_000_000


def average_throughput_gain(rows: list[ThroughputRow]) -> float:
    """Unweighted mean of per-row (low - high) / high throughput gains."""
    if not rows:
        raise InsufficientDataError("no throughput rows")
    return sum(r.gain for r in rows) / len(rows)


def slo_pass_rate(
    samples: list[tuple[float, float]], ttft_limit_ms: float, tpot_limit_ms: float
) -> float:
    """Fraction of (ttft_ms, tpot_ms) samples meeting both limits at once."""
    if ttft_limit_ms <= 0 or tpot_limit_ms <= 0:
        raise ConfigError("SLO limits must be positive")
    if not samples:
        raise InsufficientDataError("no latency samples")
    passing = sum(1 for ttft, tpot in samples if ttft <= ttft_limit_ms and tpot <= tpot_limit_ms)
    return passing / len(samples)


SLO_MEETS_FRACTION = 0.90


def meets_slo(rate: float) -> bool:
    return rate >= SLO_MEETS_FRACTION


@dataclass(frozen=True)
class ProfileSet:
    """A loaded profile dataset: per-category profiles plus pricing."""

    unit: str
    profiles: dict[str, SensitivityProfile]
    pricing: PricingRule | None = None
    thresholds: tuple[float, float] = (DEFAULT_T_LOW, DEFAULT_T_HIGH)

    def get(self, category: str) -> SensitivityProfile | None:
        return self.profiles.get(category)


def build_profile(
    category: str,
    high: VariantMetrics,
    low: VariantMetrics,
    t_low: float = DEFAULT_T_LOW,
    t_high: float = DEFAULT_T_HIGH,
) -> SensitivityProfile:
    rel = relative_degradation(high.score, low.score, label=category)
    return SensitivityProfile(
        task_category=category,
        high=high,
        low=low,
        rel_degradation=rel,
        group=classify_sensitivity(rel, t_low, t_high),
    )


def _metrics_from_json(obj: dict, where: str) -> VariantMetrics:
    try:
        return VariantMetrics(
            score=float(obj["score"]),
            cost_usd=float(obj.get("cost_usd", 0.0)),
            latency_s=float(obj.get("latency_s", 0.0)),
        )
    except KeyError as e:
        raise ValidationError(f"{where}: missing field {e}")


def pricing_from_json(obj: dict) -> PricingRule:
    try:
        high = PricePair(
            input_per_mtok=float(obj["high_price"]["input_per_mtok"]),
            output_per_mtok=float(obj["high_price"]["output_per_mtok"]),
        )
        factor = float(obj["discount_factor"])
    except KeyError as e:
        raise ValidationError(f"pricing: missing field {e}")
    if not 0 < factor <= 1:
        raise ConfigError(f"discount_factor must be in (0, 1], got {factor}")
    return PricingRule(high_price=high, discount_factor=factor)


def load_profiles(path: str | Path) -> ProfileSet:
    """Load a profiles JSON file: {unit, tasks: [...], pricing: {...}}."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot load profiles from {path}: {e}")
    return profiles_from_json(data, where=str(path))


def profiles_from_json(data: dict, where: str = "profiles") -> ProfileSet:
    unit = data.get("unit", "fraction")
    if unit not in ("fraction", "percent"):
        raise ValidationError(f"{where}: unit must be 'fraction' or 'percent', got {unit!r}")
    thresholds = data.get("thresholds", {})
    t_low = float(thresholds.get("t_low", DEFAULT_T_LOW))
    t_high = float(thresholds.get("t_high", DEFAULT_T_HIGH))
    profiles: dict[str, SensitivityProfile] = {}
    for task in data.get("tasks", []):
        cat = task.get("category")
        if not cat:
            raise ValidationError(f"{where}: task entry missing category")
        if cat in profiles:
            raise ValidationError(f"{where}: duplicate category {cat!r}")
        for arm in ("high", "low"):
            if arm not in task:
                raise ValidationError(f"{where}: task {cat!r} missing {arm!r} arm")
        profiles[cat] = build_profile(
            cat,
            _metrics_from_json(task["high"], f"{where}:{cat}:high"),
            _metrics_from_json(task["low"], f"{where}:{cat}:low"),
            t_low,
            t_high,
        )
    pricing = pricing_from_json(data["pricing"]) if "pricing" in data else None
    return ProfileSet(unit=unit, profiles=profiles, pricing=pricing, thresholds=(t_low, t_high))


def _aggregate_trials(trials: list[dict], where: str) -> tuple[VariantMetrics, float]:
    """Mean metrics across trials, plus the best (max) score."""
    if not trials:
        raise ValidationError(f"{where}: no trials")
    scores = [float(t["score"]) for t in trials]
    costs = [float(t.get("cost_usd", 0.0)) for t in trials]
    lats = [float(t.get("latency_s", 0.0)) for t in trials]
    n = len(trials)
    mean = VariantMetrics(
        score=sum(scores) / n, cost_usd=sum(costs) / n, latency_s=sum(lats) / n
    )
    return mean, max(scores)


def build_profiles_from_results(data: dict, where: str = "results") -> tuple[ProfileSet, dict]:
    """Aggregate per-trial benchmark results into a loadable profile set.

    Each task needs both precision arms with at least one trial. Returns
    the profile set plus a per-category best-of-trials record (mirroring
    Best / Avg reporting).
    """
    unit = data.get("unit", "fraction")
    thresholds = data.get("thresholds", {})
    t_low = float(thresholds.get("t_low", DEFAULT_T_LOW))
    t_high = float(thresholds.get("t_high", DEFAULT_T_HIGH))
    profiles: dict[str, SensitivityProfile] = {}
    best: dict[str, dict] = {}
    for task in data.get("tasks", []):
        cat = task.get("category")
        if not cat:
            raise ValidationError(f"{where}: task entry missing category")
        for arm in ("high", "low"):
            if arm not in task or "trials" not in task[arm]:
                raise ValidationError(f"{where}: task {cat!r} missing {arm!r} trial arm")
        high_mean, high_best = _aggregate_trials(task["high"]["trials"], f"{where}:{cat}:high")
        low_mean, low_best = _aggregate_trials(task["low"]["trials"], f"{where}:{cat}:low")
        profiles[cat] = build_profile(cat, high_mean, low_mean, t_low, t_high)
        best[cat] = {"high_score": high_best, "low_score": low_best}
    pricing = pricing_from_json(data["pricing"]) if "pricing" in data else None
    pset = ProfileSet(
        unit=unit, profiles=profiles, pricing=pricing, thresholds=(t_low, t_high)
    )
    return pset, best


def profiles_to_json(pset: ProfileSet) -> dict:
    out: dict = {
        "unit": pset.unit,
        "thresholds": {"t_low": pset.thresholds[0], "t_high": pset.thresholds[1]},
        "tasks": [
            {
                "category": p.task_category,
                "high": {
                    "score": p.high.score,
                    "cost_usd": p.high.cost_usd,
                    "latency_s": p.high.latency_s,
                },
                "low": {
                    "score": p.low.score,
                    "cost_usd": p.low.cost_usd,
                    "latency_s": p.low.latency_s,
                },
                "rel_degradation": p.rel_degradation,
                "group": p.group.value,
            }
            for p in pset.profiles.values()
        ],
    }
    if pset.pricing is not None:
        out["pricing"] = {
            "high_price": {
                "input_per_mtok": pset.pricing.high_price.input_per_mtok,
                "output_per_mtok": pset.pricing.high_price.output_per_mtok,
            },
            "discount_factor": pset.pricing.discount_factor,
        }
    return out
