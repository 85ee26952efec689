"""quantclaw: task-aware precision routing for quantized model pools."""

from .profiles import (
    PrecisionLevel,
    SensitivityGroup,
    average_throughput_gain,
    classify_sensitivity,
    discounted_price,
    fit_power_law,
    predict_delta,
    relative_degradation,
    request_cost,
    slo_pass_rate,
)
from .routing import PolicyConfig, Rationale, RoutingMode, decide, select_variant

__version__ = "0.1.0"

__all__ = [
    "PrecisionLevel",
    "SensitivityGroup",
    "PolicyConfig",
    "Rationale",
    "RoutingMode",
    "average_throughput_gain",
    "classify_sensitivity",
    "decide",
    "discounted_price",
    "fit_power_law",
    "predict_delta",
    "relative_degradation",
    "request_cost",
    "select_variant",
    "slo_pass_rate",
]
