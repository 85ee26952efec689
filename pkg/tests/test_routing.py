import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantclaw.errors import ConfigError, PoolExhaustedError
from quantclaw.pool import Health, ModelPool, ModelVariant
from quantclaw.profiles import (
    PrecisionLevel,
    PricePair,
    ProfileSet,
    SensitivityGroup,
    VariantMetrics,
    build_profile,
)
from quantclaw.routing import (
    PolicyConfig,
    Rationale,
    RoutingMode,
    decide,
    select_variant,
)

POOL_PRECISIONS = [PrecisionLevel.BF16, PrecisionLevel.INT4]


def make_profiles(**tasks) -> ProfileSet:
    """tasks: category -> (high_score, low_score, high_lat, low_lat, high_cost, low_cost)"""
    profiles = {}
    for cat, (hs, ls, hl, ll, hc, lc) in tasks.items():
        profiles[cat] = build_profile(
            cat,
            VariantMetrics(hs, cost_usd=hc, latency_s=hl),
            VariantMetrics(ls, cost_usd=lc, latency_s=ll),
        )
    return ProfileSet(unit="fraction", profiles=profiles)


@pytest.fixture
def profiles():
    return make_profiles(
        code=(0.82, 0.74, 62, 54, 0.012, 0.0096),        # rel 0.0976 -> High
        research=(0.70, 0.705, 70, 61, 0.015, 0.012),    # negative  -> Low
        rewriting=(0.75, 0.744, 30, 26, 0.007, 0.0056),  # rel 0.008 -> Moderate
    )


class TestDecide:
    def test_high_sensitivity_routes_high(self, profiles):
        d = decide("code", profiles, RoutingMode.LATENCY_ORIENTED, PolicyConfig(), POOL_PRECISIONS)
        assert d.precision is PrecisionLevel.BF16
        assert d.rationale is Rationale.HIGH_SENSITIVITY

    def test_low_sensitivity_routes_low(self, profiles):
        d = decide("research", profiles, RoutingMode.COST_ORIENTED, PolicyConfig(), POOL_PRECISIONS)
        assert d.precision is PrecisionLevel.INT4
        assert d.rationale is Rationale.LOW_SENSITIVITY

    def test_moderate_mode_evaluation_goes_low(self, profiles):
        # rel drop 0.8% <= eps 1%; latency gain (30-26)/30 = 13.3% >= tau 5%
        d = decide(
            "rewriting", profiles, RoutingMode.LATENCY_ORIENTED, PolicyConfig(), POOL_PRECISIONS
        )
        assert d.precision is PrecisionLevel.INT4
        assert d.rationale is Rationale.MODE_EVALUATION
        assert d.expected_rel_score_drop == pytest.approx(0.008)
        assert d.expected_rel_gain == pytest.approx(4 / 30)

    def test_moderate_stays_high_when_gain_too_small(self, profiles):
        policy = PolicyConfig(tau_latency=0.5)
        d = decide(
            "rewriting", profiles, RoutingMode.LATENCY_ORIENTED, policy, POOL_PRECISIONS
        )
        assert d.precision is PrecisionLevel.BF16
        assert d.rationale is Rationale.MODE_EVALUATION

    def test_unknown_category_defaults_high(self, profiles):
        d = decide("mystery", profiles, RoutingMode.COST_ORIENTED, PolicyConfig(), POOL_PRECISIONS)
        assert d.precision is PrecisionLevel.BF16
        assert d.rationale is Rationale.NO_PROFILE_DEFAULT

    def test_override_beats_everything(self, profiles):
        policy = PolicyConfig(overrides={"research": PrecisionLevel.BF16})
        d = decide("research", profiles, RoutingMode.COST_ORIENTED, policy, POOL_PRECISIONS)
        assert d.precision is PrecisionLevel.BF16
        assert d.rationale is Rationale.OVERRIDE_RULE

    def test_clearing_override_restores_group_rule(self, profiles):
        policy = PolicyConfig(overrides={"research": PrecisionLevel.BF16})
        restored = policy.without_override("research")
        d = decide("research", profiles, RoutingMode.COST_ORIENTED, restored, POOL_PRECISIONS)
        assert d.rationale is Rationale.LOW_SENSITIVITY

    def test_epsilon_monotonicity(self, profiles):
        # raising epsilon never flips a Moderate decision from low to high
        for mode in RoutingMode:
            previous_low = False
            for eps in (0.0, 0.002, 0.004, 0.01, 0.5):
                d = decide(
                    "rewriting", profiles, mode, PolicyConfig(epsilon_score=eps), POOL_PRECISIONS
                )
                is_low = d.precision is PrecisionLevel.INT4
                assert not (previous_low and not is_low)
                previous_low = is_low

    def test_policy_threshold_validation(self):
        with pytest.raises(ConfigError):
            PolicyConfig(epsilon_score=1.5)


def brute_force_decide(category, profiles, mode, policy, precisions):
    """Independent restatement of the precedence rules, written as one chain."""
    highest = max(precisions, key=lambda p: p.bit_width)
    lowest = min(precisions, key=lambda p: p.bit_width)
    if category in policy.overrides:
        return policy.overrides[category], Rationale.OVERRIDE_RULE
    p = profiles.get(category)
    if p is None:
        return highest, Rationale.NO_PROFILE_DEFAULT
    if p.group is SensitivityGroup.HIGH:
        return highest, Rationale.HIGH_SENSITIVITY
    if p.group is SensitivityGroup.LOW:
        return lowest, Rationale.LOW_SENSITIVITY
    if mode is RoutingMode.LATENCY_ORIENTED:
        gain = (p.high.latency_s - p.low.latency_s) / p.high.latency_s if p.high.latency_s else 0
        tau = policy.tau_latency
    else:
        gain = (p.high.cost_usd - p.low.cost_usd) / p.high.cost_usd if p.high.cost_usd else 0
        tau = policy.tau_cost
    if p.rel_degradation <= policy.epsilon_score and gain >= tau:
        return lowest, Rationale.MODE_EVALUATION
    return highest, Rationale.MODE_EVALUATION


class TestPrecedenceGrid:
    def test_exhaustive_grid_matches_brute_force(self):
        # categories covering each group, plus one absent category
        grid_profiles = make_profiles(
            hi_task=(0.8, 0.7, 60, 50, 0.01, 0.008),     # High
            mid_task=(0.8, 0.794, 60, 50, 0.01, 0.008),  # Moderate (rel 0.0075)
            lo_task=(0.8, 0.81, 60, 50, 0.01, 0.008),    # Low
        )
        categories = ["hi_task", "mid_task", "lo_task", "absent_task"]
        override_choices = [
            {},
            {c: p for c in categories for p in [PrecisionLevel.INT4]},
            {c: p for c in categories for p in [PrecisionLevel.BF16]},
        ]
        # epsilon/tau at and around the moderate task's rel drop and gains
        eps_values = [0.0, 0.0075, 0.0076, 0.02]
        tau_values = [0.0, 1 / 6, 0.167, 0.2, 0.99]
        cases = 0
        for cat, mode, overrides, eps, tau in itertools.product(
            categories, RoutingMode, override_choices, eps_values, tau_values
        ):
            policy = PolicyConfig(
                epsilon_score=eps, tau_latency=tau, tau_cost=tau, overrides=overrides
            )
            got = decide(cat, grid_profiles, mode, policy, POOL_PRECISIONS)
            want_prec, want_rat = brute_force_decide(
                cat, grid_profiles, mode, policy, POOL_PRECISIONS
            )
            assert got.precision is want_prec, (cat, mode, overrides, eps, tau)
            assert got.rationale is want_rat, (cat, mode, overrides, eps, tau)
            cases += 1
        assert cases == len(categories) * 2 * 3 * len(eps_values) * len(tau_values)

    @given(
        st.floats(min_value=0, max_value=0.99),
        st.floats(min_value=0, max_value=0.99),
        st.sampled_from(list(RoutingMode)),
        st.sampled_from(["hi_task", "mid_task", "lo_task", "absent"]),
        st.booleans(),
    )
    def test_randomized_agreement(self, eps, tau, mode, category, with_override):
        grid_profiles = make_profiles(
            hi_task=(0.8, 0.7, 60, 50, 0.01, 0.008),
            mid_task=(0.8, 0.794, 60, 50, 0.01, 0.008),
            lo_task=(0.8, 0.81, 60, 50, 0.01, 0.008),
        )
        overrides = {category: PrecisionLevel.INT4} if with_override else {}
        policy = PolicyConfig(
            epsilon_score=eps, tau_latency=tau, tau_cost=tau, overrides=overrides
        )
        got = decide(category, grid_profiles, mode, policy, POOL_PRECISIONS)
        want_prec, want_rat = brute_force_decide(
            category, grid_profiles, mode, policy, POOL_PRECISIONS
        )
        assert got.precision is want_prec
        assert got.rationale is want_rat


def make_pool():
    prices = PricePair(2.0, 6.0)
    return ModelPool(
        [
            ModelVariant("v16-a", "m", PrecisionLevel.BF16, "http://x/16a", prices),
            ModelVariant("v16-b", "m2", PrecisionLevel.BF16, "http://x/16b", prices),
            ModelVariant("v8-a", "m", PrecisionLevel.FP8, "http://x/8a", prices),
            ModelVariant("v4-a", "m", PrecisionLevel.INT4, "http://x/4a", prices),
        ]
    )


class TestSelectVariant:
    def test_exact_precision_match(self):
        pool = make_pool()
        assert select_variant(PrecisionLevel.INT4, pool) == "v4-a"

    def test_nearest_higher_when_unhealthy(self):
        pool = make_pool()
        pool.mark("v4-a", Health.DOWN)
        assert select_variant(PrecisionLevel.INT4, pool) == "v8-a"

    def test_lowest_id_among_equals(self):
        pool = make_pool()
        assert select_variant(PrecisionLevel.BF16, pool) == "v16-a"

    def test_degraded_still_selectable(self):
        pool = make_pool()
        pool.mark("v4-a", Health.DEGRADED)
        assert select_variant(PrecisionLevel.INT4, pool) == "v4-a"

    def test_pool_exhausted(self):
        pool = make_pool()
        for vid in ("v16-a", "v16-b", "v8-a", "v4-a"):
            pool.mark(vid, Health.DOWN)
        with pytest.raises(PoolExhaustedError):
            select_variant(PrecisionLevel.INT4, pool)

    def test_never_lower_than_requested(self):
        pool = make_pool()
        pool.mark("v16-a", Health.DOWN)
        pool.mark("v16-b", Health.DOWN)
        with pytest.raises(PoolExhaustedError):
            select_variant(PrecisionLevel.BF16, pool)
