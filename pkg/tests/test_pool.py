import itertools

import pytest

from quantclaw.errors import ConfigError, UpstreamDownError, UpstreamTimeoutError
from quantclaw.pool import (
    Health,
    ModelPool,
    ModelVariant,
    forward,
    forwarded_cost,
    probe_health,
)
from quantclaw.profiles import PrecisionLevel, PricePair, request_cost
from quantclaw.stubserver import StubUpstream

PRICES = PricePair(2.0, 6.0)
PAYLOAD = {"model": "x", "messages": [{"role": "user", "content": "hello world"}]}


def make_variant(url: str) -> ModelVariant:
    return ModelVariant("v1", "m1", PrecisionLevel.BF16, url, PRICES)


@pytest.fixture
def pool_and_variant():
    def factory(url):
        v = make_variant(url)
        return ModelPool([v]), v

    return factory


class TestForward:
    def test_stub_echo_usage(self, pool_and_variant):
        with StubUpstream(usage=(100, 50)) as stub:
            pool, v = pool_and_variant(stub.url)
            result = forward(pool, v, PAYLOAD, timeout_s=5)
        assert result.tokens_in == 100
        assert result.tokens_out == 50
        assert result.tokens_estimated is False
        assert result.upstream_status == 200
        assert result.ttft_s <= result.total_latency_s

    def test_timeout_marks_degraded(self, pool_and_variant):
        with StubUpstream(delay_s=1.0) as stub:
            pool, v = pool_and_variant(stub.url)
            with pytest.raises(UpstreamTimeoutError):
                forward(pool, v, PAYLOAD, timeout_s=0.1)
            assert pool.get("v1").health is Health.DEGRADED

    def test_connection_refused_marks_down(self, pool_and_variant):
        pool, v = pool_and_variant("http://127.0.0.1:9/unused")
        with pytest.raises(UpstreamDownError):
            forward(pool, v, PAYLOAD, timeout_s=1)
        assert pool.get("v1").health is Health.DOWN

    def test_missing_usage_estimates_and_flags(self, pool_and_variant):
        with StubUpstream(usage=None, reply="four words in reply") as stub:
            pool, v = pool_and_variant(stub.url)
            result = forward(pool, v, PAYLOAD, timeout_s=5)
        assert result.tokens_estimated is True
        # whitespace count * 1.3: payload "hello world" -> 2 words -> 3
        assert result.tokens_in == 3
        assert result.tokens_out == 5  # 4 words * 1.3 = 5.2 -> 5

    def test_cost_matches_request_cost_exactly(self, pool_and_variant):
        with StubUpstream(usage=(1234, 567)) as stub:
            pool, v = pool_and_variant(stub.url)
            result = forward(pool, v, PAYLOAD, timeout_s=5)
        assert forwarded_cost(result, v) == request_cost(1234, 567, PRICES)


class TestProbeHealth:
    def test_responsive_stub_is_healthy(self, pool_and_variant):
        with StubUpstream() as stub:
            pool, v = pool_and_variant(stub.url)
            assert probe_health(pool, v) is Health.HEALTHY

    def test_stopped_stub_is_down(self, pool_and_variant):
        stub = StubUpstream().start()
        url = stub.url
        stub.stop()
        pool, v = pool_and_variant(url)
        assert probe_health(pool, v) is Health.DOWN

    def test_down_variant_recovers_after_restart(self, pool_and_variant):
        stub = StubUpstream().start()
        port = stub._server.server_address[1]
        url = stub.url
        stub.stop()
        pool, v = pool_and_variant(url)
        assert probe_health(pool, v) is Health.DOWN
        stub2 = StubUpstream(port=port).start()
        try:
            assert probe_health(pool, v) is Health.HEALTHY
        finally:
            stub2.stop()

    def test_transition_table_is_total(self, pool_and_variant):
        # every (state, outcome) pair lands on the outcome-determined state
        outcome_state = {
            "success": Health.HEALTHY,
            "timeout": Health.DEGRADED,
            "refusal": Health.DOWN,
        }
        for start, outcome in itertools.product(Health, outcome_state):
            pool, v = pool_and_variant("http://127.0.0.1:9/unused")
            pool.mark("v1", start)
            pool.mark("v1", outcome_state[outcome])
            assert pool.get("v1").health is outcome_state[outcome]


class TestPoolRegistry:
    def test_down_variants_not_selectable(self):
        v1 = make_variant("http://a")
        v2 = ModelVariant("v2", "m2", PrecisionLevel.INT4, "http://b", PRICES)
        pool = ModelPool([v1, v2])
        pool.mark("v1", Health.DOWN)
        assert [v.variant_id for v in pool.selectable()] == ["v2"]

    def test_duplicate_variant_id_rejected(self):
        with pytest.raises(ConfigError):
            ModelPool([make_variant("http://a"), make_variant("http://b")])

    def test_duplicate_model_precision_rejected(self):
        v1 = make_variant("http://a")
        v2 = ModelVariant("v2", "m1", PrecisionLevel.BF16, "http://b", PRICES)
        with pytest.raises(ConfigError):
            ModelPool([v1, v2])

    def test_precisions_sorted_high_to_low(self):
        pool = ModelPool(
            [
                ModelVariant("a", "m1", PrecisionLevel.INT4, "http://a", PRICES),
                ModelVariant("b", "m2", PrecisionLevel.BF16, "http://b", PRICES),
            ]
        )
        assert [p.bit_width for p in pool.precisions()] == [16, 4]
