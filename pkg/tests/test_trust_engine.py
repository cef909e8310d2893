"""
Trust metric tests.

A step-by-step reference evaluator written straight from the update equations
is checked first; the pipeline traces depend on it.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

# Add project root to path
sys.path.append(os.getcwd())

from tools.errors import ConfigError, DomainError
from tools.trust_engine import (
    PairTrustState,
    TrustParams,
    accumulate_fluctuation,
    change_rate,
    current_trust,
    display_trust,
    fresh_state,
    load_trust_params,
    observe_zero_transaction,
    send_proportion,
    serialize_state,
    update_pair_trust,
)

DEFAULTS = TrustParams()


def reference_trust(proportions, c=0.3, floor=0.1, phi=0.05, eps=0.1, max_atf=1.0):
    """Brute-force evaluation of the update equations, kept independent of the engine."""
    tc_prev, beta, at, tf, atf = 0.0, 0.0, None, 0.5, 0.0
    out = []
    for p in proportions:
        tc = math.log(1 + p * (math.e - 1))
        d = abs(tc - tc_prev)
        beta = c * d + (1 - c) * beta
        alpha = min(1.0, max(0.0, floor + c * d / (1 + beta)))
        at = alpha * tc + (1 - alpha) * (tc if at is None else at)
        if tc - at > eps:
            tf = min(1.0, tf + phi)
        elif at - tc > eps:
            tf = max(0.0, tf - phi)
        raw = atf
        if tc - at > phi:
            raw += (tc - at) / 2
        elif at - tc > phi:
            raw += at - tc
        cr = 0.0 if raw >= max_atf else math.cos(math.pi / 2 * raw / max_atf)
        atf = raw / 2 if raw > max_atf else raw
        trust = min(1.0, max(0.0, (tf * tc + (1 - tf) * at) * cr))
        out.append({"tc": tc, "beta": beta, "alpha": alpha, "at": at, "tf": tf, "raw_atf": raw, "atf": atf, "cr": cr, "trust": trust})
        tc_prev = tc
    return out


def run(proportions, params=DEFAULTS):
    state = fresh_state("A", "B", params)
    traces = []
    for p in proportions:
        state, trace = update_pair_trust(state, p, params)
        traces.append(trace)
    return state, traces


@pytest.mark.dependency()
def test_reference_evaluator_betrayal_values():
    """The reference reproduces the hand-computed betrayal trace."""
    steps = reference_trust([1, 1, 1, 1, 1, 0, 0])
    assert all(s["trust"] == pytest.approx(1.0, abs=1e-12) for s in steps[:5])
    betrayal = steps[5]
    assert betrayal["tc"] == 0.0
    assert betrayal["beta"] == pytest.approx(0.350421, abs=1e-6)
    assert betrayal["alpha"] == pytest.approx(0.322153, abs=1e-6)
    assert betrayal["at"] == pytest.approx(0.677847, abs=1e-6)
    assert betrayal["tf"] == pytest.approx(0.45, abs=1e-12)
    assert betrayal["raw_atf"] == pytest.approx(0.677847, abs=1e-6)
    # cos(pi/2 * 0.677847); trust 0.372816 * 0.484714 = 0.1807
    assert betrayal["cr"] == pytest.approx(0.48471, abs=1e-5)
    assert betrayal["trust"] == pytest.approx(0.18071, abs=1e-5)
    assert steps[6]["raw_atf"] == pytest.approx(1.288, abs=1e-3)
    assert steps[6]["trust"] == 0.0


def test_send_proportion_examples():
    assert send_proportion(6, 10) == pytest.approx(0.6)
    assert send_proportion(9, 18) == pytest.approx(0.5)
    assert send_proportion(0, 10) == 0.0
    assert send_proportion(0, 0) is None


def test_send_proportion_rejects_overdraw():
    with pytest.raises(DomainError):
        send_proportion(11, 10)
    with pytest.raises(DomainError):
        send_proportion(-1, 10)


def test_current_trust_points():
    assert current_trust(0.0) == pytest.approx(0.0, abs=1e-12)
    assert current_trust(1.0) == pytest.approx(1.0, abs=1e-12)
    assert current_trust(0.5) == pytest.approx(0.620115, abs=1e-6)


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_current_trust_domain(p):
    with pytest.raises(DomainError):
        current_trust(p)


def test_current_trust_monotone_and_above_identity():
    grid = np.linspace(0.0, 1.0, 1001)
    values = [current_trust(float(p)) for p in grid]
    assert all(b > a for a, b in zip(values, values[1:])), "current_trust should be strictly increasing"
    assert all(v >= p - 1e-15 for v, p in zip(values, grid))
    assert all(v > p for v, p in zip(values[1:-1], grid[1:-1]))


def test_fixed_point():
    p = (math.exp(0.5) - 1) / (math.e - 1)
    state, trace = update_pair_trust(fresh_state("A", "B"), p, DEFAULTS)
    assert trace.current_trust == pytest.approx(0.5, abs=1e-12)
    assert state.trust_value == pytest.approx(0.5, abs=1e-12)
    assert state.atf == 0.0
    assert trace.change_rate == 1.0

    # constant behaviour keeps at, tf and atf where they are
    nxt, trace = update_pair_trust(state, p, DEFAULTS)
    assert nxt.aggregate_trust == pytest.approx(state.aggregate_trust, abs=1e-12)
    assert nxt.trend_factor == state.trend_factor
    assert nxt.atf == state.atf
    assert nxt.trust_value == pytest.approx(trace.current_trust, abs=1e-12)


@pytest.mark.dependency(depends=["test_reference_evaluator_betrayal_values"])
@pytest.mark.parametrize("history", [
    [1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 0, 0],
    [1, 0, 1, 0],
    [0.3, 0.9, 0.1, 0.5, 0.5, 0.7, 1.0, 0.0, 0.2],
    [0, 0, 0, 1, 1, 1],
])
def test_pipeline_matches_reference(history):
    _, traces = run(history)
    expected = reference_trust(history)
    for trace, ref in zip(traces, expected):
        assert trace.current_trust == pytest.approx(ref["tc"], abs=1e-9)
        assert trace.alpha == pytest.approx(ref["alpha"], abs=1e-9)
        assert trace.aggregate_trust == pytest.approx(ref["at"], abs=1e-9)
        assert trace.trend_factor == pytest.approx(ref["tf"], abs=1e-9)
        assert trace.raw_atf == pytest.approx(ref["raw_atf"], abs=1e-9)
        assert trace.change_rate == pytest.approx(ref["cr"], abs=1e-9)
        assert trace.trust_value == pytest.approx(ref["trust"], abs=1e-9)


@pytest.mark.dependency(depends=["test_reference_evaluator_betrayal_values"])
def test_cooperation_then_betrayal_trace():
    state, traces = run([1, 1, 1, 1, 1])
    assert [t.trust_value for t in traces] == pytest.approx([1.0] * 5, abs=1e-12)
    assert state.atf == 0.0

    state, trace = update_pair_trust(state, 0.0, DEFAULTS)
    assert trace.trust_value == pytest.approx(0.181, abs=1e-3)
    assert trace.trend_factor == pytest.approx(0.45, abs=1e-12)

    state, trace = update_pair_trust(state, 0.0, DEFAULTS)
    assert trace.raw_atf > DEFAULTS.max_atf
    assert trace.trust_value == 0.0


@pytest.mark.dependency(depends=["test_reference_evaluator_betrayal_values"])
def test_alternation_hits_zero_by_fourth_update():
    _, traces = run([1, 0, 1, 0])
    assert traces[3].raw_atf > DEFAULTS.max_atf
    assert traces[3].trust_value == 0.0


@pytest.mark.parametrize("params", [
    TrustParams(),
    TrustParams(c=0.9, alpha_floor=0.9, phi=0.01, epsilon=0.0, max_atf=0.3),
    TrustParams(c=0.05, alpha_floor=0.0, phi=0.5, epsilon=0.5, max_atf=5.0, aggregate_seeding="prior"),
])
def test_random_updates_stay_in_range(params):
    rng = np.random.default_rng(2024)
    # mix of extremes and interior values
    ps = np.where(rng.random(100_000) < 0.3, rng.integers(0, 2, 100_000), rng.random(100_000))
    state = fresh_state("A", "B", params)
    for p in ps:
        prev_atf = state.atf
        state, trace = update_pair_trust(state, float(p), params)
        assert 0.0 <= state.trust_value <= 1.0
        assert 0.0 <= state.aggregate_trust <= 1.0
        assert 0.0 <= state.trend_factor <= 1.0
        assert state.beta >= 0.0 and state.atf >= 0.0
        assert 0.0 <= trace.change_rate <= 1.0
        assert (trace.change_rate == 0.0) == (trace.raw_atf >= params.max_atf)
        assert trace.raw_atf >= prev_atf
        if trace.raw_atf > params.max_atf:
            assert state.atf == trace.raw_atf / 2
        else:
            assert state.atf == trace.raw_atf


def test_change_rate_gate():
    assert change_rate(0.0, 1.0) == 1.0
    assert change_rate(1.0, 1.0) == 0.0
    assert change_rate(1.5, 1.0) == 0.0
    assert 0.0 < change_rate(0.5, 1.0) < 1.0


@pytest.mark.parametrize("d", [0.1, 0.2, 0.4])
def test_downward_deviation_costs_twice_upward(d):
    aggregate = 0.5
    up = accumulate_fluctuation(0.0, aggregate + d, aggregate, DEFAULTS.phi)
    down = accumulate_fluctuation(0.0, aggregate - d, aggregate, DEFAULTS.phi)
    assert down == pytest.approx(2 * up, abs=1e-12)
    assert up == pytest.approx(d / 2, abs=1e-12)


def test_small_deviation_inside_deadband_is_ignored():
    assert accumulate_fluctuation(0.2, 0.53, 0.5, DEFAULTS.phi) == 0.2
    assert accumulate_fluctuation(0.2, 0.47, 0.5, DEFAULTS.phi) == 0.2


def test_stored_atf_is_halved_past_threshold():
    state, trace = run([1, 1, 1, 1, 1, 0, 0])
    assert trace[-1].raw_atf > 1.0
    assert state.atf == pytest.approx(trace[-1].raw_atf / 2, abs=1e-15)


@pytest.mark.parametrize("k", range(3, 11))
def test_betrayal_falls_well_below_average(k):
    state, _ = run([1.0] * k + [0.0])
    average = k / (k + 1)
    assert state.trust_value < average - 0.3, f"k={k}: trust {state.trust_value:.3f} vs average {average:.3f}"


def test_receiver_zero_transaction_leaves_state_untouched():
    state, _ = run([0.7, 0.2, 0.9])
    before = serialize_state(state)
    after = observe_zero_transaction(state, "receiver", DEFAULTS)
    assert serialize_state(after) == before
    assert after is state


def test_sender_zero_transaction_is_update_with_zero():
    fresh = fresh_state("A", "B")
    expected, _ = update_pair_trust(fresh, 0.0, DEFAULTS)
    assert observe_zero_transaction(fresh, "sender", DEFAULTS) == expected

    cooperated, _ = run([1, 1, 1, 1, 1])
    assert observe_zero_transaction(cooperated, "sender", DEFAULTS).trust_value == pytest.approx(0.181, abs=1e-3)


def test_zero_transaction_rejects_unknown_role():
    with pytest.raises(DomainError):
        observe_zero_transaction(fresh_state("A", "B"), "bystander", DEFAULTS)


def test_fresh_state_publishes_initial_trust():
    assert fresh_state("A", "B").trust_value == 0.5
    assert fresh_state("A", "B", TrustParams(initial_trust=0.3)).trust_value == 0.3


def test_display_trust_two_significant_digits():
    assert display_trust(0.18143) == 0.18
    assert display_trust(0.5) == 0.5
    assert display_trust(1.0) == 1.0
    assert display_trust(0.0) == 0.0
    assert display_trust(0.0456) == 0.046


def test_serialized_size_is_constant():
    state = fresh_state("A", "B")
    size = len(serialize_state(state))
    for p in np.random.default_rng(1).random(500):
        state, _ = update_pair_trust(state, float(p), DEFAULTS)
        assert len(serialize_state(state)) == size
    assert len(serialize_state(PairTrustState("A", "B", round_count=10**12))) == size


def test_update_cost_does_not_grow_with_history():
    rng = np.random.default_rng(5)
    ps = [float(p) for p in rng.random(1000)]

    def timed_samples(state):
        samples = []
        for p in ps:
            start = time.perf_counter()
            for _ in range(10):
                state, _ = update_pair_trust(state, p, DEFAULTS)
            samples.append(time.perf_counter() - start)
        return float(np.median(samples))

    early = fresh_state("A", "B")
    for p in ps[:10]:
        early, _ = update_pair_trust(early, p, DEFAULTS)

    late = early
    for i in range(1_000_000):
        late, _ = update_pair_trust(late, ps[i % 1000], DEFAULTS)
    assert late.round_count == 1_000_010

    early_cost = timed_samples(early)
    late_cost = timed_samples(late)
    print(f"median of 10 updates: early {early_cost * 1e6:.1f}us, late {late_cost * 1e6:.1f}us")
    assert late_cost <= 2 * early_cost


def test_params_validation():
    with pytest.raises(ValueError):
        TrustParams(c=1.0)
    with pytest.raises(ValueError):
        TrustParams(max_atf=0.0)
    with pytest.raises(ValueError):
        TrustParams(unknown=1)


def test_load_trust_params(tmp_path):
    assert load_trust_params("default") == TrustParams()
    assert load_trust_params(None) == TrustParams()

    good = tmp_path / "params.json"
    good.write_text('{"c": 0.5, "phi": 0.1}', encoding="utf-8")
    assert load_trust_params(str(good)) == TrustParams(c=0.5, phi=0.1)

    bad = tmp_path / "bad.json"
    bad.write_text('{"c": 0.5, "gamma": 2}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_trust_params(str(bad))

    broken = tmp_path / "broken.json"
    broken.write_text("{c: ", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_trust_params(str(broken))


def test_prior_seeding_punishes_steady_cooperator():
    state, _ = run([1.0, 1.0, 1.0], TrustParams(aggregate_seeding="prior"))
    first_observation, _ = run([1.0, 1.0, 1.0])
    assert state.trust_value < first_observation.trust_value
