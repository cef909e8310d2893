"""
Pairwise trust metric.

Each directed (observer, partner) pair carries a small, fixed-size state that is
folded forward once per interaction. Every update is O(1) in time and space,
no matter how long the shared history is.
"""

import json
import math
import struct
from dataclasses import dataclass, replace
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import (
    INITIAL_TRUST,
    TRUST_ALPHA_FLOOR,
    TRUST_C,
    TRUST_EPSILON,
    TRUST_MAX_ATF,
    TRUST_PHI,
)
from tools.errors import ConfigError, DomainError, NumericError

_E_MINUS_ONE = math.e - 1.0
_HALF_PI = math.pi / 2.0
_INITIAL_TREND = 0.5

# round_count, last_current_trust, beta, aggregate_trust, trend_factor, atf, trust_value
_STATE_LAYOUT = struct.Struct("<Q6d")


class TrustParams(BaseModel):
    """Constants of the trust metric plus the initialization policy."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    c: float = Field(TRUST_C, gt=0.0, lt=1.0, description="smoothing weight")
    alpha_floor: float = Field(TRUST_ALPHA_FLOOR, ge=0.0, lt=1.0, description="base aggregation weight")
    phi: float = Field(TRUST_PHI, gt=0.0, description="trend step and fluctuation deadband")
    epsilon: float = Field(TRUST_EPSILON, ge=0.0, description="trend deadband")
    max_atf: float = Field(TRUST_MAX_ATF, gt=0.0, description="betrayal threshold")
    initial_trust: float = Field(INITIAL_TRUST, ge=0.0, le=1.0, description="published trust before any interaction")
    aggregate_seeding: Literal["first_observation", "prior"] = "first_observation"


@dataclass(frozen=True, slots=True)
class PairTrustState:
    """What `observer_id` knows about `partner_id`."""

    observer_id: str
    partner_id: str
    round_count: int = 0
    last_current_trust: float = 0.0
    beta: float = 0.0
    aggregate_trust: float = 0.0
    trend_factor: float = _INITIAL_TREND
    atf: float = 0.0
    trust_value: float = INITIAL_TRUST


@dataclass(frozen=True, slots=True)
class UpdateTrace:
    """Every intermediate quantity of one update, for export and testing."""

    send_proportion: float
    current_trust: float
    delta: float
    alpha: float
    aggregate_trust: float
    trend_factor: float
    raw_atf: float
    change_rate: float
    expect_trust: float
    trust_value: float


def fresh_state(observer_id: str, partner_id: str, params: Optional[TrustParams] = None) -> PairTrustState:
    """State before the pair has interacted."""
    params = params or TrustParams()
    return PairTrustState(observer_id=observer_id, partner_id=partner_id, trust_value=params.initial_trust)


def _clamp(value: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return lo if value < lo else hi if value > hi else value


def send_proportion(amount: int, max_amount: int) -> Optional[float]:
    """
    Normalizes a sent amount by the most that could have been sent.

    Args:
        amount: Money units sent.
        max_amount: Money units available (endowment for senders, tripled receipt for receivers).

    Returns:
        amount / max_amount, or None when max_amount is 0 (0/0 is undefined).
    """
    if amount < 0 or max_amount < 0:
        raise DomainError(f"Amounts must be non-negative (amount={amount}, max_amount={max_amount}).")
    if amount > max_amount:
        raise DomainError(f"Sent amount {amount} exceeds the maximum sendable {max_amount}.")
    if max_amount == 0:
        return None
    return amount / max_amount


def current_trust(p: float) -> float:
    """Single-round trust: ln(p(e-1) + 1). Maps 0 to 0 and 1 to 1."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Send proportion must lie in [0, 1], got {p}.")
    return math.log(p * _E_MINUS_ONE + 1.0)


def accumulate_fluctuation(previous_atf: float, current: float, aggregate: float, phi: float) -> float:
    """
    Adds a behavior change to the fluctuation accumulator.

    Upward jumps count half, downward jumps count fully; changes within phi are ignored.
    """
    if current - aggregate > phi:
        return previous_atf + (current - aggregate) / 2.0
    if aggregate - current > phi:
        return previous_atf + (aggregate - current)
    return previous_atf


def change_rate(raw_atf: float, max_atf: float) -> float:
    """Cosine punishment factor; 0 once the accumulator reaches the betrayal threshold."""
    if raw_atf >= max_atf:
        return 0.0
    return math.cos(_HALF_PI * raw_atf / max_atf)


def update_pair_trust(state: PairTrustState, p: float, params: Optional[TrustParams] = None) -> Tuple[PairTrustState, UpdateTrace]:
    """
    Folds one observed send proportion into a pair's trust state.

    Args:
        state: Current state of the (observer, partner) pair.
        p: Partner's send proportion for this interaction.
        params: Metric constants.

    Returns:
        (next state, trace of every intermediate quantity)
    """
    params = params or TrustParams()
    tc = current_trust(p)

    delta = abs(tc - state.last_current_trust)
    beta = params.c * delta + (1.0 - params.c) * state.beta
    alpha = _clamp(params.alpha_floor + params.c * delta / (1.0 + beta))

    if state.round_count == 0:
        previous_aggregate = tc if params.aggregate_seeding == "first_observation" else params.initial_trust
    else:
        previous_aggregate = state.aggregate_trust
    aggregate = alpha * tc + (1.0 - alpha) * previous_aggregate

    trend = state.trend_factor
    if tc - aggregate > params.epsilon:
        trend += params.phi
    elif aggregate - tc > params.epsilon:
        trend -= params.phi
    trend = _clamp(trend)

    raw_atf = accumulate_fluctuation(state.atf, tc, aggregate, params.phi)
    rate = change_rate(raw_atf, params.max_atf)
    stored_atf = raw_atf / 2.0 if raw_atf > params.max_atf else raw_atf

    expect = trend * tc + (1.0 - trend) * aggregate
    trust = _clamp(expect * rate)

    if not all(math.isfinite(v) for v in (beta, alpha, aggregate, raw_atf, rate, trust)):
        raise NumericError(
            f"Non-finite trust update for {state.observer_id}->{state.partner_id} "
            f"(p={p}, beta={beta}, alpha={alpha}, aggregate={aggregate}, atf={raw_atf})"
        )

    next_state = replace(
        state,
        round_count=state.round_count + 1,
        last_current_trust=tc,
        beta=beta,
        aggregate_trust=aggregate,
        trend_factor=trend,
        atf=stored_atf,
        trust_value=trust,
    )
    trace = UpdateTrace(
        send_proportion=p,
        current_trust=tc,
        delta=delta,
        alpha=alpha,
        aggregate_trust=aggregate,
        trend_factor=trend,
        raw_atf=raw_atf,
        change_rate=rate,
        expect_trust=expect,
        trust_value=trust,
    )
    return next_state, trace


def observe_zero_transaction(state: PairTrustState, role_of_partner: Literal["sender", "receiver"], params: Optional[TrustParams] = None) -> PairTrustState:
    """
    Applies the zero-transaction rule to a pair state.

    A receiver handed 0 had nothing to return, so their state is left untouched.
    A sender who sent 0 is scored as a 0.0 proportion.
    """
    if role_of_partner == "receiver":
        return state
    if role_of_partner == "sender":
        next_state, _ = update_pair_trust(state, 0.0, params)
        return next_state
    raise DomainError(f"role_of_partner must be 'sender' or 'receiver', got {role_of_partner!r}.")


def display_trust(value: float) -> float:
    """Trust as shown to players: two significant digits, rounded."""
    return float(f"{value:.2g}")


def serialize_state(state: PairTrustState) -> bytes:
    """Fixed-width binary encoding; size depends only on the id lengths."""
    ids = b"".join(
        len(raw).to_bytes(2, "little") + raw
        for raw in (state.observer_id.encode("utf-8"), state.partner_id.encode("utf-8"))
    )
    return ids + _STATE_LAYOUT.pack(
        state.round_count,
        state.last_current_trust,
        state.beta,
        state.aggregate_trust,
        state.trend_factor,
        state.atf,
        state.trust_value,
    )


def load_trust_params(source: Optional[str] = None) -> TrustParams:
    """
    Loads TrustParams from a JSON file; None or the literal 'default' gives the defaults.

    Raises:
        ConfigError with pydantic's explanation for invalid or unknown fields.
    """
    if source is None or source == "default":
        return TrustParams()
    try:
        with open(source, "r", encoding="utf-8") as f:
            return TrustParams.model_validate(json.load(f))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Params file {source} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid trust params in {source}: {e}") from e
