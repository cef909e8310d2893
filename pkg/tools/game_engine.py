"""
Repeated trust game mechanics: configuration, pairing schedule, single exchanges.

A sender receives the endowment and sends any integer amount of it; the
receiver gets `multiplier` times that amount and returns any integer share.
If the sender sends 0 the receiver is obliged to return 0.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import DEFAULT_SEED, ENDOWMENT, GROUP_SIZE, MULTIPLIER, ROUNDS_PER_PAIR
from tools.errors import ConfigError, ProtocolError
from tools.rng import stream
from tools.trust_engine import TrustParams

logger = logging.getLogger(__name__)


class GameCondition(str, Enum):
    """The four information conditions (Show-ID x Show-Trust)."""

    SIMPLE = "simple"
    IDENTITY = "identity"
    SCORE = "score"
    COMBINED = "combined"

    @property
    def show_id(self) -> bool:
        return self in (GameCondition.IDENTITY, GameCondition.COMBINED)

    @property
    def show_trust(self) -> bool:
        return self in (GameCondition.SCORE, GameCondition.COMBINED)


class GameConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    endowment: int = Field(ENDOWMENT, gt=0)
    multiplier: int = Field(MULTIPLIER, ge=1)
    group_size: int = Field(GROUP_SIZE, ge=2)
    rounds_per_pair: int = Field(ROUNDS_PER_PAIR, ge=1)
    condition: GameCondition = GameCondition.SIMPLE
    session_id: str = "s1"
    rng_seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    trust_params: TrustParams = Field(default_factory=TrustParams)

    @field_validator("group_size")
    @classmethod
    def _even_group(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"group_size must be even so every round pairs everyone, got {value}")
        return value


class RoundRecord(BaseModel):
    """One exchange. Payoffs are the round's net gain for each side."""

    model_config = ConfigDict(frozen=True)

    session_id: str
    game_condition: GameCondition
    round_index: int = Field(ge=1)
    sender_id: str
    receiver_id: str
    amount_sent: int
    amount_returned: int
    sender_payoff: int
    receiver_payoff: int
    is_zero_transaction: bool


@dataclass(frozen=True, slots=True)
class PartnerView:
    """What an agent may see about the partner it faces this round."""

    role: str
    partner_label: Optional[str]
    partner_trust_display: Optional[float]
    own_balance: int
    amount_received: Optional[int] = None


class Pairing(NamedTuple):
    sender_id: str
    receiver_id: str


def _is_integer(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def validate_exchange(amount_sent, amount_returned, endowment: int, multiplier: int) -> None:
    """
    Checks one exchange against the game rules.

    Raises:
        ProtocolError naming the offending field.
    """
    if not _is_integer(amount_sent):
        raise ProtocolError(f"amount_sent must be an integer, got {amount_sent!r}", field="amount_sent")
    if not _is_integer(amount_returned):
        raise ProtocolError(f"amount_returned must be an integer, got {amount_returned!r}", field="amount_returned")
    if not 0 <= amount_sent <= endowment:
        raise ProtocolError(f"amount_sent={amount_sent} outside [0, {endowment}]", field="amount_sent")
    cap = multiplier * amount_sent
    if not 0 <= amount_returned <= cap:
        raise ProtocolError(
            f"amount_returned={amount_returned} outside [0, {cap}] for amount_sent={amount_sent}",
            field="amount_returned",
        )


def play_round(
    sender_decision: int,
    receiver_decision: int,
    config: GameConfig,
    *,
    round_index: int = 1,
    sender_id: str = "sender",
    receiver_id: str = "receiver",
) -> RoundRecord:
    """
    Settles one trust game exchange.

    Args:
        sender_decision: Units the sender sends.
        receiver_decision: Units the receiver returns.
        config: Game rules (endowment, multiplier, condition, session).

    Returns:
        RoundRecord with net payoffs for both sides.
    """
    validate_exchange(sender_decision, receiver_decision, config.endowment, config.multiplier)
    return settle_exchange(
        config.session_id,
        config.condition,
        round_index,
        sender_id,
        receiver_id,
        int(sender_decision),
        int(receiver_decision),
        config.multiplier,
    )


def settle_exchange(
    session_id: str,
    condition: GameCondition,
    round_index: int,
    sender_id: str,
    receiver_id: str,
    amount_sent: int,
    amount_returned: int,
    multiplier: int,
) -> RoundRecord:
    """Builds the record of an already validated exchange."""
    return RoundRecord(
        session_id=session_id,
        game_condition=condition,
        round_index=round_index,
        sender_id=sender_id,
        receiver_id=receiver_id,
        amount_sent=amount_sent,
        amount_returned=amount_returned,
        sender_payoff=amount_returned - amount_sent,
        receiver_payoff=multiplier * amount_sent - amount_returned,
        is_zero_transaction=amount_sent == 0,
    )


def _round_robin(n: int) -> List[List[tuple]]:
    """Circle method: n-1 rounds, each a perfect matching of seats 0..n-1."""
    rounds = []
    for r in range(n - 1):
        pairs = [(r, n - 1)]
        for i in range(1, n // 2):
            pairs.append(((r + i) % (n - 1), (r - i) % (n - 1)))
        rounds.append([(min(a, b), max(a, b)) for a, b in pairs])
    return rounds


def schedule_game(
    config: GameConfig,
    participant_ids: Optional[Sequence[str]] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[List[Pairing]]:
    """
    Builds the pairing schedule for one game.

    The schedule is `rounds_per_pair` blocks of a full round-robin, so each
    pair meets once per block. Roles flip for every pair between blocks,
    seats are shuffled once and round order is shuffled within each block.

    Args:
        config: Game configuration (group size, rounds per pair, seed).
        participant_ids: Ids in seat order; defaults to P1..Pn.
        rng: Generator to draw shuffles from; defaults to a stream of config.rng_seed.

    Returns:
        One list of disjoint sender/receiver pairings per round.
    """
    n = config.group_size
    if n < 2 or n % 2:
        raise ConfigError(f"Cannot schedule an odd or empty group (group_size={n}).")
    ids = list(participant_ids) if participant_ids is not None else [f"P{i + 1}" for i in range(n)]
    if len(ids) != n:
        raise ConfigError(f"Expected {n} participants, got {len(ids)}.")
    if len(set(ids)) != n:
        raise ConfigError("Participant ids must be unique.")

    rng = rng if rng is not None else stream(config.rng_seed, "schedule")
    seats = [ids[i] for i in rng.permutation(n)]
    base = _round_robin(n)

    schedule: List[List[Pairing]] = []
    for block in range(config.rounds_per_pair):
        for r in rng.permutation(len(base)):
            pairings = []
            for i, j in base[r]:
                if (i + j + block) % 2 == 0:
                    pairings.append(Pairing(seats[i], seats[j]))
                else:
                    pairings.append(Pairing(seats[j], seats[i]))
            schedule.append(pairings)

    logger.debug(f"Scheduled {len(schedule)} rounds for {n} participants (session {config.session_id})")
    return schedule


LABEL_NAMES = ("Black", "White", "Green", "Brown", "Gray", "Blue", "Red", "Gold", "Silver", "Violet", "Orange", "Pink")


def partner_labels(seed: int, participant_ids: Sequence[str]) -> Dict[str, str]:
    """
    Display names for one game ("Mr. Black", ...), drawn from the game seed.

    Labels are fixed for the whole game and drawn afresh for every game, so a
    label never carries a participant id across games.
    """
    ids = list(participant_ids)
    names = len(LABEL_NAMES)
    pool = [LABEL_NAMES[k % names] + (f" {k // names + 1}" if k >= names else "") for k in range(max(len(ids), names))]
    picks = stream(seed, "labels").choice(len(pool), size=len(ids), replace=False)
    return {pid: f"Mr. {pool[i]}" for pid, i in zip(ids, picks)}
