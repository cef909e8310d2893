"""
Replays trust game exchanges through the trust metric and the reputation baseline.

After every exchange the receiver scores the sender (a 0-send counts as 0.0)
and, unless the exchange was a zero transaction, the sender scores the
receiver. Reputations are fed the same proportions. States are kept per
(session, condition) so every game starts from scratch.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from config import ENDOWMENT, MULTIPLIER
from tools.game_engine import RoundRecord
from tools.reputation import ReputationState, reputation_of, update_reputation
from tools.trust_engine import (
    PairTrustState,
    TrustParams,
    fresh_state,
    observe_zero_transaction,
    send_proportion,
    update_pair_trust,
)

logger = logging.getLogger(__name__)

PairKey = Tuple[str, str, str, str]
ParticipantKey = Tuple[str, str, str]

TRAJECTORY_COLUMNS = [
    "session_id", "game_condition", "round", "observer_id", "partner_id",
    "send_proportion", "current_trust", "aggregate_trust", "trend_factor",
    "atf", "change_rate", "trust_value", "reputation_value",
]
REPUTATION_COLUMNS = [
    "session_id", "game_condition", "round", "participant_id", "observation_count", "reputation_value",
]


@dataclass(frozen=True, slots=True)
class TrajectoryRow:
    session_id: str
    game_condition: str
    round: int
    observer_id: str
    partner_id: str
    send_proportion: float
    current_trust: float
    aggregate_trust: float
    trend_factor: float
    atf: float
    change_rate: float
    trust_value: float
    reputation_value: float


@dataclass(frozen=True, slots=True)
class ReputationRow:
    session_id: str
    game_condition: str
    round: int
    participant_id: str
    observation_count: int
    reputation_value: float


def _condition(record: RoundRecord) -> str:
    return getattr(record.game_condition, "value", record.game_condition)


class TrustLedger:
    """Holds every pair trust state and participant reputation of one or more games."""

    def __init__(self, params: Optional[TrustParams] = None, endowment: int = ENDOWMENT, multiplier: int = MULTIPLIER):
        self.params = params or TrustParams()
        self.endowment = endowment
        self.multiplier = multiplier
        self._pairs: Dict[PairKey, PairTrustState] = {}
        self._reputations: Dict[ParticipantKey, ReputationState] = {}

    def pair_state(self, session_id: str, condition: str, observer_id: str, partner_id: str) -> PairTrustState:
        key = (session_id, condition, observer_id, partner_id)
        state = self._pairs.get(key)
        if state is None:
            state = fresh_state(observer_id, partner_id, self.params)
        return state

    def trust_of(self, session_id: str, condition: str, observer_id: str, partner_id: str) -> float:
        """Published trust `observer_id` holds about `partner_id` (initial trust before any exchange)."""
        return self.pair_state(session_id, condition, observer_id, partner_id).trust_value

    def reputation_state(self, session_id: str, condition: str, participant_id: str) -> ReputationState:
        return self._reputations.get((session_id, condition, participant_id), ReputationState(participant_id))

    def reputation_of(self, session_id: str, condition: str, participant_id: str) -> Optional[float]:
        return reputation_of(self.reputation_state(session_id, condition, participant_id))

    def _ingest(self, record: RoundRecord, observer: str, partner: str, p: float) -> TrajectoryRow:
        session, condition = record.session_id, _condition(record)
        state = self.pair_state(session, condition, observer, partner)
        next_state, trace = update_pair_trust(state, p, self.params)
        self._pairs[(session, condition, observer, partner)] = next_state

        rep = update_reputation(self.reputation_state(session, condition, partner), p)
        self._reputations[(session, condition, partner)] = rep

        return TrajectoryRow(
            session_id=session,
            game_condition=condition,
            round=record.round_index,
            observer_id=observer,
            partner_id=partner,
            send_proportion=p,
            current_trust=trace.current_trust,
            aggregate_trust=trace.aggregate_trust,
            trend_factor=trace.trend_factor,
            atf=next_state.atf,
            change_rate=trace.change_rate,
            trust_value=trace.trust_value,
            reputation_value=rep.mean_proportion,
        )

    def observe_round(self, record: RoundRecord) -> List[TrajectoryRow]:
        """
        Applies one exchange to both directed pairs and both reputations.

        Returns:
            One trajectory row per trust update (one for a zero transaction, two otherwise).
        """
        rows = [
            self._ingest(
                record,
                observer=record.receiver_id,
                partner=record.sender_id,
                p=send_proportion(record.amount_sent, self.endowment),
            )
        ]
        if record.is_zero_transaction:
            # The receiver had nothing to return: their score stays put.
            key = (record.session_id, _condition(record), record.sender_id, record.receiver_id)
            self._pairs[key] = observe_zero_transaction(self.pair_state(*key), "receiver", self.params)
            return rows
        rows.append(
            self._ingest(
                record,
                observer=record.sender_id,
                partner=record.receiver_id,
                p=send_proportion(record.amount_returned, self.multiplier * record.amount_sent),
            )
        )
        return rows

    def reputation_rows(self, session_id: str, condition: str, round_index: int, participant_ids: Iterable[str]) -> List[ReputationRow]:
        """Snapshot of reputations after a round, one row per participant observed so far."""
        rows = []
        for pid in participant_ids:
            state = self.reputation_state(session_id, condition, pid)
            if state.observation_count == 0:
                continue
            rows.append(ReputationRow(session_id, condition, round_index, pid, state.observation_count, state.mean_proportion))
        return rows


def score_log(
    records: Iterable[RoundRecord],
    params: Optional[TrustParams] = None,
    endowment: int = ENDOWMENT,
    multiplier: int = MULTIPLIER,
) -> Tuple[List[TrajectoryRow], List[ReputationRow]]:
    """
    Scores a round log from scratch.

    Records are replayed per game in round order. Reputation rows are a
    per-round snapshot of every participant seen so far in that game.
    """
    ledger = TrustLedger(params, endowment, multiplier)
    trajectory: List[TrajectoryRow] = []
    reputations: List[ReputationRow] = []

    ordered = sorted(records, key=lambda r: (r.session_id, _condition(r), r.round_index))
    seen: Dict[Tuple[str, str], List[str]] = {}
    for i, record in enumerate(ordered):
        game = (record.session_id, _condition(record))
        participants = seen.setdefault(game, [])
        for pid in (record.sender_id, record.receiver_id):
            if pid not in participants:
                participants.append(pid)
        trajectory.extend(ledger.observe_round(record))

        following = ordered[i + 1] if i + 1 < len(ordered) else None
        end_of_round = following is None or (
            (following.session_id, _condition(following), following.round_index) != (*game, record.round_index)
        )
        if end_of_round:
            reputations.extend(ledger.reputation_rows(*game, record.round_index, sorted(participants)))

    logger.info(f"Scored {len(ordered)} exchanges into {len(trajectory)} trust updates")
    return trajectory, reputations
