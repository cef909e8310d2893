"""
Measurement, predictive-comparison and trust-behavior models over round logs.

Sender measures keep 0-sends; receiver measures drop zero transactions
because 0/0 is not a proportion.
"""

import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import DEFAULT_START_ROUND, ENDOWMENT, MULTIPLIER
from tools.errors import DomainError, InsufficientDataError, SingularMatrixError
from tools.game_engine import GameCondition, RoundRecord
from tools.ledger import TrustLedger
from tools.stats import OLSResult, PairedInterval, WelchResult, ols_fit, paired_t_ci, welch_t
from tools.trust_engine import TrustParams

logger = logging.getLogger(__name__)

ROLES = ("sender", "receiver")
REPORT_COLUMNS = [
    "dataset", "game_condition", "round", "role", "df", "t_trust", "adj_r2_trust", "t_reputation", "adj_r2_reputation", "n",
]
MEASURE_COLUMNS = [
    "session_id", "game_condition", "participant_id",
    "avg_send_proportion_as_sender", "avg_send_proportion_as_receiver",
    "zero_send_rate_as_sender", "zero_return_rate_as_receiver",
    "sender_rounds", "receiver_rounds",
]
BEHAVIOR_LEVELS = ("average", "round")
BEHAVIOR_TERMS = ("own_trust", "partner_trust", "amount_received")
_CONDITION_ORDER = {c.value: i for i, c in enumerate(GameCondition)}


@dataclass(frozen=True)
class DependentMeasures:
    session_id: str
    game_condition: str
    participant_id: str
    avg_send_proportion_as_sender: Optional[float]
    avg_send_proportion_as_receiver: Optional[float]
    zero_send_rate_as_sender: Optional[float]
    zero_return_rate_as_receiver: Optional[float]
    sender_rounds: int
    receiver_rounds: int


@dataclass(frozen=True)
class RegressionReport:
    """One row of the trust-vs-reputation table; fits ride along for JSON diagnostics."""

    dataset: str
    game_condition: str
    round: int
    role: str
    df: int
    t_trust: float
    adj_r2_trust: float
    t_reputation: float
    adj_r2_reputation: float
    n: int
    trust_fit: Optional[OLSResult] = field(default=None, compare=False, repr=False)
    reputation_fit: Optional[OLSResult] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BehaviorRegression:
    """A trust-behavior model; `round` is None for the participant-average level."""

    dataset: str
    game_condition: str
    level: str
    round: Optional[int]
    role: str
    terms: Tuple[str, ...]
    n: int
    df: int
    r_squared: float
    adj_r_squared: float
    fit: OLSResult = field(compare=False, repr=False)

    def term(self, name: str) -> Optional[Tuple[float, float, float]]:
        """(coefficient, t, p) of a term, or None when the model lacks it."""
        if name not in self.terms:
            return None
        i = self.terms.index(name) + 1
        return float(self.fit.coefficients[i]), float(self.fit.t_values[i]), float(self.fit.p_values[i])


@dataclass(frozen=True)
class ConditionComparison:
    role: str
    baseline: str
    condition: str
    n_pairs: int
    interval: Optional[PairedInterval]
    welch: Optional[WelchResult]


def _condition(record: RoundRecord) -> str:
    return getattr(record.game_condition, "value", record.game_condition)


def records_to_frame(records: Iterable[RoundRecord], endowment: int = ENDOWMENT, multiplier: int = MULTIPLIER) -> pd.DataFrame:
    """Round log as a DataFrame with both sides' send proportions (NaN for 0/0)."""
    rows = [
        {
            "session_id": r.session_id,
            "game_condition": _condition(r),
            "round": r.round_index,
            "sender_id": r.sender_id,
            "receiver_id": r.receiver_id,
            "amount_sent": r.amount_sent,
            "amount_returned": r.amount_returned,
            "is_zero_transaction": r.is_zero_transaction,
        }
        for r in records
    ]
    df = pd.DataFrame(
        rows,
        columns=["session_id", "game_condition", "round", "sender_id", "receiver_id",
                 "amount_sent", "amount_returned", "is_zero_transaction"],
    )
    df["sender_proportion"] = df["amount_sent"] / endowment
    received = multiplier * df["amount_sent"]
    df["receiver_proportion"] = (df["amount_returned"] / received).where(received > 0)
    return df


def _optional(value) -> Optional[float]:
    return None if value is None or pd.isna(value) else float(value)


def dependent_measures(records: Iterable[RoundRecord], endowment: int = ENDOWMENT, multiplier: int = MULTIPLIER) -> List[DependentMeasures]:
    """
    Per (session, condition, participant) averages and zero rates.

    Returns:
        Measures sorted by session, condition and participant; empty for an empty log.
    """
    df = records_to_frame(records, endowment, multiplier)
    if df.empty:
        logger.warning("Empty round log: no dependent measures")
        return []

    keys = ["session_id", "game_condition"]
    as_sender = df.groupby(keys + ["sender_id"]).agg(
        avg=("sender_proportion", "mean"),
        zero=("is_zero_transaction", "mean"),
        rounds=("sender_proportion", "size"),
    ).to_dict("index")
    positive = df[~df["is_zero_transaction"].astype(bool)]
    as_receiver = {}
    if not positive.empty:
        positive = positive.assign(returned_zero=positive["amount_returned"] == 0)
        as_receiver = positive.groupby(keys + ["receiver_id"]).agg(
            avg=("receiver_proportion", "mean"),
            zero=("returned_zero", "mean"),
            rounds=("receiver_proportion", "size"),
        ).to_dict("index")

    participants = set(as_sender) | {
        (s, c, p) for s, c, p in df[keys + ["receiver_id"]].itertuples(index=False)
    }

    measures = []
    for key in sorted(participants):
        sender = as_sender.get(key)
        receiver = as_receiver.get(key)
        measures.append(
            DependentMeasures(
                session_id=key[0],
                game_condition=key[1],
                participant_id=key[2],
                avg_send_proportion_as_sender=_optional(sender["avg"]) if sender is not None else None,
                avg_send_proportion_as_receiver=_optional(receiver["avg"]) if receiver is not None else None,
                zero_send_rate_as_sender=_optional(sender["zero"]) if sender is not None else None,
                zero_return_rate_as_receiver=_optional(receiver["zero"]) if receiver is not None else None,
                sender_rounds=int(sender["rounds"]) if sender is not None else 0,
                receiver_rounds=int(receiver["rounds"]) if receiver is not None else 0,
            )
        )
    return measures


def zero_send_rate(records: Iterable[RoundRecord], condition: str, role: str) -> Optional[float]:
    """
    Share of rounds in which the role sent nothing.

    Senders: 0-sends over all sender rounds. Receivers: 0-returns over rounds
    with a positive receipt. None when no round matches.
    """
    if role not in ROLES:
        raise DomainError(f"role must be 'sender' or 'receiver', got {role!r}")
    matching = [r for r in records if _condition(r) == condition]
    if role == "sender":
        if not matching:
            return None
        return sum(r.amount_sent == 0 for r in matching) / len(matching)
    positive = [r for r in matching if not r.is_zero_transaction]
    if not positive:
        return None
    return sum(r.amount_returned == 0 for r in positive) / len(positive)


def zero_send_rates(records: Sequence[RoundRecord]) -> List[Tuple[str, str, Optional[float]]]:
    """(condition, role, rate) for every condition present in the log."""
    conditions = sorted({_condition(r) for r in records})
    return [(c, role, zero_send_rate(records, c, role)) for c in conditions for role in ROLES]


@dataclass(frozen=True)
class Observation:
    """One actor decision with the scores that stood before its round was applied."""

    session_id: str
    game_condition: str
    round: int
    role: str
    actor_id: str
    partner_id: str
    trust: float  # partner's trust in the actor
    reputation: float
    own_trust: float  # actor's trust in the partner
    amount_received: Optional[int]
    proportion: float


def _condition_rank(condition: str) -> int:
    return _CONDITION_ORDER.get(condition, len(_CONDITION_ORDER))


def replay_observations(
    records: Iterable[RoundRecord],
    params: TrustParams,
    endowment: int = ENDOWMENT,
    multiplier: int = MULTIPLIER,
) -> List[Observation]:
    """
    Replays the log game by game and records every decision's predictors.

    Predictors are read before the round is applied. An actor with no
    reputation yet gets the neutral initial trust. Receivers of a zero
    transaction made no decision and are skipped.
    """
    ledger = TrustLedger(params, endowment, multiplier)
    games: Dict[Tuple[str, str], List[RoundRecord]] = defaultdict(list)
    for record in records:
        games[(record.session_id, _condition(record))].append(record)

    observations: List[Observation] = []
    for (session, condition), game in sorted(games.items(), key=lambda kv: (_condition_rank(kv[0][1]), kv[0])):
        by_round: Dict[int, List[RoundRecord]] = defaultdict(list)
        for record in game:
            by_round[record.round_index].append(record)

        for round_index in sorted(by_round):
            batch = by_round[round_index]
            for r in batch:
                sender_rep = ledger.reputation_of(session, condition, r.sender_id)
                observations.append(Observation(
                    session_id=session,
                    game_condition=condition,
                    round=round_index,
                    role="sender",
                    actor_id=r.sender_id,
                    partner_id=r.receiver_id,
                    trust=ledger.trust_of(session, condition, r.receiver_id, r.sender_id),
                    reputation=params.initial_trust if sender_rep is None else sender_rep,
                    own_trust=ledger.trust_of(session, condition, r.sender_id, r.receiver_id),
                    amount_received=None,
                    proportion=r.amount_sent / endowment,
                ))
                if r.is_zero_transaction:
                    continue
                receiver_rep = ledger.reputation_of(session, condition, r.receiver_id)
                received = multiplier * r.amount_sent
                observations.append(Observation(
                    session_id=session,
                    game_condition=condition,
                    round=round_index,
                    role="receiver",
                    actor_id=r.receiver_id,
                    partner_id=r.sender_id,
                    trust=ledger.trust_of(session, condition, r.sender_id, r.receiver_id),
                    reputation=params.initial_trust if receiver_rep is None else receiver_rep,
                    own_trust=ledger.trust_of(session, condition, r.receiver_id, r.sender_id),
                    amount_received=received,
                    proportion=r.amount_returned / received,
                ))
            for r in batch:
                ledger.observe_round(r)
    return observations


def _report_order(key: Tuple[str, int, str]) -> Tuple[int, int, int]:
    condition, round_index, role = key
    return _condition_rank(condition), round_index, ROLES.index(role)


def predictive_comparison(
    records: Iterable[RoundRecord],
    trust_params: Optional[TrustParams] = None,
    start_round: int = DEFAULT_START_ROUND,
    endowment: int = ENDOWMENT,
    multiplier: int = MULTIPLIER,
    dataset: str = "dataset",
    condition: Optional[str] = None,
) -> List[RegressionReport]:
    """
    Regresses each round's send proportions on trust and, separately, on reputation.

    Args:
        records: Round log (any number of sessions; games of one condition are pooled by round index).
        trust_params: Metric constants used to replay the log.
        start_round: First round to report.
        dataset: Label for the report's first column.
        condition: Only report this game condition; all conditions when None.

    Returns:
        One report per (condition, round, role) with enough data, ordered by
        condition, round, then sender before receiver.
    """
    params = trust_params or TrustParams()
    grouped: Dict[Tuple[str, int, str], List[Observation]] = defaultdict(list)
    for obs in replay_observations(records, params, endowment, multiplier):
        if obs.round >= start_round and (condition is None or obs.game_condition == condition):
            grouped[(obs.game_condition, obs.round, obs.role)].append(obs)

    reports = []
    for key in sorted(grouped, key=_report_order):
        game_condition, round_index, role = key
        data = np.array([(o.trust, o.reputation, o.proportion) for o in grouped[key]], dtype=float)
        trust, reputation, response = data[:, 0], data[:, 1], data[:, 2]
        try:
            trust_fit = ols_fit(trust, response)
            reputation_fit = ols_fit(reputation, response)
        except (InsufficientDataError, SingularMatrixError) as e:
            logger.warning(f"{game_condition} round {round_index} {role}: row omitted ({e})")
            continue
        reports.append(
            RegressionReport(
                dataset=dataset,
                game_condition=game_condition,
                round=round_index,
                role=role,
                df=trust_fit.df_resid,
                t_trust=float(trust_fit.slope_t_values[0]),
                adj_r2_trust=trust_fit.adj_r_squared,
                t_reputation=float(reputation_fit.slope_t_values[0]),
                adj_r2_reputation=reputation_fit.adj_r_squared,
                n=trust_fit.n,
                trust_fit=trust_fit,
                reputation_fit=reputation_fit,
            )
        )
    if not reports:
        logger.warning(f"No regression rows at or after round {start_round}")
    return reports


def _behavior_terms(role: str) -> Tuple[str, ...]:
    return BEHAVIOR_TERMS if role == "receiver" else BEHAVIOR_TERMS[:2]


def trust_behavior_regressions(
    records: Iterable[RoundRecord],
    trust_params: Optional[TrustParams] = None,
    level: str = "average",
    start_round: int = DEFAULT_START_ROUND,
    endowment: int = ENDOWMENT,
    multiplier: int = MULTIPLIER,
    dataset: str = "dataset",
    condition: Optional[str] = None,
) -> List[BehaviorRegression]:
    """
    Explains send proportions by the trust both sides hold, per game.

    Senders: proportion ~ own_trust + partner_trust. Receivers add the amount
    received. Own trust is what the actor holds about the partner; partner
    trust is what the partner holds about the actor.

    Args:
        level: 'average' fits one model per (condition, role) on each
            participant's averages over rounds >= start_round; 'round' fits
            one model per (condition, round, role).
    """
    if level not in BEHAVIOR_LEVELS:
        raise DomainError(f"level must be one of {BEHAVIOR_LEVELS}, got {level!r}")
    params = trust_params or TrustParams()
    frame = pd.DataFrame(
        [asdict(o) for o in replay_observations(records, params, endowment, multiplier)],
        columns=[f.name for f in fields(Observation)],
    )
    frame = frame[frame["round"] >= start_round]
    if condition is not None:
        frame = frame[frame["game_condition"] == condition]
    frame = frame.rename(columns={"trust": "partner_trust"}).assign(
        amount_received=lambda f: f["amount_received"].astype(float)
    )

    if level == "average":
        frame = (
            frame.groupby(["game_condition", "role", "session_id", "actor_id"], sort=False)
            [["own_trust", "partner_trust", "amount_received", "proportion"]]
            .mean()
            .reset_index()
        )
        keys = ["game_condition", "role"]
    else:
        keys = ["game_condition", "round", "role"]

    rows = []
    for key, group in frame.groupby(keys, sort=False):
        key = dict(zip(keys, key))
        role = key["role"]
        terms = _behavior_terms(role)
        label = f"{key['game_condition']} {role}" + (f" round {key['round']}" if level == "round" else "")
        try:
            fit = ols_fit(group[list(terms)].to_numpy(dtype=float), group["proportion"].to_numpy(dtype=float))
        except (InsufficientDataError, SingularMatrixError) as e:
            logger.warning(f"{label}: model omitted ({e})")
            continue
        rows.append(BehaviorRegression(
            dataset=dataset,
            game_condition=key["game_condition"],
            level=level,
            round=int(key["round"]) if level == "round" else None,
            role=role,
            terms=terms,
            n=fit.n,
            df=fit.df_resid,
            r_squared=fit.r_squared,
            adj_r_squared=fit.adj_r_squared,
            fit=fit,
        ))
    rows.sort(key=lambda r: (_condition_rank(r.game_condition), r.round or 0, ROLES.index(r.role)))
    if not rows:
        logger.warning(f"No {level}-level trust-behavior models at or after round {start_round}")
    return rows


def _column(measures: Iterable[DependentMeasures], role: str) -> Dict[Tuple[str, str, str], float]:
    attr = "avg_send_proportion_as_sender" if role == "sender" else "avg_send_proportion_as_receiver"
    return {
        (m.session_id, m.game_condition, m.participant_id): getattr(m, attr)
        for m in measures
        if getattr(m, attr) is not None
    }


def condition_comparisons(measures: Sequence[DependentMeasures], baseline: str = "simple") -> List[ConditionComparison]:
    """
    Baseline minus each other condition, per role.

    Paired intervals yoke a participant's averages across conditions within a
    session; Welch t compares the same two columns as independent samples.
    """
    conditions = sorted({m.game_condition for m in measures} - {baseline})
    comparisons = []
    for role in ROLES:
        column = _column(measures, role)
        base = {(s, p): v for (s, c, p), v in column.items() if c == baseline}
        for condition in conditions:
            other = {(s, p): v for (s, c, p), v in column.items() if c == condition}
            yoked = sorted(set(base) & set(other))
            interval = welch = None
            try:
                interval = paired_t_ci([base[k] for k in yoked], [other[k] for k in yoked])
            except InsufficientDataError as e:
                logger.warning(f"{role} {baseline} vs {condition}: no paired interval ({e})")
            try:
                welch = welch_t(list(base.values()), list(other.values()))
            except InsufficientDataError as e:
                logger.warning(f"{role} {baseline} vs {condition}: no Welch t ({e})")
            comparisons.append(ConditionComparison(role, baseline, condition, len(yoked), interval, welch))
    return comparisons


def external_comparison(
    ours: Sequence[DependentMeasures],
    theirs: Sequence[DependentMeasures],
    condition: str = "simple",
    role: str = "sender",
) -> WelchResult:
    """Welch t between two datasets' per-participant averages in one condition and role."""
    a = [v for (_, c, _), v in _column(ours, role).items() if c == condition]
    b = [v for (_, c, _), v in _column(theirs, role).items() if c == condition]
    return welch_t(a, b)
