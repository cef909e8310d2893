"""
Simulation driver: plays scheduled rounds between agents and keeps the ledger current.

Within a round the sender moves first, the receiver sees the tripled amount
and answers, then both directed trust states and both reputations update.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

from tools.agents import Agent, RosterEntry, build_agents
from tools.errors import ConfigError, ProtocolError
from tools.game_engine import (
    GameCondition,
    GameConfig,
    PartnerView,
    RoundRecord,
    partner_labels,
    play_round,
    schedule_game,
    validate_exchange,
)
from tools.ledger import ReputationRow, TrajectoryRow, TrustLedger
from tools.rng import derive_seed
from tools.trust_engine import display_trust

logger = logging.getLogger(__name__)

RosterSource = Union[List[RosterEntry], Callable[[int], List[RosterEntry]]]


@dataclass
class GameResult:
    records: List[RoundRecord] = field(default_factory=list)
    trajectory: List[TrajectoryRow] = field(default_factory=list)
    reputations: List[ReputationRow] = field(default_factory=list)

    def extend(self, other: "GameResult") -> None:
        self.records.extend(other.records)
        self.trajectory.extend(other.trajectory)
        self.reputations.extend(other.reputations)


def _view(
    config: GameConfig,
    ledger: TrustLedger,
    labels: Dict[str, str],
    me: str,
    partner: str,
    role: str,
    balance: int,
    received: Optional[int] = None,
) -> PartnerView:
    condition = config.condition
    trust = None
    if condition.show_trust:
        trust = display_trust(ledger.trust_of(config.session_id, condition.value, me, partner))
    return PartnerView(
        role=role,
        partner_label=labels[partner] if condition.show_id else None,
        partner_trust_display=trust,
        own_balance=balance,
        amount_received=received,
    )


def run_game(config: GameConfig, agents: Sequence[Agent]) -> GameResult:
    """
    Plays one game to completion.

    Args:
        config: Game rules, condition and seed.
        agents: One agent per participant; their ids are the participant ids.

    Returns:
        GameResult with the round log, trust trajectory and per-round reputation snapshots.
    """
    if len(agents) != config.group_size:
        raise ConfigError(f"Game needs {config.group_size} agents, got {len(agents)}.")
    by_id: Dict[str, Agent] = {agent.agent_id: agent for agent in agents}
    ids = [agent.agent_id for agent in agents]
    schedule = schedule_game(config, ids)
    labels = partner_labels(config.rng_seed, ids)
    for agent in agents:
        agent.begin_game(labels)

    ledger = TrustLedger(config.trust_params, config.endowment, config.multiplier)
    balances = {pid: 0 for pid in ids}
    result = GameResult()
    condition = config.condition.value

    logger.info(
        f"Starting game {config.session_id}/{condition}: {len(ids)} agents, "
        f"{len(schedule)} rounds, seed {config.rng_seed}"
    )
    for round_index, pairings in enumerate(schedule, start=1):
        for pairing in pairings:
            sender = by_id[pairing.sender_id]
            receiver = by_id[pairing.receiver_id]

            sender_view = _view(config, ledger, labels, sender.agent_id, receiver.agent_id, "sender", balances[sender.agent_id])
            sent = sender.decide_send(sender_view)
            try:
                validate_exchange(sent, 0, config.endowment, config.multiplier)
            except ProtocolError as e:
                raise ProtocolError(f"Agent {sender.agent_id}: {e}", field=e.field, agent_id=sender.agent_id) from e

            received = config.multiplier * int(sent)
            receiver_view = _view(
                config, ledger, labels, receiver.agent_id, sender.agent_id, "receiver", balances[receiver.agent_id],
                received if sent > 0 else None,
            )
            # zero transactions never reach the receiver's strategy
            returned = receiver.decide_return(receiver_view, received) if sent > 0 else 0

            try:
                record = play_round(
                    sent,
                    returned,
                    config,
                    round_index=round_index,
                    sender_id=sender.agent_id,
                    receiver_id=receiver.agent_id,
                )
            except ProtocolError as e:
                raise ProtocolError(f"Agent {receiver.agent_id}: {e}", field=e.field, agent_id=receiver.agent_id) from e

            result.records.append(record)
            result.trajectory.extend(ledger.observe_round(record))
            balances[sender.agent_id] += record.sender_payoff
            balances[receiver.agent_id] += record.receiver_payoff

            returned_share = None if record.is_zero_transaction else record.amount_returned / (config.multiplier * record.amount_sent)
            sender.observe_exchange(sender_view, returned_share)
            receiver.observe_exchange(receiver_view, record.amount_sent / config.endowment)

        result.reputations.extend(ledger.reputation_rows(config.session_id, condition, round_index, ids))

    logger.info(f"Finished game {config.session_id}/{condition}: {len(result.records)} exchanges")
    return result


def run_experiment(
    config: GameConfig,
    roster: RosterSource,
    sessions: int = 1,
    conditions: Optional[Sequence[GameCondition]] = None,
) -> GameResult:
    """
    Runs independent groups, each playing one game per condition.

    A single group in a single condition uses `config.rng_seed` as is; otherwise
    every (session, condition) game gets a seed derived from it. Sessions are
    labelled s1..sN and share participant ids across their conditions.

    Args:
        config: Base configuration.
        roster: A roster, or a callable building the roster for a 0-based session index.
        sessions: Number of independent groups.
        conditions: Conditions each group plays; defaults to config.condition.
    """
    if sessions < 1:
        raise ConfigError(f"sessions must be >= 1, got {sessions}")
    conditions = list(conditions) if conditions else [config.condition]
    single = sessions == 1 and len(conditions) == 1

    result = GameResult()
    for k in range(sessions):
        entries = roster(k) if callable(roster) else roster
        session_id = config.session_id if sessions == 1 else f"s{k + 1}"
        for condition in conditions:
            seed = config.rng_seed if single else derive_seed(config.rng_seed, k, condition.value)
            game_config = config.model_copy(update={"session_id": session_id, "condition": condition, "rng_seed": seed})
            agents = build_agents(entries, seed=seed, endowment=config.endowment, group_size=config.group_size)
            result.extend(run_game(game_config, agents))
    return result
