"""Global-average reputation: the baseline the pairwise trust metric is compared against."""

from dataclasses import dataclass
from typing import Optional

from tools.errors import DomainError


@dataclass(frozen=True, slots=True)
class ReputationState:
    participant_id: str
    observation_count: int = 0
    mean_proportion: float = 0.0


def update_reputation(state: ReputationState, p: float) -> ReputationState:
    """
    Adds one send proportion to a participant's running mean.
    Role-blind: sender and receiver proportions are averaged together.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Send proportion must lie in [0, 1], got {p}.")
    count = state.observation_count + 1
    mean = state.mean_proportion + (p - state.mean_proportion) / count
    # keep the mean inside [0, 1] despite rounding in the incremental form
    mean = min(1.0, max(0.0, mean))
    return ReputationState(participant_id=state.participant_id, observation_count=count, mean_proportion=mean)


def reputation_of(state: ReputationState) -> Optional[float]:
    """Current reputation, or None before the participant has been observed."""
    if state.observation_count == 0:
        return None
    return state.mean_proportion
