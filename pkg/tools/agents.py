"""
Decision strategies for simulated trust game players.

Strategies only see a PartnerView: the partner label exists only when ids are
shown and the partner trust only when scores are shown. Strategies that key
memory by partner therefore fall back to a single shared counter when ids are
hidden.
"""

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from tools.errors import ConfigError
from tools.game_engine import PartnerView
from tools.rng import stream

logger = logging.getLogger(__name__)

Fraction = Annotated[float, Field(ge=0.0, le=1.0)]
_ANY_PARTNER = "*"


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CooperatorSpec(_Spec):
    kind: Literal["cooperator"] = "cooperator"


class DefectorSpec(_Spec):
    kind: Literal["defector"] = "defector"


class FixedFractionSpec(_Spec):
    kind: Literal["fixed_fraction"] = "fixed_fraction"
    f: Fraction
    noise: Fraction = 0.0


class TrustProportionalSpec(_Spec):
    kind: Literal["trust_proportional"] = "trust_proportional"
    gain: float = Field(1.0, ge=0.0)
    fallback: Fraction = 0.5


class ReciprocatorSpec(_Spec):
    kind: Literal["reciprocator"] = "reciprocator"
    f: Fraction


class FluctuatorSpec(_Spec):
    kind: Literal["fluctuator"] = "fluctuator"
    period: int = Field(ge=1)


class BetrayerSpec(_Spec):
    kind: Literal["betrayer"] = "betrayer"
    k: int = Field(ge=0)


class PlaybookSpec(_Spec):
    kind: Literal["playbook"] = "playbook"
    victims: List[str]
    good_f: Fraction
    good_return: Fraction = 1.0


class RandomSpec(_Spec):
    kind: Literal["random"] = "random"
    lo: Fraction = 0.0
    hi: Fraction = 1.0

    @model_validator(mode="after")
    def _ordered(self):
        if self.lo > self.hi:
            raise ValueError(f"lo ({self.lo}) must not exceed hi ({self.hi})")
        return self


StrategySpec = Annotated[
    Union[
        CooperatorSpec,
        DefectorSpec,
        FixedFractionSpec,
        TrustProportionalSpec,
        ReciprocatorSpec,
        FluctuatorSpec,
        BetrayerSpec,
        PlaybookSpec,
        RandomSpec,
    ],
    Field(discriminator="kind"),
]


class RosterEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    agent_id: str = Field(min_length=1)
    strategy: StrategySpec


_ROSTER_ADAPTER = TypeAdapter(List[RosterEntry])


def round_units(value: float) -> int:
    """Fractional decisions become whole money units by round-half-to-even."""
    return int(round(value))


class Agent:
    """
    A simulated participant: a strategy plus its private memory and rng stream.
    """

    def __init__(self, agent_id: str, spec: StrategySpec, *, seed: int = 0, endowment: int = 10, group_size: int = 6):
        self.agent_id = agent_id
        self.spec = spec
        self.endowment = endowment
        self.group_size = group_size
        self.rng = stream(seed, "agent", agent_id)
        self._exchanges: Dict[str, int] = defaultdict(int)
        self._last_seen: Dict[str, float] = {}
        self._victim_labels = set(getattr(spec, "victims", ()))

    def begin_game(self, labels: Dict[str, str]) -> None:
        """Takes the game's display names; a playbook attacker resolves its victims to their labels."""
        victims = getattr(self.spec, "victims", ())
        self._victim_labels = {labels[v] for v in victims if v in labels}

    def _key(self, view: PartnerView) -> str:
        return view.partner_label if view.partner_label is not None else _ANY_PARTNER

    def _next_exchange(self, view: PartnerView) -> int:
        """0-based index of this exchange with the partner (or with anyone, when ids are hidden)."""
        key = self._key(view)
        index = self._exchanges[key]
        self._exchanges[key] += 1
        return index

    def _is_victim(self, view: PartnerView, index: int) -> bool:
        spec = self.spec
        if view.partner_label is not None:
            return view.partner_label in self._victim_labels
        # Without ids the attacker can only defect on a share of its exchanges.
        partners = max(1, self.group_size - 1)
        return index % partners < min(len(spec.victims), partners)

    def _fraction(self, view: PartnerView, role: str) -> float:
        spec = self.spec
        kind = spec.kind
        if kind == "cooperator":
            return 1.0
        if kind == "defector":
            return 0.0
        if kind == "fixed_fraction":
            jitter = self.rng.uniform(-spec.noise, spec.noise) if spec.noise > 0 else 0.0
            return min(1.0, max(0.0, spec.f + jitter))
        if kind == "trust_proportional":
            if view.partner_trust_display is None:
                return spec.fallback
            return spec.gain * view.partner_trust_display
        if kind == "reciprocator":
            if role == "sender":
                return self._last_seen.get(self._key(view), spec.f)
            return spec.f
        if kind == "fluctuator":
            index = self._next_exchange(view)
            return 1.0 if (index // spec.period) % 2 == 0 else 0.0
        if kind == "betrayer":
            return 1.0 if self._next_exchange(view) < spec.k else 0.0
        if kind == "playbook":
            if self._is_victim(view, self._next_exchange(view)):
                return 0.0
            return spec.good_f if role == "sender" else spec.good_return
        if kind == "random":
            return self.rng.uniform(spec.lo, spec.hi)
        raise ConfigError(f"Unknown strategy kind {kind!r}")

    def _bounded(self, units: int, cap: int, role: str) -> int:
        if units < 0 or units > cap:
            clipped = min(max(units, 0), cap)
            logger.warning(f"Agent {self.agent_id} ({self.spec.kind}) {role} decision {units} clamped to {clipped}")
            return clipped
        return units

    def decide_send(self, view: PartnerView) -> int:
        """Units to send, in [0, endowment]."""
        units = round_units(self._fraction(view, "sender") * self.endowment)
        return self._bounded(units, self.endowment, "sender")

    def decide_return(self, view: PartnerView, amount_received: int) -> int:
        """Units to return, in [0, amount_received]."""
        units = round_units(self._fraction(view, "receiver") * amount_received)
        return self._bounded(units, amount_received, "receiver")

    def observe_exchange(self, view: PartnerView, partner_proportion: Optional[float]) -> None:
        """Remembers what the partner just did (None when they had nothing to return)."""
        if partner_proportion is not None:
            self._last_seen[self._key(view)] = partner_proportion


def build_agents(roster: List[RosterEntry], *, seed: int, endowment: int, group_size: int) -> List[Agent]:
    return [
        Agent(entry.agent_id, entry.strategy, seed=seed, endowment=endowment, group_size=group_size)
        for entry in roster
    ]


def parse_roster(data) -> List[RosterEntry]:
    """
    Validates a roster: a list of {agent_id, kind, params}.

    Raises:
        ConfigError listing every problem pydantic found.
    """
    if not isinstance(data, list):
        raise ConfigError("Roster must be a JSON array of {agent_id, kind, params} objects.")
    entries = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ConfigError(f"Roster entry {i} must be an object, got {type(item).__name__}.")
        unknown = set(item) - {"agent_id", "kind", "params"}
        if unknown:
            raise ConfigError(f"Roster entry {i} has unknown keys: {sorted(unknown)}.")
        params = item.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigError(f"Roster entry {i}: params must be an object.")
        entries.append({"agent_id": item.get("agent_id"), "strategy": {"kind": item.get("kind"), **params}})
    try:
        roster = _ROSTER_ADAPTER.validate_python(entries)
    except ValidationError as e:
        problems = "; ".join(
            f"entry {err['loc'][0]} {'.'.join(str(p) for p in err['loc'][1:])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid roster: {problems}") from e
    ids = [entry.agent_id for entry in roster]
    if len(set(ids)) != len(ids):
        raise ConfigError("Roster agent_id values must be unique.")
    return roster


def load_roster(path: Union[str, Path]) -> List[RosterEntry]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Roster {path} is not valid JSON: {e}") from e
    return parse_roster(data)


def roster_to_json(roster: List[RosterEntry]) -> list:
    """Inverse of parse_roster, for provenance manifests."""
    out = []
    for entry in roster:
        params = entry.strategy.model_dump(mode="json")
        kind = params.pop("kind")
        out.append({"agent_id": entry.agent_id, "kind": kind, "params": params})
    return out
