"""Shared-medium simulation of a group of units negotiating and deciding.

Every transmission is two trains: the sender's ID-code on its own carrier, then,
0.5 time units after the ID spike, the payload on the addressee's carrier.  All
units hear everything, so every unit ends a round with the same knowledge.
Transmissions are serialized on one global clock; collisions never happen.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .algebra import ActionSet, UniversalSet
from .codec import (
    ALLIANCE,
    CONFLICT,
    ID,
    AllianceCode,
    AltCode,
    Codebook,
    ConflictCode,
    PulseTrain,
    Symbol,
    decode,
    detect,
    encode,
    expand,
)
from .neuron import NeuronParams, Pulse
from .rgt import (
    DecisionResult,
    InfluenceMatrix,
    Relation,
    RelationshipGraph,
    decision_formula,
    first_strategy,
    forward_task,
    inverse_task,
)

log = logging.getLogger(__name__)

PAYLOAD_DELAY = 0.5
ONSET = 1.0
DEFAULT_OMEGAS = {"a": 3 * math.pi / 2, "b": 4 * math.pi / 3, "c": 5 * math.pi / 3}


class DeliveryError(RuntimeError):
    pass


class SelectivityError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    sender: str
    addressee: str
    symbol: Symbol
    id_phase_time: float
    payload_time: float
    id_train: PulseTrain
    payload_train: PulseTrain
    crosstalk: tuple[str, ...] = ()


@dataclass
class Unit:
    id: str
    own_omega: float
    bank: dict[str, NeuronParams]
    relationship_intents: dict[str, Relation] = field(default_factory=dict)
    influence_intents: dict[str, ActionSet] = field(default_factory=dict)
    # (sender, receiver) -> what was heard on the medium
    relations_seen: dict[tuple[str, str], Relation] = field(default_factory=dict)
    influences_seen: dict[tuple[str, str], ActionSet] = field(default_factory=dict)
    heard: list[Message] = field(default_factory=list)

    def observe(self, msg: Message) -> None:
        self.heard.append(msg)
        key = (msg.sender, msg.addressee)
        if isinstance(msg.symbol, AllianceCode):
            self.relations_seen[key] = Relation.ALLIANCE
        elif isinstance(msg.symbol, ConflictCode):
            self.relations_seen[key] = Relation.CONFLICT
        elif isinstance(msg.symbol, AltCode):
            self.influences_seen[key] = msg.symbol.value

    @property
    def inbox(self) -> list[Message]:
        return [m for m in self.heard if m.addressee == self.id]

    def relationship_graph(self, subjects: Sequence[str]) -> RelationshipGraph:
        """Alliance iff both directions proposed alliance."""
        pairs = {}
        for i, u in enumerate(subjects):
            for v in subjects[i + 1:]:
                try:
                    both = (self.relations_seen[u, v], self.relations_seen[v, u])
                except KeyError as exc:
                    raise DeliveryError(f"unit {self.id} never heard relationship code {exc.args[0]}") from None
                allied = all(r is Relation.ALLIANCE for r in both)
                pairs[u, v] = Relation.ALLIANCE if allied else Relation.CONFLICT
        return RelationshipGraph.from_pairs(subjects, pairs)

    def influence_matrix(self, subjects: Sequence[str]) -> InfluenceMatrix:
        return InfluenceMatrix(subjects, self.influences_seen)

    def knowledge(self) -> dict:
        """Serializable view of everything this unit has learned."""
        return {
            "relations": {f"{s}->{r}": rel.value for (s, r), rel in sorted(self.relations_seen.items())},
            "influences": {f"{s}->{r}": str(v) for (s, r), v in sorted(self.influences_seen.items())},
            "messages": [
                [m.sender, m.addressee, str(m.symbol), m.id_phase_time, m.payload_time] for m in self.heard
            ],
        }


@dataclass
class Medium:
    log: list[PulseTrain] = field(default_factory=list)
    clock: float = ONSET


@dataclass(frozen=True)
class NegotiationParams:
    p_alliance: float = 0.61
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p_alliance <= 1:
            raise ValueError(f"p_alliance must be in [0, 1], got {self.p_alliance}")


@functools.lru_cache(maxsize=4096)
def _detect_cached(bank: tuple, pulses: tuple, window: tuple) -> tuple:
    return tuple(detect(dict(bank), list(pulses), window))


def addressing_leaks(
    omegas: Mapping[str, float], book: Codebook, template: NeuronParams | None = None, symbols=None
) -> list[tuple[str, str, str]]:
    """Selectivity self-test: ``(symbol, carrier unit, channel)`` for every wrong outcome.

    A wrong outcome is the carrier resonator staying silent or another resonator firing.
    """
    template = template or NeuronParams(omega=1.0)
    bank = tuple((u, _with_omega(template, w)) for u, w in omegas.items())
    symbols = symbols if symbols is not None else [s for _, s in book.entries]
    bad = []
    for sym in symbols:
        for carrier, w in omegas.items():
            train = encode(sym, w, ONSET, carrier, book)
            fired = {ch for ch, _ in _detect_cached(bank, tuple(expand(train)), train.window)}
            for ch in omegas:
                if (ch == carrier) != (ch in fired):
                    bad.append((str(sym), carrier, ch))
    return bad


def _with_omega(template: NeuronParams, omega: float) -> NeuronParams:
    return NeuronParams(
        omega=omega,
        b=template.b,
        tau=template.tau,
        threshold=template.threshold,
        spike_value=template.spike_value,
        reset_value=template.reset_value,
    )


class Network:
    """A group of units sharing one medium."""

    def __init__(
        self,
        omegas: Mapping[str, float],
        universe: UniversalSet,
        book: Codebook | None = None,
        neuron: NeuronParams | None = None,
        self_test: bool = True,
    ):
        if len(set(omegas.values())) != len(omegas):
            raise ValueError("unit frequencies must be unique")
        self.universe = universe
        self.book = book or Codebook.default(universe)
        self.neuron = neuron or NeuronParams(omega=1.0)
        self.subjects = tuple(omegas)
        self.units = {
            u: Unit(u, w, {v: _with_omega(self.neuron, wv) for v, wv in omegas.items()})
            for u, w in omegas.items()
        }
        self.medium = Medium()
        self.messages: list[Message] = []
        if self_test:
            leaks = addressing_leaks(omegas, self.book, self.neuron, [ID, CONFLICT])
            if leaks:
                raise SelectivityError(f"carrier frequencies are not selective: {leaks}")

    def _hear(self, unit: Unit, train: PulseTrain) -> list[tuple[str, float]]:
        return list(_detect_cached(tuple(unit.bank.items()), tuple(expand(train)), train.window))

    def send(self, sender: str, addressee: str, sym: Symbol) -> Message:
        if sender == addressee:
            raise ValueError(f"unit {sender} cannot address itself")
        src, dst = self.units[sender], self.units[addressee]

        id_train = encode(ID, src.own_omega, self.medium.clock, sender, self.book)
        self.medium.log.append(id_train)
        id_spikes = []
        for unit in self.units.values():
            hits = [t for ch, t in self._hear(unit, id_train) if ch == sender]
            if not hits:
                raise DeliveryError(f"unit {unit.id} saw no ID spike from {sender} at t={id_train.start_time:g}")
            id_spikes.append(hits[0])
        id_time = min(id_spikes)

        payload = encode(sym, dst.own_omega, id_time + PAYLOAD_DELAY, sender, self.book)
        self.medium.log.append(payload)
        crosstalk: set[str] = set()
        for unit in self.units.values():
            fired = {ch for ch, _ in self._hear(unit, payload)}
            if addressee not in fired:
                raise DeliveryError(
                    f"unit {unit.id} saw no spike on {addressee}'s channel for {sym} from {sender}"
                )
            crosstalk |= fired - {addressee}
        if crosstalk:
            log.warning(
                "%s -> %s (%s): resonators %s also fired", sender, addressee, sym, sorted(crosstalk)
            )

        decoded = decode(payload, self.book, src.own_omega)
        msg = Message(
            sender, addressee, decoded, id_time, payload.start_time, id_train, payload, tuple(sorted(crosstalk))
        )
        self.messages.append(msg)
        for unit in self.units.values():
            unit.observe(msg)
        self.medium.clock = payload.window[1]
        return msg

    def knowledge_identical(self) -> bool:
        views = [u.knowledge() for u in self.units.values()]
        return all(v == views[0] for v in views)

    def message_rows(self) -> list[list[str]]:
        """Rows for the message log: one per train on the medium."""
        rows = []
        for m in self.messages:
            for train, decoded, to in ((m.id_train, "id", "*"), (m.payload_train, str(m.symbol), m.addressee)):
                rows.append(
                    [
                        f"{train.start_time:.6g}",
                        m.sender,
                        f"{train.carrier_omega:.6g}",
                        " ".join(f"{x:.6g}" for x in train.magnitudes),
                        decoded,
                        to,
                    ]
                )
        return rows


# --- protocol phases -------------------------------------------------------


@dataclass
class IntentTable:
    draws: dict[tuple[str, str], float]
    intents: dict[tuple[str, str], Relation]

    def codes(self) -> dict[tuple[str, str], int]:
        """1 for alliance, 0 for conflict."""
        return {k: int(r is Relation.ALLIANCE) for k, r in self.intents.items()}


def ordered_pairs(ids: Sequence[str]) -> list[tuple[str, str]]:
    ids = sorted(ids)
    return [(u, v) for u in ids for v in ids if u != v]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def draw_relationship_intents(
    unit_ids: Sequence[str],
    params: NegotiationParams,
    rng: np.random.Generator | None = None,
    draws: Mapping[tuple[str, str], float] | None = None,
) -> IntentTable:
    """A draw above ``p_alliance`` means conflict; injected draws bypass the generator."""
    rng = rng if rng is not None else make_rng(params.seed)
    table = IntentTable({}, {})
    for pair in ordered_pairs(unit_ids):
        value = float(draws[pair]) if draws is not None else float(rng.random())
        table.draws[pair] = value
        table.intents[pair] = Relation.CONFLICT if value > params.p_alliance else Relation.ALLIANCE
    return table


def intents_from_relations(graph: RelationshipGraph) -> IntentTable:
    """Both directions propose the installed relation."""
    intents = {(u, v): graph.relation(u, v) for u, v in ordered_pairs(graph.subjects)}
    return IntentTable({}, intents)


def install_relationships(net: Network, table: IntentTable) -> RelationshipGraph:
    for (u, v), rel in table.intents.items():
        net.units[u].relationship_intents[v] = rel
    for u, v in ordered_pairs(net.subjects):
        net.send(u, v, ALLIANCE if table.intents[u, v] is Relation.ALLIANCE else CONFLICT)
    graphs = [unit.relationship_graph(net.subjects) for unit in net.units.values()]
    if any(g != graphs[0] for g in graphs):
        raise DeliveryError("units disagree on the relationship graph")
    return graphs[0]


def and_rule(subjects: Sequence[str], table: IntentTable) -> RelationshipGraph:
    """The installed graph computed straight from intents, without the channel."""
    pairs = {}
    for i, u in enumerate(subjects):
        for v in subjects[i + 1:]:
            allied = table.intents[u, v] is Relation.ALLIANCE and table.intents[v, u] is Relation.ALLIANCE
            pairs[u, v] = Relation.ALLIANCE if allied else Relation.CONFLICT
    return RelationshipGraph.from_pairs(subjects, pairs)


def exchange_influences(net: Network, intents: Mapping[tuple[str, str], ActionSet]) -> InfluenceMatrix:
    for (u, v), value in intents.items():
        net.units[u].influence_intents[v] = value
    for u, v in ordered_pairs(net.subjects):
        net.send(u, v, AltCode(intents[u, v]))
    matrices = [unit.influence_matrix(net.subjects) for unit in net.units.values()]
    if any(m != matrices[0] for m in matrices):
        raise DeliveryError("units disagree on the influence matrix")
    return matrices[0]


def rgt_round(net: Network) -> dict[str, DecisionResult]:
    """Every unit runs the inference on its own knowledge; the answers must agree."""
    results = []
    for unit in net.units.values():
        graph = unit.relationship_graph(net.subjects)
        matrix = unit.influence_matrix(net.subjects)
        results.append(forward_task(decision_formula(graph), matrix, net.universe))
    if any(r != results[0] for r in results):
        raise DeliveryError("units reached different decisions from shared knowledge")
    return results[0]


def plan_influence(
    unit: str, graph: RelationshipGraph, controlled: str, target: ActionSet, universe: UniversalSet
) -> dict[str, ActionSet] | None:
    """Reflexive control: the first joint influence pinning ``controlled`` to ``target``."""
    if unit not in graph.subjects:
        raise ValueError(f"{unit} is not in the group")
    if unit == controlled:
        return None
    solutions = inverse_task(decision_formula(graph), controlled, target, graph.subjects, universe)
    order = [s for s in graph.subjects if s != controlled]
    return first_strategy(solutions, order)


def medium_pulses(net: Network) -> list[Pulse]:
    """Every pulse on the medium, time-ordered; all resonators hear all of them."""
    pulses = [p for train in net.medium.log for p in expand(train)]
    return sorted(pulses, key=lambda p: p.time)
