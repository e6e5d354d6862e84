"""Three-pulse codes: codebook, pulse-train assembly and resonator-bank detection.

A train carries three magnitudes spaced one carrier period apart.  Detection is
physical (every resonator in a bank is simulated on the shared pulse stream);
decoding is symbolic and reads the magnitudes straight off the train record.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .algebra import ActionSet, UniversalSet
from .neuron import NeuronParams, Pulse, simulate

DEFAULT_EPSILON = 0.04
# time after the last pulse during which a resonator may still cross threshold
LISTEN_TAIL = 2.0


class UnknownCode(ValueError):
    def __init__(self, magnitudes):
        super().__init__(f"no codebook entry near {tuple(magnitudes)}")
        self.magnitudes = tuple(magnitudes)


@dataclass(frozen=True)
class IdCode:
    def __str__(self):
        return "id"


@dataclass(frozen=True)
class AllianceCode:
    def __str__(self):
        return "alliance"


@dataclass(frozen=True)
class ConflictCode:
    def __str__(self):
        return "conflict"


@dataclass(frozen=True)
class AltCode:
    value: ActionSet

    def __str__(self):
        return f"alt:{self.value}"


Symbol = IdCode | AllianceCode | ConflictCode | AltCode
ID, ALLIANCE, CONFLICT = IdCode(), AllianceCode(), ConflictCode()


def parse_symbol(text: str, universe: UniversalSet) -> Symbol:
    text = text.strip()
    if text == "id":
        return ID
    if text == "alliance":
        return ALLIANCE
    if text == "conflict":
        return CONFLICT
    if text.startswith("alt:"):
        return AltCode(universe.parse_set(text[4:]))
    raise ValueError(f"unknown symbol {text!r}")


def _key(sym: Symbol) -> Symbol:
    # ID-code and alliance code share one tuple; the carrier tells them apart
    return ID if isinstance(sym, AllianceCode) else sym


class Codebook:
    def __init__(self, entries: Sequence[tuple[Sequence[float], Symbol]], epsilon: float = DEFAULT_EPSILON):
        self.epsilon = epsilon
        self.entries: list[tuple[tuple[float, float, float], Symbol]] = []
        seen: dict[Symbol, tuple] = {}
        for mags, sym in entries:
            mags = tuple(float(m) for m in mags)
            if len(mags) != 3:
                raise ValueError(f"codes have exactly 3 magnitudes, got {mags}")
            key = _key(sym)
            if key in seen:
                raise ValueError(f"symbol {sym} listed twice ({seen[key]} and {mags})")
            seen[key] = mags
            self.entries.append((mags, key))
        for i, (m1, s1) in enumerate(self.entries):
            for m2, s2 in self.entries[i + 1:]:
                if max(abs(a - b) for a, b in zip(m1, m2)) <= 2 * epsilon:
                    raise ValueError(f"codes {m1} ({s1}) and {m2} ({s2}) are not {epsilon}-separable")

    @classmethod
    def default(cls, universe: UniversalSet) -> "Codebook":
        """The six standard tuples; alternative names follow the two-action algebra {alpha, beta}."""
        if universe.size != 2:
            raise ValueError("the default codebook covers a two-action universe only")
        first, second = universe.actions
        return cls(
            [
                ((0.4, 0.4, 0.4), ID),
                ((-0.4, -0.4, -0.4), CONFLICT),
                ((0.2, 0.3, 0.7), AltCode(universe.full())),
                ((0.7, 0.3, 0.2), AltCode(universe.empty())),
                ((0.5, 0.2, 0.5), AltCode(universe.of([first]))),
                ((0.3, 0.6, 0.3), AltCode(universe.of([second]))),
            ]
        )

    @classmethod
    def from_records(cls, records: Sequence[Mapping], universe: UniversalSet, epsilon=DEFAULT_EPSILON):
        return cls([(r["magnitudes"], parse_symbol(r["symbol"], universe)) for r in records], epsilon)

    @classmethod
    def load(cls, path, universe: UniversalSet) -> "Codebook":
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, Mapping):
            return cls.from_records(data["entries"], universe, data.get("epsilon", DEFAULT_EPSILON))
        return cls.from_records(data, universe)

    def to_records(self) -> list[dict]:
        return [{"magnitudes": list(m), "symbol": str(s)} for m, s in self.entries]

    def magnitudes_for(self, sym: Symbol) -> tuple[float, float, float]:
        key = _key(sym)
        for mags, s in self.entries:
            if s == key:
                return mags
        raise ValueError(f"symbol {sym} is not in the codebook")

    def lookup(self, magnitudes: Sequence[float]) -> Symbol:
        if len(magnitudes) != 3:
            raise UnknownCode(magnitudes)
        best = None
        for mags, sym in self.entries:
            dist = max(abs(a - b) for a, b in zip(mags, magnitudes))
            if dist <= self.epsilon and (best is None or dist < best[0]):
                best = (dist, sym)
        if best is None:
            raise UnknownCode(magnitudes)
        return best[1]


@dataclass(frozen=True)
class PulseTrain:
    carrier_omega: float
    magnitudes: tuple[float, float, float]
    start_time: float
    sender: str

    @property
    def period(self) -> float:
        return 2 * math.pi / self.carrier_omega

    @property
    def end_time(self) -> float:
        """Time of the last pulse."""
        return self.start_time + 2 * self.period

    @property
    def window(self) -> tuple[float, float]:
        return self.start_time, self.end_time + LISTEN_TAIL


def encode(sym: Symbol, carrier_omega: float, start_time: float, sender: str, book: Codebook) -> PulseTrain:
    return PulseTrain(carrier_omega, book.magnitudes_for(sym), start_time, sender)


def expand(train: PulseTrain) -> list[Pulse]:
    return [Pulse(train.start_time + k * train.period, m) for k, m in enumerate(train.magnitudes)]


def detect(
    bank: Mapping[str, NeuronParams], pulses: Sequence[Pulse], window: tuple[float, float]
) -> list[tuple[str, float]]:
    """Drive every resonator with the same pulse stream; report spikes inside ``window``.

    Resonators start at rest at the window start (or the first pulse, if earlier).
    """
    start, end = window
    origin = min([start] + [q.time for q in pulses])
    local = [Pulse(q.time - origin, q.magnitude) for q in pulses]
    hits = []
    for channel, params in bank.items():
        trace = simulate(params, local, end - origin)
        hits.extend((channel, origin + t) for t in trace.spiked_between(start - origin, end - origin))
    hits.sort(key=lambda h: (h[1], h[0]))
    return hits


def decode(train: PulseTrain, book: Codebook, own_omega: float) -> Symbol:
    """Nearest codebook symbol; the 0.4 triple reads as ID-code only on the sender's own frequency."""
    if len(train.magnitudes) != 3:
        raise UnknownCode(train.magnitudes)
    sym = book.lookup(train.magnitudes)
    if isinstance(sym, IdCode) and not math.isclose(train.carrier_omega, own_omega, rel_tol=1e-9):
        return ALLIANCE
    return sym
