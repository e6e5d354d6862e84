"""Resonate-and-fire neuron on the explicit Euler map ``z <- z + tau (b + i omega) z``.

The discrete map is the model; it is not an approximation to be refined.  Pulses
kick the voltage-like variable ``y`` (the imaginary part of ``z``).  Crossing the
threshold marks a spike: the sample is set to ``spike_value`` and the next
sample's ``y`` is overwritten with ``reset_value``; ``x`` is left alone.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class NeuronParams:
    omega: float
    b: float = -0.1
    tau: float = 0.005
    threshold: float = 1.0
    spike_value: float = 1.5
    reset_value: float = 0.1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.threshold > self.reset_value:
            raise ValueError("threshold must exceed reset_value")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def step_gain(self) -> float:
        """Modulus of the one-step linear map, ``|1 + tau (b + i omega)|``."""
        return abs(1 + self.tau * complex(self.b, self.omega))


@dataclass(frozen=True)
class NeuronState:
    x: float = 0.0
    y: float = 0.0
    t: float = 0.0

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class Pulse:
    time: float
    magnitude: float

    def __post_init__(self):
        if self.time < 0:
            raise ValueError(f"pulse time must be >= 0, got {self.time}")


@dataclass
class Trace:
    tau: float
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    spikes: list[float] = field(default_factory=list)

    @property
    def ys(self) -> list[float]:
        return [s[2] for s in self.samples]

    def spiked_between(self, start: float, end: float) -> list[float]:
        return [t for t in self.spikes if start <= t <= end]

    def write_csv(self, path) -> None:
        spike_set = set(self.spikes)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "spike"])
            for t, x, y in self.samples:
                w.writerow([f"{t:.6g}", f"{x:.6g}", f"{y:.6g}", int(t in spike_set)])


def step(s: NeuronState, p: NeuronParams) -> NeuronState:
    z = s.z
    z = z + p.tau * complex(p.b, p.omega) * z
    return NeuronState(z.real, z.imag, s.t + p.tau)


def inject(s: NeuronState, magnitude: float) -> NeuronState:
    return NeuronState(s.x, s.y + magnitude, s.t)


def grid_index(time: float, tau: float) -> int:
    """First grid step at or after ``time``; tolerant of float noise in ``time / tau``."""
    return math.ceil(time / tau - 1e-9)


def simulate(p: NeuronParams, pulses: Sequence[Pulse], duration: float) -> Trace:
    """Run the neuron from rest for ``duration`` time units.

    Each tick: apply the pulses that snap to this grid point, check the
    threshold, record the sample, then advance one Euler step.
    """
    times = [q.time for q in pulses]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("pulses must be sorted by time")
    if pulses and times[-1] > duration:
        raise ValueError(f"duration {duration} ends before the last pulse at {times[-1]}")

    n = int(round(duration / p.tau))
    kicks: dict[int, float] = {}
    for q in pulses:
        k = grid_index(q.time, p.tau)
        kicks[k] = kicks.get(k, 0.0) + q.magnitude

    rate = p.tau * complex(p.b, p.omega)
    trace = Trace(p.tau)
    z = 0j
    reset_pending = False
    for k in range(n + 1):
        t = k * p.tau
        if reset_pending:
            z = complex(z.real, p.reset_value)
            reset_pending = False
        if k in kicks:
            z += 1j * kicks[k]
        if z.imag >= p.threshold:
            trace.spikes.append(t)
            z = complex(z.real, p.spike_value)
            reset_pending = True
        trace.samples.append((t, z.real, z.imag))
        z = z + rate * z
    return trace


def count_spikes(p: NeuronParams, pulses: Iterable[Pulse], duration: float) -> int:
    return len(simulate(p, list(pulses), duration).spikes)
