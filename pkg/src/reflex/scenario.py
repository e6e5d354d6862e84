"""Scenario files: parsing, validation, and the full negotiation/decision run."""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from . import netsim
from .algebra import ActionSet, ParseError, UniversalSet
from .codec import Codebook
from .neuron import simulate
from .rgt import (
    Frustration,
    Interval,
    InfluenceMatrix,
    Relation,
    RelationshipGraph,
    decision_formula,
    graph_to_polynomial,
    interval_members,
)


class ConfigError(ValueError):
    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


_OMEGA = re.compile(r"^\s*([0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$")


def parse_omega(value) -> float:
    """Accept plain numbers or ``3pi/2``-style strings."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _OMEGA.match(value)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        try:
            return float(value)
        except ValueError:
            pass
    raise ValueError(f"bad frequency {value!r}")


def _split_key(key: str, sep: str, ids, fieldname: str) -> tuple[str, str]:
    parts = key.split(sep)
    if len(parts) != 2 or parts[0] not in ids or parts[1] not in ids or parts[0] == parts[1]:
        raise ConfigError(fieldname, f"bad pair {key!r} (expected 'u{sep}v' with two distinct unit ids)")
    return parts[0], parts[1]


@dataclass
class ScenarioConfig:
    universe: list[str]
    units: list[dict]
    relations: dict[str, str] | None = None
    draws: dict[str, float] | None = None
    influences: dict[str, str] | None = None
    plan: dict[str, str] | None = None
    codebook: list[dict] | None = None
    p_alliance: float = 0.61
    seed: int = 0
    outputs: dict[str, Any] = field(default_factory=dict)

    # --- parsing ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("<root>", "scenario must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        for required in ("universe", "units"):
            if required not in data:
                raise ConfigError(required, "missing")
        cfg = cls(
            universe=list(data["universe"]),
            units=[dict(u) for u in data["units"]],
            relations=dict(data["relations"]) if data.get("relations") is not None else None,
            draws=dict(data["draws"]) if data.get("draws") is not None else None,
            influences=dict(data["influences"]) if data.get("influences") is not None else None,
            plan=dict(data["plan"]) if data.get("plan") is not None else None,
            codebook=[dict(r) for r in data["codebook"]] if data.get("codebook") is not None else None,
            p_alliance=data.get("p_alliance", 0.61),
            seed=data.get("seed", 0),
            outputs=dict(data.get("outputs", {})),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"universe": list(self.universe), "units": [dict(u) for u in self.units]}
        for name in ("relations", "draws", "influences", "plan"):
            value = getattr(self, name)
            if value is not None:
                out[name] = dict(value)
        if self.codebook is not None:
            out["codebook"] = [dict(r) for r in self.codebook]
        out["p_alliance"] = self.p_alliance
        out["seed"] = self.seed
        if self.outputs:
            out["outputs"] = dict(self.outputs)
        return out

    def validate(self) -> None:
        try:
            universe = self.universe_set()
        except (ValueError, TypeError) as exc:
            raise ConfigError("universe", str(exc)) from None
        ids = []
        for i, unit in enumerate(self.units):
            if not isinstance(unit.get("id"), str) or not unit["id"]:
                raise ConfigError(f"units[{i}].id", "must be a non-empty string")
            try:
                if parse_omega(unit.get("omega")) <= 0:
                    raise ValueError("must be positive")
            except ValueError as exc:
                raise ConfigError(f"units[{i}].omega", str(exc)) from None
            ids.append(unit["id"])
        if len(ids) < 2:
            raise ConfigError("units", "need at least two units")
        if len(set(ids)) != len(ids):
            raise ConfigError("units", f"duplicate ids in {ids}")
        if self.relations is not None and self.draws is not None:
            raise ConfigError("relations", "give either relations or draws, not both")
        if self.relations is not None:
            seen = set()
            for key, label in self.relations.items():
                u, v = _split_key(key, "-", ids, "relations")
                if label not in ("alliance", "conflict"):
                    raise ConfigError("relations", f"pair {key!r} has label {label!r}; use alliance|conflict")
                seen.add(frozenset((u, v)))
            missing = [f"{u}-{v}" for i, u in enumerate(ids) for v in ids[i + 1:] if frozenset((u, v)) not in seen]
            if missing:
                raise ConfigError("relations", f"missing pairs {missing}")
        if self.draws is not None:
            self._check_ordered(self.draws, ids, "draws")
            for key, value in self.draws.items():
                if not isinstance(value, (int, float)) or not 0 <= value <= 1:
                    raise ConfigError("draws", f"{key!r} must be a number in [0, 1]")
        if self.influences is not None:
            self._check_ordered(self.influences, ids, "influences")
            for key, text in self.influences.items():
                try:
                    universe.parse_set(str(text))
                except ParseError as exc:
                    raise ConfigError("influences", f"{key!r}: {exc}") from None
        if self.plan is not None:
            for name in ("planner", "controlled", "target"):
                if name not in self.plan:
                    raise ConfigError(f"plan.{name}", "missing")
            for name in ("planner", "controlled"):
                if self.plan[name] not in ids:
                    raise ConfigError(f"plan.{name}", f"unknown unit {self.plan[name]!r}")
            try:
                universe.parse_set(self.plan["target"])
            except ParseError as exc:
                raise ConfigError("plan.target", str(exc)) from None
            if self.influences is None:
                raise ConfigError("plan", "planning needs an influences table to amend")
        if self.codebook is not None:
            try:
                self.book()
            except (ValueError, KeyError) as exc:
                raise ConfigError("codebook", str(exc)) from None
        if not isinstance(self.p_alliance, (int, float)) or not 0 <= self.p_alliance <= 1:
            raise ConfigError("p_alliance", "must be in [0, 1]")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")

    @staticmethod
    def _check_ordered(table: Mapping, ids, fieldname: str) -> None:
        seen = {_split_key(k, "->", ids, fieldname) for k in table}
        missing = [f"{u}->{v}" for u in ids for v in ids if u != v and (u, v) not in seen]
        if missing:
            raise ConfigError(fieldname, f"missing entries {missing}")

    # --- typed views -----------------------------------------------------

    @property
    def ids(self) -> list[str]:
        return [u["id"] for u in self.units]

    def universe_set(self) -> UniversalSet:
        return UniversalSet(tuple(self.universe))

    def omegas(self) -> dict[str, float]:
        return {u["id"]: parse_omega(u["omega"]) for u in self.units}

    def book(self) -> Codebook:
        universe = self.universe_set()
        if self.codebook is None:
            return Codebook.default(universe)
        return Codebook.from_records(self.codebook, universe)

    def intent_table(self, seed: int | None = None) -> netsim.IntentTable:
        params = netsim.NegotiationParams(self.p_alliance, self.seed if seed is None else seed)
        if self.relations is not None:
            return netsim.intents_from_relations(self.graph_from_relations())
        draws = None
        if self.draws is not None:
            draws = {_split_key(k, "->", self.ids, "draws"): v for k, v in self.draws.items()}
        return netsim.draw_relationship_intents(self.ids, params, draws=draws)

    def graph_from_relations(self) -> RelationshipGraph:
        pairs = {_split_key(k, "-", self.ids, "relations"): Relation(v) for k, v in self.relations.items()}
        return RelationshipGraph.from_pairs(self.ids, pairs)

    def direct_graph(self, seed: int | None = None) -> RelationshipGraph:
        """Installed graph without simulating the channel."""
        if self.relations is not None:
            return self.graph_from_relations()
        return netsim.and_rule(self.ids, self.intent_table(seed))

    def influence_intents(self) -> dict[tuple[str, str], ActionSet]:
        if self.influences is None:
            raise ConfigError("influences", "missing")
        universe = self.universe_set()
        return {
            _split_key(k, "->", self.ids, "influences"): universe.parse_set(str(v))
            for k, v in self.influences.items()
        }


def bundled(name: str) -> Path:
    return Path(str(resources.files("reflex") / "scenarios" / name))


def resolve_scenario(path: str) -> Path:
    """A filesystem path, or the name of a bundled scenario such as ``example3.json``."""
    p = Path(path)
    if p.exists():
        return p
    candidate = bundled(p.name)
    if candidate.exists():
        return candidate
    raise ConfigError("--config", f"no such scenario file {path!r}")


# --- reports ---------------------------------------------------------------


def decision_record(result) -> dict:
    if isinstance(result, Frustration):
        return {"status": "frustration"}
    assert isinstance(result, Interval)
    return {
        "status": "interval",
        "lower": str(result.lower),
        "upper": str(result.upper),
        "members": [str(s) for s in interval_members(result)],
    }


def matrix_record(matrix: InfluenceMatrix) -> dict:
    return {f"{r}->{c}": str(v) for (r, c), v in sorted(matrix.cells().items())}


def relations_record(graph: RelationshipGraph) -> dict:
    subjects = graph.subjects
    return {
        f"{u}-{v}": graph.relation(u, v).value for i, u in enumerate(subjects) for v in subjects[i + 1:]
    }


@dataclass
class RunResult:
    net: netsim.Network
    report: dict
    frustrated: bool


def run_scenario(cfg: ScenarioConfig, seed: int | None = None) -> RunResult:
    """Negotiate relationships, exchange influences, and run the inference round."""
    universe = cfg.universe_set()
    net = netsim.Network(cfg.omegas(), universe, cfg.book())
    table = cfg.intent_table(seed)
    graph = netsim.install_relationships(net, table)
    poly = graph_to_polynomial(graph)
    report: dict[str, Any] = {
        "seed": cfg.seed if seed is None else seed,
        "universe": list(cfg.universe),
        "subjects": list(net.subjects),
        "relationship_codes": {f"{u}->{v}": c for (u, v), c in table.codes().items()},
        "relations": relations_record(graph),
        "polynomial": str(poly),
        "decision_formula": str(decision_formula(graph)),
    }
    if table.draws:
        report["draws"] = {f"{u}->{v}": round(x, 6) for (u, v), x in table.draws.items()}

    frustrated = False
    if cfg.influences is not None:
        intents = cfg.influence_intents()
        if cfg.plan is not None:
            planner, controlled = cfg.plan["planner"], cfg.plan["controlled"]
            target = universe.parse_set(cfg.plan["target"])
            strategy = netsim.plan_influence(planner, graph, controlled, target, universe)
            report["plan"] = {
                "planner": planner,
                "controlled": controlled,
                "target": str(target),
                "strategy": None if strategy is None else {k: str(v) for k, v in strategy.items()},
            }
            if strategy is not None and planner in strategy:
                intents[planner, controlled] = strategy[planner]
        matrix = netsim.exchange_influences(net, intents)
        results = netsim.rgt_round(net)
        report["influence_matrix"] = matrix_record(matrix)
        report["decisions"] = {s: decision_record(r) for s, r in results.items()}
        frustrated = any(isinstance(r, Frustration) for r in results.values())

    report["crosstalk"] = [
        {"time": float(f"{m.payload_time:.6g}"), "sender": m.sender, "addressee": m.addressee,
         "symbol": str(m.symbol), "channels": list(m.crosstalk)}
        for m in net.messages
        if m.crosstalk
    ]
    return RunResult(net, report, frustrated)


MESSAGE_HEADER = ["time", "sender", "carrier", "mags", "decoded", "addressee"]


def write_outputs(result: RunResult, out_dir: Path, traces: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    messages = out_dir / "messages.csv"
    with open(messages, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MESSAGE_HEADER)
        w.writerows(result.net.message_rows())
    written.append(messages)
    decisions = out_dir / "decisions.json"
    decisions.write_text(json.dumps(result.report, indent=2) + "\n")
    written.append(decisions)
    if traces:
        pulses = netsim.medium_pulses(result.net)
        duration = result.net.medium.clock
        for channel, params in next(iter(result.net.units.values())).bank.items():
            path = out_dir / f"trace_{channel}.csv"
            simulate(params, pulses, duration).write_csv(path)
            written.append(path)
    return written
