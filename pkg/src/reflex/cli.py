"""Command-line entry points: ``reflex solve``, ``reflex neuron-trace``, ``reflex run``.

Exit codes: 0 success, 1 error, 2 success but some subject is frustrated.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .algebra import ParseError
from .codec import UnknownCode
from .netsim import DeliveryError, SelectivityError
from .neuron import NeuronParams, Pulse, simulate
from .rgt import (
    Frustration,
    InfluenceMatrix,
    NotDecomposable,
    decision_formula,
    forward_task,
    graph_to_polynomial,
    inverse_task,
)
from .scenario import (
    ConfigError,
    ScenarioConfig,
    decision_record,
    matrix_record,
    parse_omega,
    relations_record,
    resolve_scenario,
    run_scenario,
    write_outputs,
)

EXIT_OK, EXIT_ERROR, EXIT_FRUSTRATION = 0, 1, 2


def _error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _load(args) -> ScenarioConfig:
    path = args.config or args.scenario
    if not path:
        raise ConfigError("--config", "no scenario given")
    return ScenarioConfig.load(resolve_scenario(path))


def cmd_solve(args) -> int:
    try:
        cfg = _load(args)
        universe = cfg.universe_set()
        graph = cfg.direct_graph(args.seed)
        poly = graph_to_polynomial(graph)
        folded = decision_formula(graph)
        out_dir = Path(args.out_dir)
        if args.task == "forward":
            matrix = InfluenceMatrix(cfg.ids, cfg.influence_intents())
            results = forward_task(folded, matrix, universe)
            report = {
                "task": "forward",
                "subjects": cfg.ids,
                "relations": relations_record(graph),
                "polynomial": str(poly),
                "decision_formula": str(folded),
                "influence_matrix": matrix_record(matrix),
                "decisions": {s: decision_record(r) for s, r in results.items()},
            }
            name = "decisions.json"
            code = EXIT_FRUSTRATION if any(isinstance(r, Frustration) for r in results.values()) else EXIT_OK
        else:
            if not args.subject or args.target is None:
                raise ConfigError("--subject/--target", "the inverse task needs both")
            if args.subject not in cfg.ids:
                raise ConfigError("--subject", f"unknown subject {args.subject!r}")
            try:
                target = universe.parse_set(args.target)
            except ParseError as exc:
                raise ConfigError("--target", str(exc)) from None
            solutions = inverse_task(folded, args.subject, target, cfg.ids, universe)
            report = {
                "task": "inverse",
                "polynomial": str(poly),
                "controlled": args.subject,
                "target": str(target),
                "solutions": [{k: str(v) for k, v in sol.items()} for sol in solutions],
            }
            name = "inverse.json"
            code = EXIT_OK
    except (ConfigError, NotDecomposable, ValueError) as exc:
        return _error(str(exc))
    text = json.dumps(report, indent=2) + "\n"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    sys.stdout.write(text)
    return code


def parse_pulses(spec: str) -> list[Pulse]:
    """``"0.4@1,0.4@2.3333"`` -> pulses sorted by time."""
    pulses = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        mag, sep, time = item.partition("@")
        if not sep:
            raise ValueError(f"pulse {item!r} is not of the form mag@time")
        pulses.append(Pulse(float(time), float(mag)))
    return sorted(pulses, key=lambda p: p.time)


def cmd_neuron_trace(args) -> int:
    try:
        omega = parse_omega(args.omega)
        pulses = parse_pulses(args.pulses)
        last = pulses[-1].time if pulses else 0.0
        duration = args.duration if args.duration is not None else max(last + 3.0, 5.0)
        trace = simulate(NeuronParams(omega=omega), pulses, duration)
    except ValueError as exc:
        return _error(str(exc))
    trace.write_csv(args.out)
    for t in trace.spikes:
        print(f"{t:.6g}")
    print(f"{len(trace.spikes)} spike(s); trace written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
        result = run_scenario(cfg, args.seed)
        traces = bool(args.traces or cfg.outputs.get("traces", False))
        written = write_outputs(result, Path(args.out_dir), traces)
    except (ConfigError, NotDecomposable, DeliveryError, SelectivityError, UnknownCode, ValueError) as exc:
        return _error(str(exc))
    for path in written:
        print(path)
    return EXIT_FRUSTRATION if result.frustrated else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reflex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="forward or inverse task straight from a scenario")
    solve.add_argument("scenario", nargs="?")
    solve.add_argument("--config")
    solve.add_argument("--task", choices=["forward", "inverse"], default="forward")
    solve.add_argument("--subject")
    solve.add_argument("--target")
    solve.add_argument("--seed", type=int)
    solve.add_argument("--out-dir", default=".")
    solve.set_defaults(func=cmd_solve)

    trace = sub.add_parser("neuron-trace", help="simulate one resonate-and-fire neuron")
    trace.add_argument("--omega", required=True)
    trace.add_argument("--pulses", default="")
    trace.add_argument("--duration", type=float)
    trace.add_argument("--out", default="trace.csv")
    trace.set_defaults(func=cmd_neuron_trace)

    run = sub.add_parser("run", help="full negotiation, influence exchange and inference")
    run.add_argument("scenario", nargs="?")
    run.add_argument("--config")
    run.add_argument("--seed", type=int)
    run.add_argument("--out-dir", default=".")
    run.add_argument("--traces", action="store_true", help="also write per-channel voltage traces")
    run.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
