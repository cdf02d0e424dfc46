"""Command-line entry point: ``qsim solve|enumerate|validate-calculus|check-trace``.

Exit status: 0 on a solution or a valid input, 1 on no solution or an
invalid input, 2 on usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .calculus import BUILTINS, CalculusError, load_calculus, validate
from .checker import check_simulation
from .simulate import (
    EnumerationResult,
    Scenario,
    ScenarioError,
    SimulationResult,
    Status,
    enumerate_simulations,
    load_scenario,
    simulate,
)
from .temporal import FormulaError
from .translate import ARRAY, UNFOLD

COMMANDS = ("solve", "enumerate", "validate-calculus", "check-trace")
FORMAT_VERSION = 1


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsim", description="Qualitative spatial simulation by constraint solving.")
    p.add_argument("command_pos", nargs="?", metavar="command", choices=COMMANDS, help="|".join(COMMANDS))
    p.add_argument("scenario_pos", nargs="?", metavar="scenario", help="builtin scenario name or YAML file")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--scenario", metavar="PATH")
    p.add_argument("--translation", choices=(UNFOLD, ARRAY))
    p.add_argument("--heuristic", choices=("default", "tractable"))
    p.add_argument("--horizon", type=int, metavar="N", help="number of stages (enumerate)")
    p.add_argument("--max-steps", type=int, metavar="N", help="t_max: largest number of stages tried")
    p.add_argument("--limit", type=int, metavar="N", help="most solutions to enumerate")
    p.add_argument("--node-budget", type=int, metavar="N")
    p.add_argument("--time-budget", type=float, metavar="SECONDS")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--no-non-circularity", action="store_true", help="allow stages to repeat")
    p.add_argument("--trace", metavar="FILE", help="structured solve output to check ('-' for stdin)")
    p.add_argument("--calculus", metavar="NAME_OR_PATH", help="calculus to validate")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


# -- structured documents -------------------------------------------------------------------


def stages_to_json(objects: Sequence[str], stages) -> list[dict[str, dict[str, str]]]:
    return [{a: {b: stage[(a, b)] for b in objects} for a in objects} for stage in stages]


def stages_from_json(objects: Sequence[str], doc: Any) -> list[dict[tuple[str, str], str]]:
    if not isinstance(doc, list):
        raise UsageError("'stages' must be a list")
    out = []
    for t, stage in enumerate(doc):
        if not isinstance(stage, dict):
            raise UsageError(f"stage {t} must be a mapping")
        ground = {}
        for a, row in stage.items():
            if not isinstance(row, dict):
                raise UsageError(f"stage {t}, row {a} must be a mapping")
            for b, rel in row.items():
                ground[(str(a), str(b))] = str(rel)
        out.append(ground)
    return out


def transitions(objects: Sequence[str], stages) -> list[dict[str, Any]]:
    out = []
    for t in range(len(stages) - 1):
        changes = [
            {"pair": [a, b], "from": stages[t][(a, b)], "to": stages[t + 1][(a, b)]}
            for i, a in enumerate(objects)
            for b in objects[i + 1:]
            if stages[t][(a, b)] != stages[t + 1][(a, b)]
        ]
        out.append({"from": t, "to": t + 1, "changes": changes})
    return out


def result_document(scenario: Scenario, result: SimulationResult) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "status": result.status.value,
        "num_transitions": result.num_transitions,
        "message": result.message,
        "stages": None,
        "transitions": None,
    }
    if result.stages is not None:
        doc["stages"] = stages_to_json(scenario.objects, result.stages)
        doc["transitions"] = transitions(scenario.objects, result.stages)
    # wall-clock times are left out so the document is reproducible
    doc["stats"] = [
        {
            "horizon": h.horizon,
            "consistent": h.consistent,
            "nodes": h.nodes,
            "backtracks": h.backtracks,
            "variables": h.variables,
            "constraints": h.constraints,
        }
        for h in result.stats
    ]
    return doc


def config_echo(args: argparse.Namespace, scenario: Scenario | None) -> dict[str, Any]:
    opts = scenario.options if scenario is not None else None
    return {
        "command": args.command,
        "scenario": args.scenario,
        "scenario_name": scenario.name if scenario is not None else None,
        "calculus": scenario.calculus.name if scenario is not None else args.calculus,
        "objects": list(scenario.objects) if scenario is not None else None,
        "translation": args.translation or (opts.translation if opts else None),
        "heuristic": args.heuristic or (opts.heuristic if opts else None),
        "non_circular": (not args.no_non_circularity) and (opts.non_circular if opts else True),
        "horizon": args.horizon,
        "max_steps": args.max_steps,
        "limit": args.limit,
        "node_budget": args.node_budget,
        "time_budget": args.time_budget,
    }


def emit(doc: dict[str, Any], out) -> None:
    json.dump(doc, out, indent=2, sort_keys=False)
    out.write("\n")


# -- text rendering -----------------------------------------------------------------------------


def render_table(objects: Sequence[str], stages) -> str:
    pairs = [(a, b) for i, a in enumerate(objects) for b in objects[i + 1:]]
    header = ["t"] + [f"{a},{b}" for a, b in pairs]
    rows = [[str(t)] + [stage[p] for p in pairs] for t, stage in enumerate(stages)]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]

    def line(cells: list[str]) -> str:
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows])


def render_result(scenario: Scenario, result: SimulationResult, out) -> None:
    for h in result.stats:
        state = "consistent" if h.consistent else "inconsistent"
        print(
            f"horizon {h.horizon:>3}: {state:<12} nodes={h.nodes} backtracks={h.backtracks} "
            f"vars={h.variables} constraints={h.constraints} {h.seconds:.2f}s",
            file=out,
        )
    print(f"status: {result.status.value}", file=out)
    if result.message:
        print(f"note: {result.message}", file=out)
    if result.stages is not None:
        print(render_table(scenario.objects, result.stages), file=out)
        print(f"transitions: {result.num_transitions}", file=out)


# -- commands ------------------------------------------------------------------------------------


def _scenario(args: argparse.Namespace) -> Scenario:
    if not args.scenario:
        raise UsageError(f"{args.command} needs a scenario")
    return load_scenario(args.scenario)


def _non_circular(args: argparse.Namespace) -> bool | None:
    return False if args.no_non_circularity else None


def cmd_solve(args: argparse.Namespace, out) -> int:
    scenario = _scenario(args)
    def progress(h):
        print(f"horizon {h.horizon}: consistent={h.consistent} nodes={h.nodes} {h.seconds:.2f}s", file=sys.stderr)
    result = simulate(
        scenario,
        t_max=args.max_steps,
        heuristic=args.heuristic,
        translation=args.translation,
        non_circular=_non_circular(args),
        node_budget=args.node_budget,
        time_budget=args.time_budget,
        progress=progress if args.verbose else None,
    )
    if args.format == "structured":
        doc = {"format": FORMAT_VERSION, "config": config_echo(args, scenario)}
        doc.update(result_document(scenario, result))
        emit(doc, out)
    else:
        render_result(scenario, result, out)
    return 0 if result.status is Status.SOLUTION else 1


def cmd_enumerate(args: argparse.Namespace, out) -> int:
    scenario = _scenario(args)
    if args.horizon is None or args.horizon < 1:
        raise UsageError("enumerate needs --horizon N with N >= 1")
    res: EnumerationResult = enumerate_simulations(
        scenario,
        args.horizon,
        args.limit,
        heuristic=args.heuristic,
        translation=args.translation,
        non_circular=_non_circular(args),
        node_budget=args.node_budget,
        time_budget=args.time_budget,
    )
    if args.format == "structured":
        doc = {
            "format": FORMAT_VERSION,
            "config": config_echo(args, scenario),
            "count": len(res.simulations),
            "truncated": res.truncated,
            "simulations": [stages_to_json(scenario.objects, s.stages) for s in res.simulations],
        }
        emit(doc, out)
    else:
        for i, sim in enumerate(res.simulations):
            print(f"simulation {i + 1}:", file=out)
            print(render_table(scenario.objects, sim.stages), file=out)
        more = " (limit reached, more exist)" if res.truncated else ""
        print(f"{len(res.simulations)} simulation(s) with {args.horizon} stage(s){more}", file=out)
    return 0 if res.simulations else 1


def cmd_validate_calculus(args: argparse.Namespace, out) -> int:
    if args.calculus:
        if args.calculus in BUILTINS:
            calc = BUILTINS[args.calculus]()
        else:
            try:
                text = Path(args.calculus).read_text()
            except OSError as e:
                raise UsageError(f"cannot read calculus {args.calculus}: {e}") from e
            calc = load_calculus(text, strict=False)
    elif args.scenario:
        calc = load_scenario(args.scenario).calculus
    else:
        raise UsageError("validate-calculus needs --calculus or a scenario")
    problems = validate(calc)
    if args.format == "structured":
        emit({
            "format": FORMAT_VERSION,
            "calculus": calc.name,
            "relations": list(calc.relation_names),
            "valid": not problems,
            "violations": [{"axiom": v.axiom, "witness": list(v.witness)} for v in problems],
        }, out)
    else:
        print(f"calculus {calc.name}: {len(calc)} relations", file=out)
        for v in problems:
            print(f"  violation: {v}", file=out)
        print("valid" if not problems else f"invalid ({len(problems)} violations)", file=out)
    return 0 if not problems else 1


def cmd_check_trace(args: argparse.Namespace, out) -> int:
    if not args.trace:
        raise UsageError("check-trace needs --trace FILE")
    try:
        raw = sys.stdin.read() if args.trace == "-" else Path(args.trace).read_text()
        doc = json.loads(raw)
    except OSError as e:
        raise UsageError(f"cannot read trace: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed trace: {e}") from e
    if not isinstance(doc, dict):
        raise UsageError("a trace document must be a mapping")
    ref = args.scenario or (doc.get("config") or {}).get("scenario")
    if not ref:
        raise UsageError("check-trace needs a scenario (none given and none recorded in the trace)")
    scenario = load_scenario(ref)
    if args.no_non_circularity:
        scenario.options.non_circular = False
    elif (doc.get("config") or {}).get("non_circular") is False:
        scenario.options.non_circular = False
    if doc.get("stages") is None:
        raise UsageError("the trace holds no stages")
    stages = stages_from_json(scenario.objects, doc["stages"])
    problems = check_simulation(scenario, stages)
    if args.format == "structured":
        emit({
            "format": FORMAT_VERSION,
            "scenario": scenario.name,
            "num_transitions": len(stages) - 1,
            "valid": not problems,
            "problems": [{"kind": p.kind, "time": p.time, "detail": p.detail} for p in problems],
        }, out)
    else:
        for p in problems:
            print(f"  {p}", file=out)
        verdict = "valid" if not problems else f"invalid ({len(problems)} problems)"
        print(f"{scenario.name}: {len(stages) - 1} transitions, {verdict}", file=out)
    return 0 if not problems else 1


HANDLERS = {
    "solve": cmd_solve,
    "enumerate": cmd_enumerate,
    "validate-calculus": cmd_validate_calculus,
    "check-trace": cmd_check_trace,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command_pos and args.command and args.command_pos != args.command:
        print("qsim: conflicting commands", file=sys.stderr)
        return 2
    args.command = args.command or args.command_pos
    if args.scenario_pos and args.scenario and args.scenario_pos != args.scenario:
        print("qsim: conflicting scenarios", file=sys.stderr)
        return 2
    args.scenario = args.scenario or args.scenario_pos
    if not args.command:
        parser.print_usage(sys.stderr)
        print("qsim: a command is required", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return HANDLERS[args.command](args, out)
    except (UsageError, ScenarioError, CalculusError, FormulaError) as e:
        print(f"qsim: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
