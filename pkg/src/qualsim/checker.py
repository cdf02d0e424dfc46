"""Independent validation of ground simulations.

Checks a trace directly against the calculus tables and the reference
temporal semantics.  Nothing here touches the constraint store or the
translations, so it can referee them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .calculus import Calculus
from .temporal import FUTURE, PAST, evaluate, evaluate_rule

Stages = Sequence[dict[tuple[str, str], str]]


@dataclass(frozen=True)
class Problem:
    kind: str
    time: int | None
    detail: str

    def __str__(self) -> str:
        at = "" if self.time is None else f" at t={self.time}"
        return f"{self.kind}{at}: {self.detail}"


def check_stage(calc: Calculus, objects: Sequence[str], stage: dict[tuple[str, str], str], t: int | None = None) -> list[Problem]:
    """Reflexivity, converse and composition of one qualitative array."""
    out = []
    ident = calc.relation_names[calc.identity]
    names = set(calc.relation_names)
    for a in objects:
        for b in objects:
            rel = stage.get((a, b))
            if rel is None:
                out.append(Problem("missing", t, f"Q[{a},{b}]"))
            elif rel not in names:
                out.append(Problem("unknown relation", t, f"Q[{a},{b}] = {rel}"))
    if out:
        return out
    for a in objects:
        if stage[(a, a)] != ident:
            out.append(Problem("reflexivity", t, f"Q[{a},{a}] = {stage[(a, a)]}"))
        for b in objects:
            if stage[(b, a)] != calc.conv(stage[(a, b)]):
                out.append(Problem("converse", t, f"Q[{a},{b}] = {stage[(a, b)]}, Q[{b},{a}] = {stage[(b, a)]}"))
    for a in objects:
        for b in objects:
            for c in objects:
                allowed = calc.compose(stage[(a, b)], stage[(b, c)])
                if stage[(a, c)] not in allowed:
                    out.append(Problem("composition", t, f"{a} {stage[(a, b)]} {b}, {b} {stage[(b, c)]} {c}, but {a} {stage[(a, c)]} {c}"))
    return out


def check_transitions(calc: Calculus, objects: Sequence[str], stages: Stages) -> list[Problem]:
    out = []
    for t in range(len(stages) - 1):
        for a in objects:
            for b in objects:
                r, s = stages[t][(a, b)], stages[t + 1][(a, b)]
                if r != s and s not in calc.neighbourhood(r):
                    out.append(Problem("neighbourhood", t, f"Q[{a},{b}] jumps {r} -> {s}"))
    return out


def check_simulation(scenario, stages: Stages) -> list[Problem]:
    """Every problem with ``stages`` as a simulation of ``scenario``."""
    calc = scenario.calculus
    objs = scenario.objects
    if not stages:
        return [Problem("empty", None, "no stages")]
    out: list[Problem] = []
    for t, stage in enumerate(stages):
        out += check_stage(calc, objs, stage, t)
    if out:
        return out
    out += check_transitions(calc, objs, stages)
    end = len(stages) - 1
    for t in range(len(stages)):
        for f in scenario.intra:
            if not evaluate(f, stages, (t, t), FUTURE):
                out.append(Problem("intra-state", t, str(f)))
    for f in scenario.initial:
        if not evaluate(f, stages, (0, 0), PAST):
            out.append(Problem("initial", 0, str(f)))
    for rule in scenario.rules:
        for t0 in range(end):
            if not evaluate_rule(rule, stages, t0, end):
                out.append(Problem("rule", t0, rule.label or str(rule)))
    for f in scenario.goals:
        if not evaluate(f, stages, (0, end), FUTURE):
            out.append(Problem("goal", None, str(f)))
    for f in scenario.final:
        if not evaluate(f, stages, (end, end), FUTURE):
            out.append(Problem("final", end, str(f)))
    if scenario.options.non_circular:
        seen: dict[tuple, int] = {}
        for t, stage in enumerate(stages):
            key = tuple(sorted(stage.items()))
            if key in seen:
                out.append(Problem("non-circularity", t, f"repeats stage {seen[key]}"))
            seen.setdefault(key, t)
    k = scenario.options.max_changes_per_step
    if k is not None:
        for t in range(end):
            changed = sum(
                stages[t][(a, b)] != stages[t + 1][(a, b)]
                for i, a in enumerate(objs)
                for b in objs[i + 1:]
            )
            if changed > k:
                out.append(Problem("change limit", t, f"{changed} pairs change"))
    return out
