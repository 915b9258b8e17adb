"""The e-Healthcare simulator: physicians, patients and their devices.

The context ships as three Datalog parts (``physicians.dl``, ``patients.dl``
and ``devices.dl``). :func:`display` and :func:`find_physician` are written
with the adaptation constructs; a scenario replays calls and context updates
and its transcript is checked against ``<name>.golden.txt``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from ..adaptation import (
    P,
    V,
    AdaptationFailure,
    BehaviouralVariation,
    Parameter,
    dlet,
    for_each,
    otherwise,
    when,
)
from ..context import Context

Out = Callable[[str], None]

NO_DISPLAY = " (current device cannot display the exam data)"


def display_exam(ctx: Context, phy: str, exam: str, out: Out) -> None:
    BehaviouralVariation([
        when(
            [P.physician_device(phy, V.device), P.device_can_display_exam(V.device, exam)],
            lambda s: out(f" - {exam}"),
        ),
        otherwise(lambda s: out(f" - {exam}{NO_DISPLAY}")),
    ])(ctx)


def display(ctx: Context, phy: str, pat: str, out: Out = print) -> None:
    """Print what ``phy`` may see of ``pat`` and the exam to do next."""

    def results(s):
        out(f"{phy} sees that {pat} has done:")
        for_each(ctx, P.patient_has_result(pat, V.exam),
                 lambda s: display_exam(ctx, phy, s["exam"], out))

    def details(s):
        BehaviouralVariation([
            when(P.patient_has_result(pat, V.e), results),
            otherwise(lambda s: out(f"{phy} sees that {pat} has done no exam")),
        ])(ctx)

        next_exam = dlet("True", lambda s: "no exam")
        next_exam = dlet(
            [P.physician_exam(phy, V.exam), P.patient_active_exam(pat, V.exam)],
            lambda s: s["exam"],
            outer=next_exam,
        )
        out(f"{phy} can submit {pat} to {next_exam(ctx)}")

    BehaviouralVariation([
        when(P.physician_can_view_patient(phy, pat), details),
        otherwise(lambda s: out(f"{phy} cannot view details on {pat}")),
    ])(ctx)


def find_physician(ctx: Context, phy: str, out: Out = print) -> str:
    """Location of ``phy``, or ``"unknown location"`` after a warning."""
    loc = Parameter.of(P.physician_location(phy, V.location), lambda s: s["location"])
    try:
        return loc(ctx)
    except AdaptationFailure as exc:
        out(f"WARNING: cannot locate {phy}:")
        out(exc.describe())
        return "unknown location"


def find_physicians(ctx: Context, pat: str, out: Out = print) -> None:
    """List the physicians able to perform an exam ``pat`` needs now."""
    for_each(
        ctx,
        [P.patient_active_exam(pat, V.exam), P.physician_exam(V.physician, V.exam)],
        lambda s: out(
            f"{s['physician']} (currently in {find_physician(ctx, s['physician'], out)})"
            f" can submit {pat} to {s['exam']}"
        ),
    )


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    sources: list[tuple[str, str]]
    steps: list[dict]
    expected: str | None = None

    def context(self) -> Context:
        return Context.load([text for _, text in self.sources], [n for n, _ in self.sources])


def _data(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def scenario_names() -> list[str]:
    return sorted(
        p.name[: -len(".json")]
        for p in resources.files(__name__).iterdir()
        if p.name.endswith(".json")
    )


def load_scenario(name: str = "ehealth") -> Scenario:
    if name not in scenario_names():
        raise KeyError(f"unknown scenario {name!r}")
    data = json.loads(_data(f"{name}.json"))
    sources = [(src, _data(src)) for src in data["sources"]]
    try:
        expected = _data(f"{name}.golden.txt")
    except FileNotFoundError:
        expected = None
    return Scenario(data["name"], sources, data["steps"], expected)


def run_scenario(scenario: Scenario, ctx: Context | None = None) -> str:
    """Replay the scenario against a fresh context; return the transcript."""
    ctx = ctx if ctx is not None else scenario.context()
    lines: list[str] = []
    out = lines.append
    for step in scenario.steps:
        op = step["op"]
        if op == "display":
            display(ctx, step["physician"], step["patient"], out)
        elif op == "find_physicians":
            find_physicians(ctx, step["patient"], out)
        elif op == "tell":
            ctx.tell(step["fact"])
        elif op == "retract":
            ctx.retract(step["fact"])
        elif op == "blank":
            out("")
        else:
            raise ValueError(f"unknown scenario step {op!r}")
    return "".join(line + "\n" for line in lines)
