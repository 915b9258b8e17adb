"""Adaptation-construct properties, each checked on one random case.

Every check takes a ``random.Random`` so the same code backs both the
hypothesis tests and the fixed-count acceptance run. Expected outcomes come
from the naive oracle in :mod:`helpers`, not from the engine.
"""

from __future__ import annotations

import random

from coda.adaptation import AdaptationFailure, BehaviouralVariation, Case, Parameter, dispatch, for_each, resolve
from coda.context import Context
from coda.datalog import Atom, Constant, Goal, Literal, Var

from helpers import brute_force_solutions, naive_model, random_case


class World:
    def __init__(self, rng: random.Random):
        case = random_case(rng, cyclic=rng.random() < 0.3)
        self.rng = rng
        self.ctx = Context(case.program, case.store.copy())
        self.consts = sorted({v for rows in case.store.facts.values() for row in rows for v in row}, key=repr)
        self.consts = self.consts or ["c0"]

    def oracle(self) -> dict:
        return naive_model(self.ctx.program, self.ctx.store)

    def answers(self, goal: Goal) -> set:
        return brute_force_solutions(self.oracle(), goal)

    def goal(self) -> Goal:
        rng, arities = self.rng, self.ctx.arities
        preds = sorted(p for p in arities if p != "True")
        lits = []
        for _ in range(rng.randint(1, 2)):
            p = rng.choice(preds)
            args = tuple(
                Var(rng.choice("XYZ")) if rng.random() < 0.7 else Constant(rng.choice(self.consts))
                for _ in range(arities[p])
            )
            lits.append(Literal(Atom(p, args)))
        bound = sorted({v for l in lits for v in l.atom.variables()})
        if bound and rng.random() < 0.3:
            p = rng.choice(preds)
            args = tuple(Var(rng.choice(bound)) for _ in range(arities[p]))
            lits.append(Literal(Atom(p, args), False))
        return Goal(tuple(lits))

    def unsatisfiable(self) -> Goal:
        return Goal((Literal(Atom("never_holds", (Var("X"),))),))

    def fresh_fact(self) -> Atom:
        p = self.rng.choice(sorted(p for p in self.ctx.arities if p != "True"))
        return Atom(p, tuple(Constant(self.rng.choice(self.consts + ["zz"])) for _ in range(self.ctx.arities[p])))


def _probe(calls: list, tag):
    def body(sub):
        calls.append(tag)
        return (tag, tuple(sorted(sub.items())))
    return body


def _outcome(fn):
    try:
        return ("ok", fn())
    except AdaptationFailure as exc:
        return ("fail", len(exc.failed_goals))


def check_ordered_dispatch(rng: random.Random) -> None:
    """First satisfiable case runs, alone; unsatisfiable prefixes change nothing."""
    w = World(rng)
    goals = [w.goal() for _ in range(rng.randint(1, 4))]
    calls: list = []
    bv = BehaviouralVariation([Case(g, _probe(calls, i)) for i, g in enumerate(goals)])
    result = _outcome(lambda: dispatch(bv, w.ctx))
    sat = [bool(w.answers(g)) for g in goals]
    if any(sat):
        first = sat.index(True)
        assert result[0] == "ok" and result[1][0] == first
        sub = dict(result[1][1])
        assert set(sub) == set(goals[first].variables)
        assert tuple(sub[v] for v in goals[first].variables) in w.answers(goals[first])
        assert calls == [first]
    else:
        assert result == ("fail", len(goals)) and calls == []
    prefixed = BehaviouralVariation([Case(w.unsatisfiable(), _probe(calls, "dead"))]) + bv
    calls.clear()
    again = _outcome(lambda: dispatch(prefixed, w.ctx))
    assert "dead" not in calls and len(calls) <= 1
    if result[0] == "ok":
        assert again == result
    else:
        assert again == ("fail", len(goals) + 1)


def check_failure_iff_all_fail(rng: random.Random) -> None:
    w = World(rng)
    goals = [w.goal() if rng.random() < 0.6 else w.unsatisfiable() for _ in range(rng.randint(1, 3))]
    p = Parameter(tuple(Case(g, lambda s: "v") for g in goals))
    expect_fail = not any(w.answers(g) for g in goals)
    try:
        resolve(p, w.ctx)
        assert not expect_fail
    except AdaptationFailure as exc:
        assert expect_fail
        assert exc.failed_goals == list(reversed(goals))
        assert exc.epoch == w.ctx.epoch
        assert str(exc) == "Context inconsistency detected"


def check_shadowing(rng: random.Random) -> None:
    """Push of a satisfiable case wins; pop restores the previous answer."""
    w = World(rng)
    calls: list = []
    p = Parameter.of(w.goal(), _probe(calls, "outer"))
    for i in range(rng.randint(0, 2)):
        p = p.push(w.goal(), _probe(calls, f"mid{i}"))
    before = _outcome(lambda: resolve(p, w.ctx))
    sat_goal = w.goal() if rng.random() < 0.5 else Goal((Literal(Atom("True")),))
    if not w.answers(sat_goal):
        sat_goal = Goal((Literal(Atom("True")),))
    shadowed = p.push(sat_goal, _probe(calls, "inner"))
    calls.clear()
    assert _outcome(lambda: resolve(shadowed, w.ctx))[1][0] == "inner"
    assert calls == ["inner"]
    calls.clear()
    assert _outcome(lambda: resolve(shadowed.pop(), w.ctx)) == before
    assert len(calls) <= 1


def check_laziness(rng: random.Random) -> None:
    """A parameter sees tells and retracts made after it was built."""
    w = World(rng)
    fact = w.fresh_fact()
    goal = Goal((Literal(fact),))
    p = Parameter.of("True", lambda s: "default").push(goal, lambda s: "present")
    w.ctx.retract(fact)
    # a rule may still derive the fact once the stored copy is gone
    derivable = bool(w.answers(goal))
    assert resolve(p, w.ctx) == ("present" if derivable else "default")
    w.ctx.tell(fact)
    assert resolve(p, w.ctx) == "present"
    w.ctx.retract(fact)
    assert resolve(p, w.ctx) == ("present" if derivable else "default")


def check_for_each_count(rng: random.Random) -> None:
    w = World(rng)
    goal = w.goal()
    seen = []
    n = for_each(w.ctx, goal, seen.append)
    assert n == len(seen) == len(list(w.ctx.enumerate(goal))) == len(w.answers(goal))
    assert {tuple(s[v] for v in goal.variables) for s in seen} == w.answers(goal)


def check_snapshot_isolation(rng: random.Random) -> None:
    """Tells from inside the loop body do not reach the running iteration."""
    w = World(rng)
    goal = w.goal()
    expected = w.answers(goal)
    seen = []

    def body(sub):
        seen.append(tuple(sub[v] for v in goal.variables))
        w.ctx.tell(w.fresh_fact())

    for_each(w.ctx, goal, body)
    assert len(seen) == len(expected) and set(seen) == expected


PROPERTIES = {
    "ordered dispatch / prefix insensitivity": check_ordered_dispatch,
    "adaptation failure iff all goals fail": check_failure_iff_all_fail,
    "innermost-first shadowing": check_shadowing,
    "laziness across tell": check_laziness,
    "for_each count = enumerate length": check_for_each_count,
    "snapshot isolation": check_snapshot_isolation,
}
