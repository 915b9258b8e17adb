"""Behavioural variations, context-dependent parameters and goal iteration.

A case pairs a goal with a body; the body receives the substitution that
satisfied the goal::

    view = BehaviouralVariation([
        Case(P.physician_can_view_patient(phy, pat), lambda s: show(phy, pat)),
        Case(TRUE_GOAL, lambda s: print(f"{phy} cannot view details on {pat}")),
    ])
    view(ctx)

Goals are solved when a variation is dispatched or a parameter is resolved,
never when it is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generic, Iterable, TypeVar

from .context import Context
from .datalog import TRUE, Atom, Goal, Literal, Var, check_goal, term
from .engine import Substitution, as_goal

T = TypeVar("T")

TRUE_GOAL = Goal((Literal(Atom(TRUE)),))


class AdaptationFailure(Exception):
    """No case of a variation or parameter has a satisfiable goal."""

    display_name = "CoDa.InconsistentContext"

    def __init__(self, failed_goals: Iterable[Goal], epoch: int):
        self.failed_goals = list(failed_goals)
        self.epoch = epoch
        super().__init__("Context inconsistency detected")

    def describe(self) -> str:
        return f"{self.display_name}: {self}"


class _Predicates:
    """``P.name(*args)`` builds an atom; host values become constants."""

    def __getattr__(self, name: str) -> Callable[..., Atom]:
        if name.startswith("__"):
            raise AttributeError(name)

        def build(*args) -> Atom:
            return Atom(name, tuple(term(a) for a in args))

        build.__name__ = name
        return build


class _GoalVars:
    """``V.exam`` is the goal variable ``exam``."""

    def __getattr__(self, name: str) -> Var:
        if name.startswith("__"):
            raise AttributeError(name)
        return Var(name)


P = _Predicates()
V = _GoalVars()


@dataclass(frozen=True)
class Case(Generic[T]):
    goal: Goal
    body: Callable[[Substitution], T]

    def __init__(self, goal, body: Callable[[Substitution], T]):
        goal = as_goal(goal)
        check_goal(goal)
        object.__setattr__(self, "goal", goal)
        object.__setattr__(self, "body", body)


def when(goal, body: Callable[[Substitution], T]) -> Case[T]:
    return Case(goal, body)


def otherwise(body: Callable[[Substitution], T]) -> Case[T]:
    return Case(TRUE_GOAL, body)


def _run_first(cases, ctx: Context) -> Any:
    failed = []
    for case in cases:
        sub = ctx.solve(case.goal)
        if sub is not None:
            return case.body(sub)
        failed.append(case.goal)
    raise AdaptationFailure(failed, ctx.epoch)


@dataclass(frozen=True)
class BehaviouralVariation(Generic[T]):
    """Ordered cases; the first one whose goal holds runs.

    Variations are plain values: store them, pass them around, and compose
    them with ``+`` (left operand's cases first).
    """

    cases: tuple[Case[T], ...]

    def __init__(self, cases: Iterable[Case[T]]):
        cases = tuple(cases)
        if not cases:
            raise ValueError("a behavioural variation needs at least one case")
        object.__setattr__(self, "cases", cases)

    def __add__(self, other: BehaviouralVariation[T]) -> BehaviouralVariation[T]:
        return BehaviouralVariation(self.cases + other.cases)

    def __call__(self, ctx: Context) -> T:
        return dispatch(self, ctx)


def dispatch(bv: BehaviouralVariation[T], ctx: Context) -> T:
    """Run the body of the first case whose goal is satisfiable in ``ctx``.

    The body gets the goal's first solution. Raises
    :class:`AdaptationFailure` when no goal holds.
    """
    return _run_first(bv.cases, ctx)


@dataclass(frozen=True)
class Parameter(Generic[T]):
    """A context-dependent binding declared case by case.

    ``stack[-1]`` is the innermost declaration and is tried first.
    """

    stack: tuple[Case[T], ...]

    @classmethod
    def of(cls, goal, body: Callable[[Substitution], T]) -> Parameter[T]:
        return cls((Case(goal, body),))

    def push(self, goal, body: Callable[[Substitution], T]) -> Parameter[T]:
        return Parameter(self.stack + (Case(goal, body),))

    def pop(self) -> Parameter[T]:
        if len(self.stack) == 1:
            raise ValueError("cannot pop the outermost declaration")
        return Parameter(self.stack[:-1])

    def __call__(self, ctx: Context) -> T:
        return resolve(self, ctx)


def dlet(goal, body: Callable[[Substitution], T], outer: Parameter[T] | None = None) -> Parameter[T]:
    """Declare (or shadow ``outer`` with) a goal-guarded binding."""
    return outer.push(goal, body) if outer is not None else Parameter.of(goal, body)


def resolve(param: Parameter[T], ctx: Context) -> T:
    """Value of ``param`` in the current context, innermost case first."""
    if not param.stack:
        raise ValueError("parameter has no declarations")
    return _run_first(reversed(param.stack), ctx)


def for_each(ctx: Context, goal, body: Callable[[Substitution], Any]) -> int:
    """Run ``body`` once per solution of ``goal``; return the count.

    Solutions come from the model as it was when the loop started.
    """
    n = 0
    for sub in ctx.enumerate(goal):
        body(sub)
        n += 1
    return n
