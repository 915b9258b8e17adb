"""Lowering of Datalog predicates to nested-loop enumerators.

Each predicate becomes an enumerator procedure with one parameter per
argument. A rule becomes a clause block: fresh logic variables for the
variables that only occur in the body, then one loop per positive literal,
nested in body order, with negated literals as emptiness guards, and a
``yield`` at the innermost level. Solutions are communicated through
side-effects on the logic variables, undone by a trail on backtracking.

:func:`run_ir` executes the IR top-down. Plain top-down recursion diverges
on left-recursive rules and cyclic data, so a call that is a variant of an
ancestor (or of any call already run in the current pass) is answered from
that call's answer table instead, and the query is re-run in passes until
no table grows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .datalog import (
    TRUE,
    Atom,
    Constant,
    DatalogError,
    Program,
    Rule,
    Term,
    Var,
    schedule,
)
from .engine import FactStore, Substitution


class UnknownPredicate(DatalogError, KeyError):
    def __str__(self) -> str:
        return f"unknown predicate {self.args[0]}"


# ---------------------------------------------------------------------------
# IR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Unify:
    """Unify an enumerator parameter with a head term."""

    param: str
    term: Term


@dataclass(frozen=True)
class Call:
    """Loop over the solutions of a positive body literal."""

    atom: Atom


@dataclass(frozen=True)
class Guard:
    """Continue only if the negated literal has no solution."""

    atom: Atom


Step = Union[Unify, Call, Guard]


@dataclass(frozen=True)
class ClauseBlock:
    fresh: tuple[str, ...]
    steps: tuple[Step, ...]
    source: Rule


@dataclass(frozen=True)
class Enumerator:
    predicate: str
    params: tuple[str, ...]
    clauses: tuple[ClauseBlock, ...]


@dataclass(frozen=True)
class LoopIR:
    enumerators: dict[str, Enumerator]

    def __getitem__(self, predicate: str) -> Enumerator:
        try:
            return self.enumerators[predicate]
        except KeyError:
            raise UnknownPredicate(predicate) from None

    def __contains__(self, predicate: str) -> bool:
        return predicate in self.enumerators


def _param_names(rules: list[Rule], arity: int) -> tuple[str, ...]:
    # reuse the first rule's head variables when they are distinct
    for rule in rules:
        names = [a.name for a in rule.head.args if isinstance(a, Var) and not a.anonymous]
        if len(names) == arity and len(set(names)) == arity:
            return tuple(names)
    return tuple(f"Arg{i}" for i in range(arity))


def _lower_rule(rule: Rule, params: tuple[str, ...]) -> ClauseBlock:
    rename: dict[str, str] = {}
    steps: list[Step] = []
    for param, t in zip(params, rule.head.args):
        if isinstance(t, Var) and t.name not in rename:
            rename[t.name] = param
        else:
            steps.append(Unify(param, t))
    taken = set(params)
    fresh: list[str] = []
    for v in rule.variables():
        if v in rename:
            continue
        name = v
        k = 1
        while name in taken:
            name = f"{v}_{k}"
            k += 1
        taken.add(name)
        rename[v] = name
        fresh.append(name)

    def sub(a: Atom) -> Atom:
        return Atom(
            a.predicate,
            tuple(Var(rename[t.name]) if isinstance(t, Var) else t for t in a.args),
        )

    steps = [
        Unify(s.param, Var(rename[s.term.name]) if isinstance(s.term, Var) else s.term)
        for s in steps
    ]
    for lit in schedule(rule.body):
        steps.append(Call(sub(lit.atom)) if lit.positive else Guard(sub(lit.atom)))
    return ClauseBlock(tuple(fresh), tuple(steps), rule)


def lower(program: Program) -> LoopIR:
    """One enumerator per predicate of ``program``, clauses in source order."""
    by_pred: dict[str, list[Rule]] = {p: [] for p in program.arities if p != TRUE}
    for rule in program.rules:
        by_pred[rule.head.predicate].append(rule)
    enums = {}
    for pred, rules in by_pred.items():
        params = _param_names(rules, program.arities[pred])
        enums[pred] = Enumerator(pred, params, tuple(_lower_rule(r, params) for r in rules))
    return LoopIR(enums)


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------


def _arg(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    v = t.value
    return str(v) if isinstance(v, int) else '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _call_text(a: Atom) -> str:
    return f"{a.predicate}({', '.join(_arg(t) for t in a.args)})"


def _print_enumerator(e: Enumerator) -> list[str]:
    sig = ", ".join(f"object {p}" for p in e.params)
    lines = [f"public static IEnumerable<bool> {e.predicate}({sig})", "{"]
    ind = "    "
    blocks = [[f"{ind}foreach (bool l1 in Facts.{_call_text(Atom(e.predicate, tuple(Var(p) for p in e.params)))})",
               f"{ind}    yield return false;"]]
    for clause in e.clauses:
        block = [f"{ind}// {clause.source}"]
        for name in clause.fresh:
            block.append(f"{ind}Variable {name} = new Variable();")
        depth = 0
        for step in clause.steps:
            pad = ind + "    " * depth
            if isinstance(step, Unify):
                block.append(f"{pad}foreach (bool l{depth + 2} in YP.unify({step.param}, {_arg(step.term)}))")
            elif isinstance(step, Call):
                block.append(f"{pad}foreach (bool l{depth + 2} in {_call_text(step.atom)})")
            else:
                block.append(f"{pad}if (YP.empty({_call_text(step.atom)}))")
            depth += 1
        block.append(f"{ind}{'    ' * depth}yield return false;")
        blocks.append(block)
    for i, block in enumerate(blocks):
        if i:
            lines.append("")
        lines.extend(block)
    lines.append("}")
    return lines


def print_ir(ir: LoopIR) -> str:
    """Render the IR as C#-like pseudocode, one procedure per predicate.

    Every procedure first scans the stored facts of its predicate, then runs
    its clause blocks. Output is sorted by predicate name.
    """
    chunks = ["\n".join(_print_enumerator(ir.enumerators[p])) + "\n" for p in sorted(ir.enumerators)]
    return "\n".join(chunks)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

_UNBOUND = object()


class LogicVar:
    """A binding cell; only the trail ever unbinds it."""

    __slots__ = ("ref", "id")
    _next = 0

    def __init__(self):
        self.ref = _UNBOUND
        LogicVar._next += 1
        self.id = LogicVar._next

    @property
    def bound(self) -> bool:
        return self.ref is not _UNBOUND

    def __repr__(self) -> str:
        return f"_V{self.id}" if not self.bound else f"_V{self.id}={self.ref!r}"


class Trail:
    def __init__(self):
        self.entries: list[LogicVar] = []

    def mark(self) -> int:
        return len(self.entries)

    def bind(self, var: LogicVar, value) -> None:
        var.ref = value
        self.entries.append(var)

    def undo(self, mark: int) -> None:
        entries = self.entries
        while len(entries) > mark:
            entries.pop().ref = _UNBOUND


def deref(x):
    while isinstance(x, LogicVar) and x.ref is not _UNBOUND:
        x = x.ref
    return x


def unify(a, b, trail: Trail) -> bool:
    a, b = deref(a), deref(b)
    if a is b:
        return True
    if isinstance(a, LogicVar):
        trail.bind(a, b)
        return True
    if isinstance(b, LogicVar):
        trail.bind(b, a)
        return True
    return type(a) is type(b) and a == b


def _variant_key(pred: str, args) -> tuple:
    ids: dict[int, int] = {}
    key = []
    for a in args:
        a = deref(a)
        if isinstance(a, LogicVar):
            key.append(("v", ids.setdefault(id(a), len(ids))))
        else:
            key.append(("c", type(a).__name__, a))
    return (pred, tuple(key))


class _Interpreter:
    def __init__(self, ir: LoopIR, store: FactStore):
        self.ir = ir
        self.store = store
        self.trail = Trail()
        self.tables: dict[tuple, dict[tuple, None]] = {}
        self.complete: set[tuple] = set()
        self.touched: set[tuple] = set()
        self.version = 0
        self.created: list[LogicVar] = []

    def fresh(self) -> LogicVar:
        v = LogicVar()
        self.created.append(v)
        return v

    def _unify_row(self, args, row) -> bool:
        for a, v in zip(args, row):
            if not unify(a, v, self.trail):
                return False
        return True

    def _replay(self, args, rows) -> Iterator[None]:
        for row in rows:
            mark = self.trail.mark()
            try:
                if self._unify_row(args, row):
                    yield
            finally:
                self.trail.undo(mark)

    def _record(self, table: dict, args) -> tuple:
        row = tuple(deref(a) for a in args)
        if row not in table:
            table[row] = None
            self.version += 1
        return row

    def call(self, pred: str, args: list) -> Iterator[None]:
        if pred == TRUE:
            yield
            return
        key = _variant_key(pred, args)
        if key in self.complete or key in self.touched:
            # ancestors and calls already run in this pass read the table
            yield from self._replay(args, list(self.tables.get(key, ())))
            return
        self.touched.add(key)
        enum = self.ir.enumerators.get(pred)
        if enum is None and pred not in self.store.facts:
            raise UnknownPredicate(pred)
        table = self.tables.setdefault(key, {})
        produced: set[tuple] = set()
        for _ in self._replay(args, self.store.rows(pred)):
            produced.add(self._record(table, args))
            yield
        if enum is not None:
            for clause in enum.clauses:
                env = dict(zip(enum.params, args))
                for name in clause.fresh:
                    env[name] = self.fresh()
                for _ in self._steps(clause.steps, 0, env):
                    produced.add(self._record(table, args))
                    yield
        # rows recorded by other activations of this call: every call yields
        # its whole table, which is what makes the final pass exhaustive
        yield from self._replay(args, [r for r in table if r not in produced])

    def _steps(self, steps, i: int, env: dict) -> Iterator[None]:
        if i == len(steps):
            yield
            return
        step = steps[i]

        def val(t):
            return env[t.name] if isinstance(t, Var) else t.value

        if isinstance(step, Unify):
            mark = self.trail.mark()
            try:
                if unify(env[step.param], val(step.term), self.trail):
                    yield from self._steps(steps, i + 1, env)
            finally:
                self.trail.undo(mark)
        elif isinstance(step, Call):
            args = [val(t) for t in step.atom.args]
            for _ in self.call(step.atom.predicate, args):
                yield from self._steps(steps, i + 1, env)
        else:
            args = [val(t) for t in step.atom.args]
            if not self.has_solution(step.atom.predicate, args):
                yield from self._steps(steps, i + 1, env)

    def saturate(self, pred: str, args: list) -> tuple:
        """Re-run a call in passes until no table grows, then freeze the
        tables the last pass touched."""
        key = _variant_key(pred, args)
        if pred == TRUE or key in self.complete:
            return key
        outer = self.touched
        try:
            while True:
                self.touched = set()
                before = self.version
                for _ in self.call(pred, args):
                    pass
                outer |= self.touched
                if self.version == before:
                    break
            self.complete |= self.touched
        finally:
            self.touched = outer
        return key

    def has_solution(self, pred: str, args: list) -> bool:
        if pred == TRUE:
            return True
        key = self.saturate(pred, args)
        return bool(self.tables.get(key))


class Solutions:
    """Iterator over the substitutions produced by :func:`run_ir`.

    ``logic_vars`` lists every binding cell created while solving; all of
    them are unbound again once the stream is exhausted.
    """

    def __init__(self, interp: _Interpreter, pred: str, args: list, cells: dict[str, LogicVar]):
        self._interp = interp
        self._it = self._run(pred, args, cells)

    @property
    def logic_vars(self) -> list[LogicVar]:
        return list(self._interp.created)

    def _run(self, pred, args, cells) -> Iterator[Substitution]:
        self._interp.saturate(pred, args)
        seen: set[tuple] = set()
        names = list(cells)
        for _ in self._interp.call(pred, args):
            row = tuple(deref(cells[n]) for n in names)
            if row not in seen:
                seen.add(row)
                yield dict(zip(names, row))

    def __iter__(self):
        return self

    def __next__(self) -> Substitution:
        return next(self._it)

    def close(self) -> None:
        """Stop early and unbind every cell."""
        self._it.close()
        self._interp.trail.undo(0)


def run_ir(ir: LoopIR, store: FactStore, query: Atom) -> Solutions:
    """Solve ``query`` top-down over the IR and the stored facts.

    Yields one substitution per distinct solution for the query's named
    variables.
    """
    if query.predicate != TRUE and query.predicate not in ir and query.predicate not in store.facts:
        raise UnknownPredicate(query.predicate)
    interp = _Interpreter(ir, store)
    cells: dict[str, LogicVar] = {}
    args: list = []
    for t in query.args:
        if isinstance(t, Constant):
            args.append(t.value)
        elif t.anonymous:
            args.append(interp.fresh())
        else:
            if t.name not in cells:
                cells[t.name] = interp.fresh()
            args.append(cells[t.name])
    return Solutions(interp, query.predicate, args, cells)


__all__ = [
    "Call",
    "ClauseBlock",
    "Enumerator",
    "Guard",
    "LogicVar",
    "LoopIR",
    "Solutions",
    "Trail",
    "Unify",
    "UnknownPredicate",
    "lower",
    "print_ir",
    "run_ir",
    "unify",
]
