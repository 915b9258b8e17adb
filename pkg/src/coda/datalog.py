"""Datalog abstract syntax, a text parser, and the admission checks.

Context programs are pure Datalog: constants are text or 64-bit integers,
variables start with an uppercase letter or ``_``, and negation is written
``\\+``. Only safe and stratified programs are admitted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

Value = Union[str, int]

TRUE = "True"  # built-in nullary predicate, holds in every model

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class DatalogError(Exception):
    pass


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.message}"


class ParseErrors(DatalogError):
    def __init__(self, errors: Sequence[Diagnostic]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


class SafetyErrors(DatalogError):
    """Raised with one ``(rule, variable)`` pair per unsafe occurrence."""

    def __init__(self, violations: Sequence[tuple[Rule, str]]):
        self.violations = list(violations)
        super().__init__("\n".join(self.lines()))

    def lines(self) -> list[str]:
        out = []
        for rule, var in self.violations:
            msg = f"unsafe variable {var} in rule: {rule}"
            out.append(f"{rule.pos}: {msg}" if rule.pos else msg)
        return out


class NotStratifiable(DatalogError):
    """A dependency cycle goes through negation; ``cycle`` is a witness."""

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__("negative dependency cycle: " + " -> ".join(self.cycle))


class ArityMismatch(DatalogError, ValueError):
    pass


class NonGroundFact(DatalogError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pos:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Constant:
    value: Value

    def __str__(self) -> str:
        return format_value(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable names must be non-empty")

    @property
    def anonymous(self) -> bool:
        return self.name.startswith("_")

    def __str__(self) -> str:
        return self.name


Term = Union[Constant, Var]


def term(x) -> Term:
    """Coerce a host value (or an existing term) to a term."""
    if isinstance(x, (Constant, Var)):
        return x
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise TypeError(f"unsupported constant {x!r}: only str and int are atoms")
    if isinstance(x, int) and not INT64_MIN <= x <= INT64_MAX:
        raise ValueError(f"integer constant {x} does not fit in 64 bits")
    return Constant(x)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()
    pos: Pos | None = field(default=None, compare=False, repr=False)

    @classmethod
    def of(cls, predicate: str, *args) -> Atom:
        return cls(predicate, tuple(term(a) for a in args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[str]:
        for a in self.args:
            if isinstance(a, Var):
                yield a.name

    def is_ground(self) -> bool:
        return all(isinstance(a, Constant) for a in self.args)

    def values(self) -> tuple[Value, ...]:
        """Argument values of a ground atom."""
        if not self.is_ground():
            raise NonGroundFact(f"{self} is not ground")
        return tuple(a.value for a in self.args)  # type: ignore[union-attr]

    def __invert__(self) -> Literal:
        return Literal(self, positive=False)

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __invert__(self) -> Literal:
        return Literal(self.atom, not self.positive)

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"\\+ {self.atom}"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...] = ()
    pos: Pos | None = field(default=None, compare=False, repr=False)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for v in self.head.variables():
            seen[v] = None
        for lit in self.body:
            for v in lit.atom.variables():
                seen[v] = None
        return list(seen)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True, eq=False)
class Program:
    """An ordered list of rules together with the predicate arity table."""

    rules: tuple[Rule, ...] = ()
    arities: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_rules(cls, rules: Iterable[Rule]) -> Program:
        rules = tuple(rules)
        arities: dict[str, int] = {}
        errors = []
        for rule in rules:
            for atom in [rule.head, *(lit.atom for lit in rule.body)]:
                err = _record_arity(arities, atom)
                if err:
                    errors.append(err)
        if errors:
            raise ParseErrors(errors)
        return cls(rules, arities)

    def __eq__(self, other):
        if not isinstance(other, Program):
            return NotImplemented
        return self.rules == other.rules and dict(self.arities) == dict(other.arities)

    __hash__ = None  # type: ignore[assignment]

    @property
    def facts(self) -> list[Rule]:
        return [r for r in self.rules if r.is_fact]

    @property
    def proper_rules(self) -> list[Rule]:
        return [r for r in self.rules if not r.is_fact]

    @property
    def idb(self) -> set[str]:
        return {r.head.predicate for r in self.rules if not r.is_fact}

    @property
    def edb(self) -> set[str]:
        return set(self.arities) - self.idb

    def without_facts(self) -> Program:
        return Program(tuple(self.proper_rules), dict(self.arities))

    def __add__(self, other: Program) -> Program:
        return Program.from_rules(self.rules + other.rules)

    def __str__(self) -> str:
        return "".join(f"{r}\n" for r in self.rules)


def _record_arity(arities: dict[str, int], atom: Atom) -> Diagnostic | None:
    known = arities.setdefault(atom.predicate, atom.arity)
    if known == atom.arity:
        return None
    pos = atom.pos or Pos("<string>", 0, 0)
    return Diagnostic(
        pos.file, pos.line, pos.col,
        f"predicate {atom.predicate} used with arity {atom.arity}, previously {known}",
    )


@dataclass(frozen=True)
class Goal:
    """A conjunctive query; its named variables are the goal variables."""

    literals: tuple[Literal, ...] = ()

    @property
    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for lit in self.literals:
            for v in lit.atom.variables():
                if not v.startswith("_"):
                    seen[v] = None
        return list(seen)

    def __str__(self) -> str:
        return ", ".join(map(str, self.literals))


_BARE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def format_value(value: Value) -> str:
    if isinstance(value, int):
        return str(value)
    if _BARE.match(value) and value != TRUE:
        return value
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<implies>:-)
  | (?P<neg>\\\+)
  | (?P<int>-?\d+)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<gvar>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sq>'(?:[^'\\\n]|\\.)*')
  | (?P<dq>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[(),.])
    """,
    re.VERBOSE,
)

_ESCAPE = re.compile(r"\\(.)")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


class _Syntax(Exception):
    def __init__(self, tok: _Tok, message: str):
        self.tok = tok
        self.message = message


def _tokenize(src: str, file: str, goal_mode: bool, errors: list[Diagnostic]) -> list[_Tok]:
    toks = []
    i, line, line_start = 0, 1, 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        col = i - line_start + 1
        if m is None or (m.lastgroup == "gvar" and not goal_mode):
            errors.append(Diagnostic(file, line, col, f"unexpected character {src[i]!r}"))
            i += 1
            continue
        kind, text = m.lastgroup, m.group()
        if kind != "ws":
            toks.append(_Tok(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = i + text.rindex("\n") + 1
        i = m.end()
    toks.append(_Tok("eof", "", line, i - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, file: str, goal_mode: bool = False):
        self.file = file
        self.errors: list[Diagnostic] = []
        self.toks = _tokenize(src, file, goal_mode, self.errors)
        self.i = 0
        self.anon = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def pos(self, tok: _Tok) -> Pos:
        return Pos(self.file, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if tok.text != text or tok.kind not in ("punct", "implies"):
            found = tok.text or "end of input"
            raise _Syntax(tok, f"expected {text!r}, found {found!r}")
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == text

    def term(self) -> Term:
        tok = self.tok
        self.i += 1
        if tok.kind == "var":
            if tok.text.startswith("_"):
                self.anon += 1
                return Var(f"_{self.anon - 1}")
            return Var(tok.text)
        if tok.kind == "gvar":
            return Var(tok.text[1:])
        if tok.kind == "ident":
            return Constant(tok.text)
        if tok.kind in ("sq", "dq"):
            return Constant(_ESCAPE.sub(r"\1", tok.text[1:-1]))
        if tok.kind == "int":
            value = int(tok.text)
            if not INT64_MIN <= value <= INT64_MAX:
                raise _Syntax(tok, f"integer {tok.text} out of 64-bit range")
            return Constant(value)
        self.i -= 1
        raise _Syntax(tok, f"expected a term, found {tok.text or 'end of input'!r}")

    def atom(self) -> Atom:
        tok = self.tok
        if tok.kind == "var" and tok.text == TRUE:
            self.i += 1
            return Atom(TRUE, (), self.pos(tok))
        if tok.kind != "ident":
            raise _Syntax(tok, f"expected a predicate name, found {tok.text or 'end of input'!r}")
        self.i += 1
        args: list[Term] = []
        if self.at("("):
            self.i += 1
            args.append(self.term())
            while self.at(","):
                self.i += 1
                args.append(self.term())
            self.expect(")")
        return Atom(tok.text, tuple(args), self.pos(tok))

    def literal(self) -> Literal:
        if self.tok.kind == "neg":
            self.i += 1
            return Literal(self.atom(), positive=False)
        return Literal(self.atom())

    def body(self) -> tuple[Literal, ...]:
        lits = [self.literal()]
        while self.at(","):
            self.i += 1
            lits.append(self.literal())
        return tuple(lits)

    def clause(self) -> Rule | None:
        self.anon = 0
        start = self.tok
        head = self.atom()
        if head.predicate == TRUE:
            raise _Syntax(start, "the built-in predicate True cannot be defined")
        body: tuple[Literal, ...] = ()
        if self.tok.kind == "implies":
            self.i += 1
            body = self.body()
        self.expect(".")
        if not body and not head.is_ground():
            # the clause is complete, so report without resynchronising
            self.errors.append(Diagnostic(self.file, start.line, start.col, f"fact {head} is not ground"))
            return None
        return Rule(head, body, self.pos(start))

    def recover(self) -> None:
        while self.tok.kind != "eof" and not self.at("."):
            self.i += 1
        if self.at("."):
            self.i += 1

    def program_rules(self) -> list[Rule]:
        rules = []
        while self.tok.kind != "eof":
            try:
                rule = self.clause()
                if rule is not None:
                    rules.append(rule)
            except _Syntax as exc:
                self.errors.append(
                    Diagnostic(self.file, exc.tok.line, exc.tok.col, exc.message)
                )
                self.recover()
        return rules


def parse_rules(source: str, file: str = "<string>") -> list[Rule]:
    """Parse clauses without building the arity table."""
    parser = _Parser(source, file)
    rules = parser.program_rules()
    if parser.errors:
        raise ParseErrors(parser.errors)
    return rules


def parse_program(source: str, file: str = "<string>") -> Program:
    """Parse Datalog source text into a :class:`Program`.

    Raises :class:`ParseErrors` listing every syntax fault, arity clash and
    non-ground fact found, each with its line and column.
    """
    parser = _Parser(source, file)
    rules = parser.program_rules()
    errors = parser.errors
    try:
        program = Program.from_rules(rules)
    except ParseErrors as exc:
        errors = errors + exc.errors
        program = None
    if errors:
        raise ParseErrors(sorted(errors, key=lambda d: (d.line, d.col)))
    return program


def parse_goal(source: str, file: str = "<goal>") -> Goal:
    """Parse a conjunctive goal; ``?name`` marks a goal variable.

    A trailing ``.`` is optional.
    """
    parser = _Parser(source, file, goal_mode=True)
    try:
        if parser.errors:
            raise ParseErrors(parser.errors)
        body = parser.body()
        if parser.at("."):
            parser.i += 1
        if parser.tok.kind != "eof":
            raise _Syntax(parser.tok, f"unexpected {parser.tok.text!r} after goal")
    except _Syntax as exc:
        raise ParseErrors(
            parser.errors + [Diagnostic(file, exc.tok.line, exc.tok.col, exc.message)]
        ) from None
    if parser.errors:
        raise ParseErrors(parser.errors)
    return Goal(body)


def parse_atom(source: str, file: str = "<fact>") -> Atom:
    goal = parse_goal(source, file)
    if len(goal.literals) != 1 or not goal.literals[0].positive:
        raise ParseErrors([Diagnostic(file, 1, 1, "expected a single positive atom")])
    return goal.literals[0].atom


# ---------------------------------------------------------------------------
# Safety
# ---------------------------------------------------------------------------


def _positive_vars(body: Iterable[Literal]) -> set[str]:
    return {v for lit in body if lit.positive for v in lit.atom.variables()}


def unsafe_variables(head_vars: Iterable[str], body: Sequence[Literal]) -> list[str]:
    """Variables of the head or of a negated literal not bound positively.

    Anonymous variables inside negated literals are existential and exempt.
    """
    bound = _positive_vars(body)
    out: dict[str, None] = {}
    for v in head_vars:
        if v not in bound:
            out[v] = None
    for lit in body:
        if not lit.positive:
            for v in lit.atom.variables():
                if v not in bound and not v.startswith("_"):
                    out[v] = None
    return list(out)


def check_safety(program: Program) -> None:
    """Raise :class:`SafetyErrors` unless every rule of ``program`` is safe."""
    violations = [
        (rule, v)
        for rule in program.rules
        for v in unsafe_variables(rule.head.variables(), rule.body)
    ]
    if violations:
        raise SafetyErrors(violations)


def check_goal(goal: Goal) -> None:
    unsafe = unsafe_variables((), goal.literals)
    if unsafe:
        raise SafetyErrors([(Rule(Atom("goal"), goal.literals), v) for v in unsafe])


def schedule(body: Sequence[Literal]) -> list[Literal]:
    """Order a safe body for left-to-right evaluation.

    Positive literals keep their order; each negated literal is placed right
    after the first positive literal that completes its bindings.
    """
    pending = [lit for lit in body if not lit.positive]
    bound: set[str] = set()
    out: list[Literal] = []

    def flush():
        for lit in list(pending):
            if all(v in bound or v.startswith("_") for v in lit.atom.variables()):
                out.append(lit)
                pending.remove(lit)

    flush()
    for lit in body:
        if lit.positive:
            out.append(lit)
            bound.update(lit.atom.variables())
            flush()
    out.extend(pending)  # only reachable for unsafe input
    return out


# ---------------------------------------------------------------------------
# Stratification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stratification:
    stratum: Mapping[str, int]

    def __getitem__(self, predicate: str) -> int:
        return self.stratum.get(predicate, 0)

    def layers(self) -> list[list[str]]:
        if not self.stratum:
            return []
        out: list[list[str]] = [[] for _ in range(max(self.stratum.values()) + 1)]
        for pred in sorted(self.stratum):
            out[self.stratum[pred]].append(pred)
        return out

    def violations(self, program: Program) -> list[Rule]:
        """Rules breaking the stratum inequalities (empty for a valid one)."""
        bad = []
        for rule in program.rules:
            h = self[rule.head.predicate]
            for lit in rule.body:
                b = self[lit.atom.predicate]
                if (lit.positive and b > h) or (not lit.positive and b >= h):
                    bad.append(rule)
                    break
        return bad


def dependency_graph(program: Program) -> dict[str, dict[str, int]]:
    """Edges ``body -> head`` weighted 1 when the body literal is negated."""
    graph: dict[str, dict[str, int]] = {p: {} for p in program.arities}
    for rule in program.proper_rules:
        head = rule.head.predicate
        for lit in rule.body:
            q = lit.atom.predicate
            w = 0 if lit.positive else 1
            graph.setdefault(q, {})
            graph[q][head] = max(graph[q].get(head, 0), w)
    return graph


def _components(graph: dict[str, dict[str, int]]) -> list[list[str]]:
    # Tarjan, iterative; components come out in reverse topological order
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in graph:
        if root in index:
            continue
        work = [(root, iter(graph[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, succs = work[-1]
            advanced = False
            for nxt in succs:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(graph[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    n = stack.pop()
                    on_stack.discard(n)
                    comp.append(n)
                    if n == node:
                        break
                comps.append(comp)
    return comps


def _witness(graph, members: set[str], src: str, dst: str) -> list[str]:
    # shortest path dst -> ... -> src inside the component, closing the cycle
    prev = {dst: None}
    queue = [dst]
    for node in queue:
        if node == src:
            break
        for nxt in graph[node]:
            if nxt in members and nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    path = [src]
    while path[-1] != dst:
        path.append(prev[path[-1]])
    path.reverse()
    return [src] + path


def stratify(program: Program) -> Stratification:
    """Assign each predicate its minimal stratum.

    The stratum of a predicate is the largest number of negated edges on any
    dependency path leading to it. Raises :class:`NotStratifiable` with a
    witness cycle when some cycle crosses a negation.
    """
    graph = dependency_graph(program)
    comps = _components(graph)
    comp_of = {p: i for i, comp in enumerate(comps) for p in comp}
    for comp in comps:
        members = set(comp)
        for q in sorted(comp):
            for p, w in graph[q].items():
                if w == 1 and p in members:
                    raise NotStratifiable(_witness(graph, members, q, p))
    stratum: dict[str, int] = {}
    # reversed Tarjan order is a topological order of the condensation
    for comp in reversed(comps):
        level = stratum.get(comp[0], 0)
        for p in comp:
            level = max(level, stratum.get(p, 0))
        for p in comp:
            stratum[p] = level
        for q in comp:
            for p, w in graph[q].items():
                if comp_of[p] != comp_of[q]:
                    stratum[p] = max(stratum.get(p, 0), level + w)
    return Stratification(stratum)
