"""Bottom-up evaluation of stratified programs and goal answering."""

from __future__ import annotations

from typing import Dict, Iterable, Iterator, Mapping, Sequence

from .datalog import (
    TRUE,
    ArityMismatch,
    Atom,
    Constant,
    Goal,
    Literal,
    NonGroundFact,
    Program,
    Rule,
    Stratification,
    Value,
    Var,
    check_goal,
    parse_goal,
    schedule,
)

Row = tuple  # tuple of Value
Substitution = Dict[str, Value]


class Relation:
    """Insertion-ordered set of rows with lazily built hash indexes."""

    __slots__ = ("arity", "_rows", "_index")

    def __init__(self, arity: int, rows: Iterable[Row] = ()):
        self.arity = arity
        self._rows: dict[Row, None] = {}
        self._index: dict[tuple[int, ...], dict[Row, list[Row]]] = {}
        for row in rows:
            self.add(row)

    def add(self, row: Row) -> bool:
        if row in self._rows:
            return False
        self._rows[row] = None
        for positions, idx in self._index.items():
            idx.setdefault(tuple(row[i] for i in positions), []).append(row)
        return True

    def lookup(self, positions: tuple[int, ...], key: Row) -> Sequence[Row]:
        if not positions:
            return list(self._rows)
        if len(positions) == self.arity:
            return (key,) if key in self._rows else ()
        idx = self._index.get(positions)
        if idx is None:
            idx = {}
            for row in self._rows:
                idx.setdefault(tuple(row[i] for i in positions), []).append(row)
            self._index[positions] = idx
        return idx.get(key, ())

    def __contains__(self, row) -> bool:
        return row in self._rows

    def __iter__(self) -> Iterator[Row]:
        return iter(self._rows)

    def __len__(self) -> int:
        return len(self._rows)

    def __repr__(self) -> str:
        return f"Relation({self.arity}, {list(self._rows)!r})"


class FactStore:
    """Ground tuples per predicate, insertion-ordered, mutable."""

    def __init__(self, arities: Mapping[str, int] | None = None):
        self.arities: dict[str, int] = dict(arities or {})
        self.facts: dict[str, dict[Row, None]] = {}

    @classmethod
    def from_atoms(cls, atoms: Iterable[Atom]) -> FactStore:
        store = cls()
        for atom in atoms:
            store.add(atom)
        return store

    def _row(self, atom: Atom) -> Row:
        if not atom.is_ground():
            raise NonGroundFact(f"{atom} is not ground")
        known = self.arities.get(atom.predicate)
        if known is not None and known != atom.arity:
            raise ArityMismatch(
                f"{atom.predicate} has arity {known}, got {atom.arity} in {atom}"
            )
        return atom.values()

    def add(self, atom: Atom) -> bool:
        row = self._row(atom)
        self.arities.setdefault(atom.predicate, atom.arity)
        rows = self.facts.setdefault(atom.predicate, {})
        if row in rows:
            return False
        rows[row] = None
        return True

    def remove(self, atom: Atom) -> bool:
        row = self._row(atom)
        rows = self.facts.get(atom.predicate)
        if not rows or row not in rows:
            return False
        del rows[row]
        return True

    def __contains__(self, atom: Atom) -> bool:
        return atom.values() in self.facts.get(atom.predicate, {})

    def rows(self, predicate: str) -> list[Row]:
        return list(self.facts.get(predicate, ()))

    def atoms(self) -> Iterator[Atom]:
        for pred, rows in self.facts.items():
            for row in rows:
                yield Atom(pred, tuple(Constant(v) for v in row))

    def copy(self) -> FactStore:
        other = FactStore(self.arities)
        other.facts = {p: dict(rows) for p, rows in self.facts.items()}
        return other

    def __len__(self) -> int:
        return sum(len(rows) for rows in self.facts.values())


class Model:
    """The perfect model of a program over a fact store. Never mutated."""

    def __init__(self, relations: dict[str, Relation], epoch: int = 0):
        self.relations = relations
        self.epoch = epoch

    def rows(self, predicate: str) -> list[Row]:
        rel = self.relations.get(predicate)
        return list(rel) if rel is not None else []

    def holds(self, atom: Atom) -> bool:
        rel = self.relations.get(atom.predicate)
        return rel is not None and atom.values() in rel

    def as_sets(self) -> dict[str, frozenset]:
        """Non-empty relations as plain sets (handy for comparisons)."""
        return {p: frozenset(rel) for p, rel in self.relations.items() if len(rel)}

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return self.as_sets() == other.as_sets()

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return sum(len(r) for r in self.relations.values())


# ---------------------------------------------------------------------------
# Joins
# ---------------------------------------------------------------------------


def _match(
    atom: Atom, rel: Relation | None, env: Substitution
) -> Iterator[Substitution]:
    """Extend ``env`` with every row of ``rel`` unifying with ``atom``."""
    if rel is None:
        return
    positions: list[int] = []
    key: list[Value] = []
    free: list[tuple[int, str]] = []
    for i, t in enumerate(atom.args):
        if isinstance(t, Constant):
            positions.append(i)
            key.append(t.value)
        elif t.name in env:
            positions.append(i)
            key.append(env[t.name])
        else:
            free.append((i, t.name))
    rows = rel.lookup(tuple(positions), tuple(key))
    if not free:
        if rows:
            yield env
        return
    for row in rows:
        new = dict(env)
        ok = True
        for i, name in free:
            seen = new.get(name, row[i])
            if seen != row[i]:
                ok = False
                break
            new[name] = row[i]
        if ok:
            yield new


def _exists(atom: Atom, rel: Relation | None, env: Substitution) -> bool:
    for _ in _match(atom, rel, env):
        return True
    return False


def join(
    body: Sequence[Literal],
    source,
    env: Substitution | None = None,
) -> Iterator[Substitution]:
    """Nested-loop join; ``source(i, literal)`` gives the relation to scan."""

    def step(i: int, env: Substitution) -> Iterator[Substitution]:
        if i == len(body):
            yield env
            return
        lit = body[i]
        rel = source(i, lit)
        if lit.positive:
            for new in _match(lit.atom, rel, env):
                yield from step(i + 1, new)
        elif not _exists(lit.atom, rel, env):
            yield from step(i + 1, env)

    return step(0, env or {})


def _head_row(head: Atom, env: Substitution) -> Row:
    return tuple(t.value if isinstance(t, Constant) else env[t.name] for t in head.args)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _saturate(rules: list[Rule], layer: set[str], rels: dict[str, Relation]) -> None:
    plans = [(rule, schedule(rule.body)) for rule in rules]

    def full(i, lit):
        return rels.get(lit.atom.predicate)

    def fire(source) -> dict[str, Relation]:
        new: dict[str, Relation] = {}
        for rule, body, src in source:
            head = rule.head
            target = rels[head.predicate]
            for env in join(body, src):
                row = _head_row(head, env)
                if row not in target:
                    new.setdefault(head.predicate, Relation(target.arity)).add(row)
        return new

    def merge(new: dict[str, Relation]) -> None:
        for pred, delta in new.items():
            for row in delta:
                rels[pred].add(row)

    delta = fire((rule, body, full) for rule, body in plans)
    merge(delta)
    while delta:

        def sources():
            for rule, body in plans:
                for j, lit in enumerate(body):
                    pred = lit.atom.predicate
                    if lit.positive and pred in layer and pred in delta:
                        d = delta[pred]

                        def src(i, lit, j=j, d=d):
                            return d if i == j else rels.get(lit.atom.predicate)

                        yield rule, body, src

        delta = fire(sources())
        merge(delta)


def evaluate(program: Program, strata: Stratification, store: FactStore | None = None) -> Model:
    """Compute the perfect model of ``program`` over ``store``.

    Strata are saturated in ascending order with semi-naive iteration; a
    negated literal always refers to a completed lower stratum.
    """
    rels: dict[str, Relation] = {p: Relation(a) for p, a in program.arities.items()}
    rels[TRUE] = Relation(0, [()])
    facts = list(program.facts)
    for rule in facts:
        rels[rule.head.predicate].add(rule.head.values())
    if store is not None:
        for pred, rows in store.facts.items():
            rel = rels.setdefault(pred, Relation(store.arities[pred]))
            for row in rows:
                rel.add(row)
    by_stratum: dict[int, list[Rule]] = {}
    for rule in program.proper_rules:
        by_stratum.setdefault(strata[rule.head.predicate], []).append(rule)
    for level in sorted(by_stratum):
        rules = by_stratum[level]
        _saturate(rules, {r.head.predicate for r in rules}, rels)
    return Model(rels)


# ---------------------------------------------------------------------------
# Goals
# ---------------------------------------------------------------------------


def as_goal(goal) -> Goal:
    """Coerce text, an atom, a literal or a sequence of those to a Goal."""
    if isinstance(goal, Goal):
        return goal
    if isinstance(goal, str):
        return parse_goal(goal)
    if isinstance(goal, Atom):
        return Goal((Literal(goal),))
    if isinstance(goal, Literal):
        return Goal((goal,))
    if isinstance(goal, (list, tuple)):
        lits: list[Literal] = []
        for g in goal:
            lits.extend(as_goal(g).literals)
        return Goal(tuple(lits))
    raise TypeError(f"cannot make a goal from {goal!r}")


def enumerate_solutions(model: Model, goal) -> Iterator[Substitution]:
    """Yield each distinct substitution for the goal variables.

    Order is nested-loop order over the literals, left to right, scanning
    each relation in insertion order.
    """
    goal = as_goal(goal)
    check_goal(goal)
    names = goal.variables
    body = schedule(goal.literals)
    seen: set[tuple] = set()
    for env in join(body, lambda i, lit: model.relations.get(lit.atom.predicate)):
        key = tuple(env[n] for n in names)
        if key not in seen:
            seen.add(key)
            yield dict(zip(names, key))


def solve(model: Model, goal) -> Substitution | None:
    """First solution of ``goal`` or ``None`` when it has none."""
    for sub in enumerate_solutions(model, goal):
        return sub
    return None


def substitute(goal: Goal, sub: Mapping[str, Value]) -> Goal:
    """Replace bound variables of ``goal`` by their values."""

    def t(x):
        if isinstance(x, Var) and x.name in sub:
            return Constant(sub[x.name])
        return x

    return Goal(
        tuple(
            Literal(Atom(l.atom.predicate, tuple(map(t, l.atom.args))), l.positive)
            for l in goal.literals
        )
    )


__all__ = [
    "FactStore",
    "Model",
    "Relation",
    "Substitution",
    "as_goal",
    "enumerate_solutions",
    "evaluate",
    "join",
    "solve",
    "substitute",
]
