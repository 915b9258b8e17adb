"""The mutable context: a rule program, a fact store and a cached model."""

from __future__ import annotations

import json
import threading
from typing import Iterable, Iterator, Sequence

from .datalog import (
    TRUE,
    ArityMismatch,
    Atom,
    Goal,
    ParseErrors,
    Program,
    Stratification,
    check_safety,
    parse_atom,
    parse_rules,
    stratify,
)
from .engine import FactStore, Model, Substitution, as_goal, enumerate_solutions, evaluate


def _as_fact(fact) -> Atom:
    return parse_atom(fact) if isinstance(fact, str) else fact


class Context:
    """A Datalog knowledge base that applications query and update.

    ``tell`` and ``retract`` edit the extensional store; queries see the
    perfect model, recomputed on the first read after a change. An
    enumeration works on the model current when it was created, so the loop
    body may update the context freely.

    The context is single-writer: serialize ``tell``/``retract`` yourself.
    Readers may run concurrently and always see a complete model.
    """

    def __init__(self, program: Program, store: FactStore | None = None):
        check_safety(program)
        self.strata: Stratification = stratify(program)
        self.program = program.without_facts()
        self.arities: dict[str, int] = dict(program.arities)
        self.store = FactStore(self.arities)
        for rule in program.facts:
            self.store.add(rule.head)
        if store is not None:
            for atom in store.atoms():
                self.store.add(atom)
        self.arities.update(self.store.arities)
        self.epoch = 0
        self._model: Model | None = None
        self._lock = threading.Lock()

    # -- construction -------------------------------------------------------

    @classmethod
    def load(cls, sources: Sequence[str], names: Sequence[str] | None = None) -> Context:
        """Merge several Datalog sources, in order, into one context."""
        names = list(names) if names is not None else [f"<source {i}>" for i in range(len(sources))]
        rules = []
        errors = []
        for src, name in zip(sources, names):
            try:
                rules.extend(parse_rules(src, name))
            except ParseErrors as exc:
                errors.extend(exc.errors)
        if errors:
            raise ParseErrors(errors)
        return cls(Program.from_rules(rules))

    @classmethod
    def load_files(cls, paths: Iterable) -> Context:
        paths = [str(p) for p in paths]
        sources = []
        for p in paths:
            with open(p, encoding="utf-8") as fh:
                sources.append(fh.read())
        return cls.load(sources, paths)

    # -- updates ------------------------------------------------------------

    def _check_arity(self, atom: Atom) -> None:
        known = self.arities.get(atom.predicate)
        if known is not None and known != atom.arity:
            raise ArityMismatch(
                f"{atom.predicate} has arity {known}, got {atom.arity} in {atom}"
            )

    def tell(self, fact) -> bool:
        """Add a ground fact; return whether the store changed."""
        atom = _as_fact(fact)
        if atom.predicate == TRUE:
            return False
        self._check_arity(atom)
        changed = self.store.add(atom)
        self.arities.setdefault(atom.predicate, atom.arity)
        if changed:
            self._touch()
        return changed

    def retract(self, fact) -> bool:
        """Remove a stored fact. Derived facts cannot be retracted."""
        atom = _as_fact(fact)
        self._check_arity(atom)
        changed = self.store.remove(atom)
        if changed:
            self._touch()
        return changed

    def _touch(self) -> None:
        self.epoch += 1
        self._model = None

    # -- queries ------------------------------------------------------------

    @property
    def model(self) -> Model:
        model = self._model
        if model is not None:
            return model
        with self._lock:
            if self._model is None:
                epoch = self.epoch
                model = evaluate(self.program, self.strata, self.store)
                model.epoch = epoch
                self._model = model
            return self._model

    def refresh(self) -> Model:
        """Drop the cache and rebuild the model from scratch."""
        self._model = None
        return self.model

    def _goal(self, goal) -> Goal:
        goal = as_goal(goal)
        for lit in goal.literals:
            self._check_arity(lit.atom)
        return goal

    def solve(self, goal) -> Substitution | None:
        for sub in self.enumerate(goal):
            return sub
        return None

    def enumerate(self, goal) -> Iterator[Substitution]:
        """Stream the solutions of ``goal`` over a snapshot of the model."""
        goal = self._goal(goal)
        return enumerate_solutions(self.model, goal)

    def holds(self, goal) -> bool:
        return self.solve(goal) is not None

    # -- interchange --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "predicates": [{"name": n, "arity": a} for n, a in self.arities.items()],
            "rules": [str(r) for r in self.program.rules],
            "facts": [[p, *row] for p, rows in self.store.facts.items() for row in rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, data: dict | str) -> Context:
        if isinstance(data, str):
            data = json.loads(data)
        rules = []
        for text in data.get("rules", []):
            rules.extend(parse_rules(text, "<json>"))
        program = Program.from_rules(rules)
        arities = dict(program.arities)
        for p in data.get("predicates", []):
            if arities.setdefault(p["name"], p["arity"]) != p["arity"]:
                raise ArityMismatch(f"predicate {p['name']} declared with two arities")
        program = Program(program.rules, arities)
        store = FactStore(arities)
        for name, *args in data.get("facts", []):
            store.add(Atom.of(name, *args))
        return cls(program, store)

    def __repr__(self) -> str:
        return f"<Context {len(self.program.rules)} rules, {len(self.store)} facts, epoch {self.epoch}>"


def load_context(sources: Sequence[str], names: Sequence[str] | None = None) -> Context:
    return Context.load(sources, names)
