"""Random program generator and independent oracles for the test suite.

The oracles deliberately share no evaluation code with ``coda.engine``:
strata come from textbook relaxation, models from naive re-firing of every
rule, and goal answers from brute force over the active domain.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from coda.datalog import TRUE, Atom, Constant, Literal, Program, Rule, Var
from coda.engine import FactStore

VARS = ["X", "Y", "Z", "W"]


@dataclass
class Case:
    program: Program
    store: FactStore
    recursive: bool
    cyclic: bool


def _args(rng, arity, pool, consts, p_const=0.25):
    out = []
    for _ in range(arity):
        if pool and rng.random() > p_const:
            out.append(Var(rng.choice(pool)))
        else:
            out.append(Constant(rng.choice(consts)))
    return tuple(out)


def random_case(rng: random.Random, force_recursive: bool = False, cyclic: bool = False) -> Case:
    """A random safe, stratified program plus an EDB store.

    At most 4 predicates, 6 constants and 3 rules per predicate.
    """
    n_preds = rng.randint(2, 4)
    n_edb = rng.randint(1, n_preds - 1)
    consts: list = [f"c{i}" for i in range(rng.randint(1, 6))]
    if rng.random() < 0.3:
        consts[-1] = len(consts)  # an integer constant
    edb = [f"e{i}" for i in range(n_edb)]
    idb = [f"p{i}" for i in range(n_preds - n_edb)]
    arity = {p: rng.randint(1, 2) for p in edb}
    if cyclic or force_recursive:
        arity[edb[0]] = 2
    for p in idb:
        arity[p] = rng.choice([0, 1, 1, 2, 2, 2])
    if force_recursive:
        arity[idb[0]] = 2
    level = {p: rng.randint(0, 2) for p in idb}
    if force_recursive:
        level[idb[0]] = 0

    rules: list[Rule] = []
    recursive = False
    for head in idb:
        n_rules = rng.randint(1, 3)
        if force_recursive and head == idb[0]:
            # tc-like recursion over the binary EDB
            e = edb[0]
            rules.append(Rule(Atom(head, (Var("X"), Var("Z"))), (
                Literal(Atom(head, (Var("X"), Var("Y")))), Literal(Atom(e, (Var("Y"), Var("Z")))))))
            rules.append(Rule(Atom(head, (Var("X"), Var("Y"))), (Literal(Atom(e, (Var("X"), Var("Y")))),)))
            recursive = True
            n_rules = rng.randint(0, 1)
        for _ in range(n_rules):
            pos_choices = edb + [q for q in idb if level[q] <= level[head]]
            neg_choices = edb + [q for q in idb if level[q] < level[head]]
            body: list[Literal] = []
            bound: list[str] = []
            for _ in range(rng.randint(1, 3)):
                q = rng.choice(pos_choices)
                args = _args(rng, arity[q], VARS[: rng.randint(1, 4)], consts)
                body.append(Literal(Atom(q, args)))
                bound.extend(a.name for a in args if isinstance(a, Var))
                if q == head:
                    recursive = True
            for _ in range(rng.choice([0, 0, 1, 1, 2])):
                q = rng.choice(neg_choices)
                pool = sorted(set(bound))
                args = list(_args(rng, arity[q], pool, consts, p_const=0.3))
                if args and rng.random() < 0.15:
                    args[rng.randrange(len(args))] = Var("_")
                body.append(Literal(Atom(q, tuple(args)), positive=False))
            rng.shuffle(body)
            pool = sorted(set(bound))
            head_atom = Atom(head, _args(rng, arity[head], pool, consts, p_const=0.15))
            rules.append(Rule(head_atom, tuple(body)))
    if rng.random() < 0.2:
        # a program-level fact for an IDB predicate
        q = rng.choice(idb)
        rules.append(Rule(Atom(q, tuple(Constant(rng.choice(consts)) for _ in range(arity[q])))))
    rules = _rename_anonymous(rules)
    program = Program.from_rules(rules)
    arities = dict(program.arities)
    for p in edb:
        arities.setdefault(p, arity[p])
    program = Program(program.rules, arities)

    store = FactStore(arities)
    for p in edb:
        domain = list(itertools.product(consts, repeat=arity[p]))
        for row in rng.sample(domain, rng.randint(0, min(len(domain), 8))):
            store.add(Atom(p, tuple(Constant(v) for v in row)))
    if cyclic:
        a, b = consts[0], consts[-1]
        store.add(Atom(edb[0], (Constant(a), Constant(b))))
        store.add(Atom(edb[0], (Constant(b), Constant(a))))
    return Case(program, store, recursive, cyclic)


def _rename_anonymous(rules):
    out = []
    for rule in rules:
        n = 0

        def fix(a: Atom) -> Atom:
            nonlocal n
            args = []
            for t in a.args:
                if isinstance(t, Var) and t.name == "_":
                    args.append(Var(f"_{n}"))
                    n += 1
                else:
                    args.append(t)
            return Atom(a.predicate, tuple(args))

        body = tuple(Literal(fix(l.atom), l.positive) for l in rule.body)
        out.append(Rule(rule.head, body))
    return out


def random_cases(seed: int, n: int, recursive_cyclic: int = 0) -> list[Case]:
    rng = random.Random(seed)
    cases = [random_case(rng, force_recursive=True, cyclic=True) for _ in range(recursive_cyclic)]
    cases += [random_case(rng, cyclic=rng.random() < 0.3) for _ in range(n - recursive_cyclic)]
    return cases


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def relaxation_strata(program: Program) -> dict[str, int]:
    """Textbook stratification by repeated relaxation of the inequalities."""
    s = {p: 0 for p in program.arities}
    limit = len(s) + 1
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            h = rule.head.predicate
            for lit in rule.body:
                need = s.get(lit.atom.predicate, 0) + (0 if lit.positive else 1)
                if s[h] < need:
                    s[h] = need
                    changed = True
                    if need > limit:
                        raise ValueError("not stratifiable")
    return s


def _bind(atom: Atom, row: tuple, env: dict) -> dict | None:
    env = dict(env)
    for t, v in zip(atom.args, row):
        if isinstance(t, Constant):
            if t.value != v or type(t.value) is not type(v):
                return None
        elif t.name.startswith("_"):
            continue
        elif t.name in env:
            if env[t.name] != v or type(env[t.name]) is not type(v):
                return None
        else:
            env[t.name] = v
    return env


def _rule_matches(rule: Rule, facts: dict[str, set]):
    positives = [l.atom for l in rule.body if l.positive]
    negatives = [l.atom for l in rule.body if not l.positive]
    envs = [{}]
    for atom in positives:
        envs = [e2 for e in envs for row in facts.get(atom.predicate, ()) if (e2 := _bind(atom, row, e)) is not None]
    for env in envs:
        if any(_bind(a, row, env) is not None for a in negatives for row in facts.get(a.predicate, ())):
            continue
        yield env


def naive_model(program: Program, store: FactStore) -> dict[str, frozenset]:
    """Perfect model by naive fixpoint iteration, stratum by stratum."""
    facts: dict[str, set] = {p: set() for p in program.arities}
    facts[TRUE] = {()}
    for pred, rows in store.facts.items():
        facts.setdefault(pred, set()).update(rows)
    for rule in program.rules:
        if not rule.body:
            facts[rule.head.predicate].add(tuple(t.value for t in rule.head.args))
    strata = relaxation_strata(program)
    for level in range(max(strata.values(), default=0) + 1):
        rules = [r for r in program.rules if r.body and strata[r.head.predicate] == level]
        while True:
            new = set()
            for rule in rules:
                for env in _rule_matches(rule, facts):
                    row = tuple(t.value if isinstance(t, Constant) else env[t.name] for t in rule.head.args)
                    if row not in facts[rule.head.predicate]:
                        new.add((rule.head.predicate, row))
            if not new:
                break
            for pred, row in new:
                facts[pred].add(row)
    return {p: frozenset(rows) for p, rows in facts.items() if rows}


def brute_force_solutions(model_sets: dict[str, frozenset], goal) -> set[tuple]:
    """Goal answers by trying every assignment over the active domain."""
    names = goal.variables
    domain = sorted({v for rows in model_sets.values() for row in rows for v in row}, key=repr)
    out = set()
    for values in itertools.product(domain, repeat=len(names)):
        env = dict(zip(names, values))
        ok = True
        for lit in goal.literals:
            rows = model_sets.get(lit.atom.predicate, frozenset())
            hit = any(_bind(lit.atom, row, env) is not None for row in rows)
            if hit != lit.positive:
                ok = False
                break
        if ok:
            out.add(values)
    return out
