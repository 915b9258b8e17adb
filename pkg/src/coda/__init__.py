"""Context-oriented programming over a Datalog knowledge base."""

from .adaptation import (
    P,
    TRUE_GOAL,
    V,
    AdaptationFailure,
    BehaviouralVariation,
    Case,
    Parameter,
    dispatch,
    dlet,
    for_each,
    otherwise,
    resolve,
    when,
)
from .codegen import LoopIR, lower, print_ir, run_ir
from .context import Context, load_context
from .datalog import (
    Atom,
    Constant,
    Goal,
    Literal,
    Program,
    Rule,
    Stratification,
    Var,
    check_safety,
    parse_atom,
    parse_goal,
    parse_program,
    stratify,
)
from .datalog import (
    ArityMismatch,
    DatalogError,
    NonGroundFact,
    NotStratifiable,
    ParseErrors,
    SafetyErrors,
)
from .engine import FactStore, Model, enumerate_solutions, evaluate, solve

__version__ = "0.1.0"

__all__ = [
    "AdaptationFailure",
    "ArityMismatch",
    "Atom",
    "BehaviouralVariation",
    "Case",
    "Constant",
    "Context",
    "DatalogError",
    "FactStore",
    "Goal",
    "Literal",
    "LoopIR",
    "Model",
    "NonGroundFact",
    "NotStratifiable",
    "P",
    "Parameter",
    "ParseErrors",
    "Program",
    "Rule",
    "SafetyErrors",
    "Stratification",
    "TRUE_GOAL",
    "V",
    "Var",
    "check_safety",
    "dispatch",
    "dlet",
    "enumerate_solutions",
    "evaluate",
    "for_each",
    "load_context",
    "lower",
    "otherwise",
    "parse_atom",
    "parse_goal",
    "parse_program",
    "print_ir",
    "resolve",
    "run_ir",
    "solve",
    "stratify",
    "when",
]
