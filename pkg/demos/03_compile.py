"""
From rules to nested loops
==========================

Lower a program to the loop IR, print it, and run it top-down against the
same facts the bottom-up engine uses.
"""

from coda import Context, lower, parse_atom, print_ir, run_ir
from coda.ehealth import load_scenario

ctx = load_scenario("ehealth").context()
ir = lower(ctx.program)

text = print_ir(ir)
start = text.index("public static IEnumerable<bool> patient_needs_result")
print(text[start:text.index("}", start) + 1])

# top-down over the IR and bottom-up over the model agree
query = parse_atom("patient_active_exam(P, E)")
top_down = {tuple(s.values()) for s in run_ir(ir, ctx.store, query)}
bottom_up = {tuple(s.values()) for s in ctx.enumerate("patient_active_exam(P, E)")}
print(sorted(top_down), top_down == bottom_up)

# cyclic data terminates: calls already under way read their tables
loop = Context.load(["t(X, Y) :- e(X, Y). t(X, Z) :- t(X, Y), e(Y, Z). e(a, b). e(b, a)."])
print(sorted(tuple(s.values()) for s in run_ir(lower(loop.program), loop.store, parse_atom("t(X, Y)"))))
