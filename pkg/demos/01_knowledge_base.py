"""
A context is a Datalog knowledge base
=====================================

Facts, rules, queries, and what happens when the facts change.
"""

from coda import Context, load_context

ctx = load_context([r"""
    link(kitchen, hall).
    link(hall, study).
    link(study, garden).

    reachable(X, Y) :- link(X, Y).
    reachable(X, Z) :- reachable(X, Y), link(Y, Z).

    % a room nobody can walk to from the kitchen
    cut_off(R) :- room(R), \+ reachable(kitchen, R).
"""])

# strata: reachable sits below cut_off because cut_off negates it
for level, preds in enumerate(ctx.strata.layers()):
    print(level, preds)

print([s["R"] for s in ctx.enumerate("reachable(kitchen, R)")])

# room/1 has no facts yet, so nothing is cut off
print(ctx.solve("cut_off(R)"))

ctx.tell("room(garden)")
ctx.tell("room(cellar)")
print([s["R"] for s in ctx.enumerate("cut_off(R)")])

# closing the study door isolates the garden too
ctx.retract("link(study, garden)")
print([s["R"] for s in ctx.enumerate("cut_off(R)")])

# the whole context round-trips through JSON
snapshot = ctx.to_json()
print({k: len(v) for k, v in snapshot.items()})
print(Context.from_json(snapshot).model == ctx.model)
