"""
Adapting behaviour to the context
=================================

Behavioural variations pick a case by solving goals; parameters are
resolved lazily, innermost declaration first; an adaptation failure is a
plain exception.
"""

from coda import P, V, AdaptationFailure, BehaviouralVariation, dlet, for_each, otherwise, when
from coda.ehealth import load_scenario

ctx = load_scenario("ehealth").context()

greet = BehaviouralVariation([
    when(P.physician_location(V.who, "Neurology"), lambda s: f"{s['who']} is in Neurology"),
    otherwise(lambda s: "nobody in Neurology"),
])
print(greet(ctx))

# the goal is solved at each call, so moving Dr. Kelso changes the answer
ctx.retract(P.physician_location("Dr. Kelso", "Neurology"))
print(greet(ctx))
ctx.tell(P.physician_location("Dr. Kelso", "Neurology"))

# a parameter declared by cases; the inner case shadows the default
next_exam = dlet("True", lambda s: "no exam")
next_exam = dlet([P.physician_exam("Dr. Kelso", V.e), P.patient_active_exam("Alice", V.e)],
                 lambda s: s["e"], outer=next_exam)
print("next:", next_exam(ctx))
ctx.tell(P.patient_has_result("Alice", "CT scan"))
print("next:", next_exam(ctx))

# iteration over every solution
for_each(ctx, P.patient_has_result("Alice", V.e), lambda s: print(" -", s["e"]))

# no case applies: the failure carries the goals that were tried
where = dlet(P.physician_location("Dr. House", V.loc), lambda s: s["loc"])
try:
    where(ctx)
except AdaptationFailure as exc:
    print(exc.describe(), [str(g) for g in exc.failed_goals])
