"""
Stealthy attacks and how to stop them
=====================================

Small critical sets are cheap attacks.  Protecting the right meters makes
every stealthy attack expensive, and the exact algebra confirms it.
"""

from gridsight import (all_critical_sets, assess_removal, build_assignment, build_csm_graph,
                       full_defense, ieee14, sparsest_attack, sparsest_attack_including,
                       threshold_defense)
from gridsight.oracle import brute_force_sparsest, build_jacobian
from gridsight.security import security_indices

case = ieee14()
cert = build_assignment(case)
sets = all_critical_sets(case, cert)
H = build_jacobian(case)

members, k = sparsest_attack(sets)
print(f"cheapest stealthy attack: {case.labels(sorted(members))} ({k} meters)")
print("brute force agrees:", case.labels(sorted(brute_force_sparsest(H, 3)[0])))

members, k = sparsest_attack_including(sets, case.resolve("I4"))
print(f"cheapest attack that touches I4: {case.labels(sorted(members))}")

print("security index per meter:")
for mid, index in security_indices(sets).items():
    print(f"  {case.label(mid):>4}: {index}")

# an attack on bus 2's angle corrupts six meters at once
g = build_csm_graph(sets, case.measurement_ids)
attack = [case.resolve(x) for x in ("F2", "I1", "I2", "I3", "I4", "I5")]
verdict = assess_removal(g, attack)
print("\nbus-2 attack stealthy:", verdict.stealthy, "| sets knocked out:",
      verdict.deficiency, "| candidates:", case.labels(verdict.unmatched))

full = full_defense(cert)
print("\nprotect every tree meter:", case.labels(sorted(full.protected)))
print("  any attack left with <= 4 meters?", bool(brute_force_sparsest(H, 4, protected=full.protected)))

plan = threshold_defense(sets, 3)
print("protect one meter per set of size < 3:", case.labels(sorted(plan.protected)))
print("  any attack left with <= 2 meters?", bool(brute_force_sparsest(H, 2, protected=plan.protected)))
print("  cheapest remaining:", brute_force_sparsest(H, 3, protected=plan.protected)[1], "meters")
