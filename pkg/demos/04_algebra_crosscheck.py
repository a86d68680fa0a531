"""
Checking the graph answers with exact linear algebra
====================================================

Build the DC Jacobian, compare ranks, construct an attack vector and watch
the residual stay put.  Then look at a random network where the critical-set
graph misses a stealthy attack that the rank test finds.
"""

import numpy as np

from gridsight import all_critical_sets, assess_removal, build_assignment, build_csm_graph, ieee14
from gridsight.oracle import (NoiseModel, RandomGeneric, build_jacobian, is_realizable, rank_of,
                              residual_invariance, support_realizable)
from gridsight.security import structural_verdict
from gridsight.synthetic import random_case

case = ieee14()
H = build_jacobian(case)
print("H is", len(H.rows), "x", H.n_states, "with rank", rank_of(H))
print("column of bus 2:", np.round(H.to_numpy()[:, 0], 2))

attack = [case.resolve(x) for x in ("F2", "I1", "I2", "I3", "I4", "I5")]
vec = support_realizable(H, attack)
print("state shift c =", [str(x) for x in vec.c])
print("largest residual change:", residual_invariance(H, NoiseModel.uniform(len(H.rows)), vec.c, 100))

# a 7-meter tree where one cut is not a fundamental cut of the chosen tree
small = random_case(0)
cert = build_assignment(small)
g = build_csm_graph(all_critical_sets(small, cert), small.measurement_ids)
Hs = build_jacobian(small, RandomGeneric())
A = [1, 7, 11]
print("\nrandom case, attack on", small.labels(A))
print("  realizable a = Hc:", is_realizable(Hs, A))
print("  matching deficiency:", assess_removal(g, A).deficiency)
print("  forest-rank verdict:", structural_verdict(small, A).stealthy)
