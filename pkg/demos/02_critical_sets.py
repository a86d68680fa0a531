"""
Critical measurement sets
=========================

Cut the tree at one measurement, collect everything that could stitch the
two halves back together, and keep the ones that really can.
"""

from gridsight import all_critical_sets, backup_boundary_injections, build_assignment, ieee14
from gridsight.critical_sets import split_tree

case = ieee14()
cert = build_assignment(case)
F2 = case.resolve("F2")

split = split_tree(case, cert, F2)
print("removing the line of F2 leaves two trees")
print("  side 1 buses:", sorted(split.n1))
print("  side 2 buses:", sorted(split.n2))
print("  lines across:", list(split.cut_lines))
print("  candidates:  ", case.labels(sorted(split.candidates)))

# an assigned injection can only help if someone takes over its old line
for name in ("I1", "I2", "I13"):
    backups = backup_boundary_injections(case, cert, split, case.resolve(name))
    print(f"  backups for {name}: {case.labels(sorted(backups)) or '-'}")

print()
sets = all_critical_sets(case, cert)
for owner, cs in sets.items():
    why = {case.label(k): p.kind for k, p in cs.provenance.items() if k != owner}
    print(f"{case.label(owner):>4}  {{{', '.join(case.labels(cs.sorted_members()))}}}  {why}")
