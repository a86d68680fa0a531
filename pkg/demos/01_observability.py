"""
Topological observability of the 14-bus case
=============================================

Find a measurement-to-line assignment that spans the network, and see what
happens when a handful of meters disappear.
"""

from gridsight import boundary_injections, build_assignment, ieee14

case = ieee14()
print(f"{case.n_buses} buses, {len(case.lines)} lines, {len(case.measurements)} meters")

# the certificate maps each tree measurement to the line it "covers"
cert = build_assignment(case)
print("spanning tree lines:", sorted(cert.branches))
for mid, line in cert.assignment.items():
    ln = case.line(line)
    print(f"  {case.label(mid):>4} -> line {line:2d} ({ln.from_bus}-{ln.to_bus})")

# meters left over are redundant for observability, but not for security
spare = [m for m in case.measurement_ids if m not in cert]
print("unassigned:", case.labels(spare))
print("boundary injections:", case.labels(sorted(boundary_injections(case, cert))))

# drop two meters and the network falls apart into islands
reduced = case.without_measurements([case.resolve("I6"), case.resolve("I11")])
witness = build_assignment(reduced)
print("observable without I6, I11?", bool(witness))
print("islands:", [sorted(c) for c in witness.components])
