"""
Spectral constants on small regular graphs
==========================================

Walk through the constants of a finite regular graph: the Cheeger constant,
the spectral gap and their p-analogues, then check how they bound each other.
"""
from isospec import graph_core as gc
from isospec.spectral import cheeger_exact, cheeger_inequality, lambda2_exact, verify_chain

# The Petersen graph is 3-regular on ten vertices; small enough for exact cuts.
g = gc.petersen()
cut = cheeger_exact(g)
print(f"{g.name}: kappa1 = {cut.ratio} (witness {cut.members()})")
print(f"lambda2 of I - P = {lambda2_exact(g):.6f}")
print("Cheeger sandwich holds:", cheeger_inequality(g).passed)

# For p != 2 the constants come from an optimiser, so they are estimates.
# Each item of the chain reports both sides and the slack between them.
for p in (1.5, 3.0):
    rep = verify_chain(g, p)
    print(f"\np = {p}: kappa_p <= {rep.kappa_p_upper:.4f}, "
          f"{rep.lambda_p_lower:.4f} <= lambda_p <= {rep.lambda_p_upper:.4f}")
    for c in rep.chain:
        print(f"  {c.item:8s} {c.lhs:9.5f} vs {c.rhs:9.5f}  {'ok' if c.passed else 'FAILS'}")

# The two-vertex graph is where the table form of the p-conductance bound
# breaks: the left side is 2^(1 - 1/p) while the right side stays at 2.
k2 = verify_chain(gc.complete(2), 2.0)
table = next(c for c in k2.chain if c.item == "4-table")
print(f"\nK2 table form: {table.lhs:.4f} vs {table.rhs:.4f} passed={table.passed}")
