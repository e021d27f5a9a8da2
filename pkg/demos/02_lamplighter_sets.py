"""
Følner sets in the lamplighter group
====================================

F_n is the set of lamplighter states with every lamp outside 1..n off and the
lighter inside 1..n.  It has n 2^n elements and only 2^(n+1) boundary edges.
Carving small pockets out of it keeps it a good Følner set while pushing the
inradius down, which is what breaks the radial inequality.
"""
from isospec.counterexample import counterexample_report
from isospec.graph_core import boundary_size
from isospec.isoperimetry import inradius
from isospec.lamplighter import lamplighter_window

for n in range(2, 9):
    w = lamplighter_window(n)
    print(f"n={n}: |F_n|={len(w.core):5d}  |dF_n|={boundary_size(w.core):4d}  "
          f"inrad={inradius(w, w.core)}")

# The carved sets, at j = 5.  Paths of length at most 8j+1 are removed from
# each translate of F_j, one per translate.
for n in (10, 15, 20):
    r = counterexample_report(n, 5)
    print(f"\nF_{{{n};5}}: {r.translate_count} translates, |F|={r.size}, |dF|={r.boundary}, "
          f"inrad={r.inradius}")
    print(f"  radial ratio K=k=1: {r.ratio:.4f} (F_n alone: {r.ratio_F_n:.4f})")
    print("  checks:", "all pass" if r.all_pass else {k: v for k, v in r.checks.items() if not v})

# With j held at 5 the ratio does not keep falling; j has to grow with n.
