"""
Transport patterns and Følner radii
===================================

A harmonic function h with bounded gradient would make h(v) - h(w) small for
neighbours deep inside a Følner set.  Here the difference delta_v - delta_w is
written as the divergence of an edge flow tau supported on F_n, and the size
of tau is what the argument needs to be small.
"""
from fractions import Fraction

import numpy as np

from isospec import graph_core as gc
from isospec.battery import lamplighter_pair
from isospec.graph_core import VertexSubset
from isospec.lamplighter import lamplighter_window
from isospec.transport import eps0_r0, folner_profile, harmonic_difference_pipeline

for n in (4, 6, 8, 10):
    w = lamplighter_window(n)
    v, u = lamplighter_pair(n)
    rep = harmonic_difference_pipeline(w, w.core, v, u, 2.0)
    print(f"n={n:2d}  r={rep.r}  ||tau||_2={rep.norm_total:.4f}  "
          f"bound={rep.certified_bound:.3f}  lambda2(F)={rep.lambda2:.5f}  resid={rep.residual:.1e}")

# Følner radius: how many steps before the walk started anywhere in F has
# probability at least eps of having left.  The lemma says at least
# (d/2) eps |F|/|dF| steps are needed.
g = gc.grid(12, 12)
F = VertexSubset.from_indices(g, np.array([x * 12 + y for x in range(3, 9) for y in range(3, 9)]))
prof = folner_profile(g, F, eps_min=Fraction(1, 2))
for eps in (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)):
    print(f"eps={eps}: r_F={prof.radius(eps)}  lemma bound={float(prof.lemma_bound(eps)):.3f}")

rec = eps0_r0(lamplighter_window(3), lamplighter_window(3).core)
print(f"\nF_3: eps0={rec.eps0} r0={rec.r0}, crossing in {tuple(map(str, rec.crossing))}")
