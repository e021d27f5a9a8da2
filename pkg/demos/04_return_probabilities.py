"""
Return probabilities of the lamplighter walk
============================================

The simple random walk on the lamplighter group returns to its start with
probability about exp(-c k^(1/3)).  The series is computed exactly by a
transfer over sites, then a stretched exponential is fitted to it.
"""
import numpy as np

from isospec.graph_core import IntegerLattice
from isospec.lamplighter import lamplighter_lazy
from isospec.walks import (fit_gamma, lamplighter_return_probabilities, return_probability,
                           witness_c0, witness_l1)

series = lamplighter_return_probabilities(600)
print("first even terms:", np.round(series.rho[:12:2], 6))
print(f"rho_600 = {series.rho[600]:.3e}, worst relative truncation loss {series.max_relative_loss:.1e}")

fit = fit_gamma(series.rho, 100, 600)
print(f"fitted gamma on [100, 600]: {fit.gamma:.3f} (K1={fit.K1:.3f}, K2={fit.K2:.3f})")

# Lattices decay polynomially instead, like k^(-D/2); compare at k = 40.
for D in (1, 2, 3):
    s = return_probability(IntegerLattice(D), (0,) * D, 40)
    print(f"Z^{D}: rho_40 = {s.rho[40]:.3e}")
print(f"lamplighter: rho_40 = {series.rho[40]:.3e}")

# Averaged walk measures f_n = (1/(n+1)) sum_k P^k delta give the two witnesses:
# their gradients shrink like 1/(n+1) in sup norm and in l1 after a Laplacian.
g = lamplighter_lazy()
for n in (1, 3, 5):
    print(f"n={n}: sup |grad f_n| = {witness_c0(g, g.origin(), n).sup_gradient:.4f}")
for n in (2, 10, 40):
    l1 = witness_l1(g, g.origin(), n, rho=series.rho)
    print(f"n={n:2d}: ||Delta f_n||_1 = {l1.laplacian_l1:.5f} <= {l1.bound:.5f} [{l1.method}]")
