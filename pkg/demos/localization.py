"""
Localization diagnostics from Fock-state dynamics
=================================================

With a random longitudinal field the eigenstates of a disordered chain
concentrate on a few Fock states.  Participation ratios computed from the
eigenvector weights ``M`` and from the time-averaged overlap matrix
(through its Uhlmann square root ``R``) both grow with disorder.
"""

import numpy as np

import purispec as ps

L = 8
for r_z in (0.5, 5.0):
    pr_m, pr_r = [], []
    for seed in range(5):
        spec = ps.ModelSpec("ising", L, h_x=0.5, h_z=0.1, r_z=r_z, seed=seed)
        s = ps.diagonalize(ps.build_hamiltonian(spec))
        M = ps.weights_matrix(s)
        pr_m.append(ps.participation_ratio_M(M).mean())
        pr_r.append(ps.participation_ratio_R(ps.uhlmann_R(M, s, T=100.0)).mean())
    print(f"r_z = {r_z:3.1f}: <PR_M> = {np.mean(pr_m):.3f}, <PR_R(T=100)> = {np.mean(pr_r):.3f}")

# energy distribution of the Neel-like state, resolved over time
spec = ps.ModelSpec("ising", L, h_x=0.5, h_z=0.1, r_z=5.0, seed=0)
s = ps.diagonalize(ps.build_hamiltonian(spec))
M = ps.weights_matrix(s)
sigma = ps.neel_like(L)
for T in (5.0, 100.0):
    grid = ps.EnergyGrid.default(s, T)
    fock = ps.fock_distribution(s, M, sigma, grid, T)
    print(f"T = {T:5.1f}: largest peak weight {fock.values.max():.3f}")
