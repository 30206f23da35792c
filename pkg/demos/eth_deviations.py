"""
Eigenstate-to-eigenstate fluctuations of a local observable
===========================================================

The nearest-neighbour ``S^z S^z`` correlator is resolved level by level as
``T`` grows.  Near-integrable (small ``h_z``) and chaotic (larger ``h_z``)
chains are compared through the window-averaged deviation of ``A_n``
from its smooth microcanonical value.
"""

import purispec as ps

L = 10
window = ps.EthWindow(-1.0, 1.0)
for h_z in (0.01, 0.2):
    s = ps.diagonalize(ps.build_hamiltonian(ps.ModelSpec("ising", L, h_x=0.5, h_z=h_z)))
    A_n = ps.eigen_expectations(s, ps.build_observable_zz(L))
    t_sc = ps.choose_Tsc(s, window)
    grid = ps.EnergyGrid.default(s, t_sc)
    rho_sc = ps.dos_closed_form(s, grid, t_sc)
    A_c = ps.observable_Ac(ps.observable_Ar(s, A_n, grid, t_sc), rho_sc)
    sigma = ps.sigma_exact(s, A_n, A_c, ps.EthWindow(-1.0, 1.0, t_sc))
    print(f"h_z = {h_z:4.2f}: T_sc = {t_sc:.2f}, sigma_exact = {sigma:.4f}")

    # finite-T signal estimator; it shrinks as T grows but carries a kernel bias
    for T in (4 * t_sc, 16 * t_sc):
        g = ps.EnergyGrid.default(s, T)
        rho_sc = ps.dos_closed_form(s, g, t_sc)
        A_c = ps.observable_Ac(ps.observable_Ar(s, A_n, g, t_sc), rho_sc)
        rho = ps.dos_closed_form(s, g, T)
        A_r = ps.observable_Ar(s, A_n, g, T)
        value = ps.sigma_signal(A_r, A_c, rho, rho_sc, ps.EthWindow(-1.0, 1.0, t_sc, T))
        print(f"    T = {T:7.2f}: sigma_signal = {value:.4f}")
