"""Purification spectroscopy of small spin chains.

Loschmidt-type signals of a Hamiltonian are generated (by exact spectral
sums or by simulated purified / interferometric protocols) and Fourier
transformed up to a finite time ``T`` into coarse-grained densities of
states, observable spectra and Fock-state energy distributions, which feed
thermodynamic, ETH and localization diagnostics.
"""

__version__ = "0.1.0"

from .errors import (
    AliasingError,
    ComputationError,
    ConfigError,
    DegenerateTemperatureError,
    DimensionError,
    PositivityError,
    PurispecError,
    ValidationError,
)
from .model import (
    FockState,
    ModelSpec,
    build_hamiltonian,
    build_observable_zz,
    draw_disorder,
    neel_like,
)
from .eigen import Spectrum, diagonalize, eigen_expectations, weights_matrix
from .dynamics import (
    ComplexTimeSeries,
    TimeGrid,
    evolve_state,
    fock_vector,
    half_chain_entropy,
    loschmidt_G,
    loschmidt_G_A,
    loschmidt_G_sigma,
    probe_interferometer,
    purified_G,
    purified_overlap_check,
    stochastic_trace_G,
)
from .reconstruct import (
    CoarseGrained,
    EnergyGrid,
    critical_time,
    dos_closed_form,
    dos_from_series,
    fock_distribution,
    fock_distribution_from_series,
    observable_Ac,
    observable_Ar,
    observable_Ar_from_series,
    sinc_kernel,
)
from .thermo import (
    ThermoCurve,
    oracle_bounds,
    partition_Z,
    reconstructed_average,
    signal_bounds,
    specific_heat,
)
from .eth import EthWindow, choose_Tsc, sigma_exact, sigma_signal
from .mbl import (
    footnote_probabilities,
    gamma_avg,
    gamma_t,
    pair_probabilities,
    participation_ratio_M,
    participation_ratio_R,
    polar_factor,
    uhlmann_R,
)
