import functools

import numpy as np
import pytest

from purispec import ModelSpec, build_hamiltonian, diagonalize


def random_spec(rng, L_min=1, L_max=6, kind=None, disorder=True):
    kind = kind or rng.choice(["ising", "xxz"])
    L = int(rng.integers(L_min, L_max + 1))
    return ModelSpec(
        kind=str(kind),
        L=L,
        j_z=float(rng.uniform(0.5, 1.5)),
        j=float(rng.uniform(-1, 1)) if kind == "xxz" else 0.0,
        h_x=float(rng.uniform(-1, 1)),
        h_z=float(rng.uniform(-0.5, 0.5)),
        r_z=float(rng.uniform(0, 3)) if disorder else 0.0,
        seed=int(rng.integers(0, 2**63)),
    )


@functools.lru_cache(maxsize=None)
def spectrum_of(spec):
    return diagonalize(build_hamiltonian(spec))


@pytest.fixture
def rng():
    return np.random.default_rng(20180213)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
