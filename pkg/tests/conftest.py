import numpy as np
import pytest

from spinor_squeeze.spin_basis import ModelParams, SectorState, init_polar_state
from spinor_squeeze.hamiltonian import build_spin_hamiltonian
from spinor_squeeze.propagator import evolve


def random_sector_state(atom_count, seed):
    """Normalized state with full-sector support; deterministic per seed."""
    rng = np.random.default_rng(seed)
    dim = atom_count // 2 + 1
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return SectorState.normalized(atom_count, amps)


def evolved_polar_state(atom_count, tau, lam=1.0):
    params = ModelParams(atom_count=atom_count, lambda_a_prime=lam)
    h = build_spin_hamiltonian(params)
    return evolve(init_polar_state(params), h, tau)


@pytest.fixture
def params_n6():
    return ModelParams(atom_count=6, lambda_a_prime=1.0)


@pytest.fixture
def params_n8():
    return ModelParams(atom_count=8, lambda_a_prime=1.0)
