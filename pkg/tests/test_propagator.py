import numpy as np
import pytest

from spinor_squeeze.spin_basis import ModelParams, init_polar_state
from spinor_squeeze.hamiltonian import build_spin_hamiltonian, build_oat_reference
from spinor_squeeze.propagator import (
    Propagator,
    Trajectory,
    evolve,
    evolve_sampled,
)
from spinor_squeeze.observables import standard_observer
from spinor_squeeze import oracle

from conftest import random_sector_state


def test_zero_time_is_identity():
    params = ModelParams(atom_count=10, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = init_polar_state(params)
    out = evolve(state, h, 0.0)
    np.testing.assert_array_equal(out.amplitudes, state.amplitudes)


def test_n4_matches_oracle_evolution():
    params = ModelParams(atom_count=4, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = evolve(init_polar_state(params), h, 0.1)
    psi_full = oracle.oracle_states(params, [0.0, 0.1])[1]
    idx = oracle.sector_fock_indices(4)
    np.testing.assert_allclose(state.amplitudes, psi_full[idx], atol=1e-8)
    # nothing leaked outside the sector in the oracle either
    outside = np.delete(psi_full, idx)
    assert np.linalg.norm(outside) < 1e-12


def test_half_step_composition():
    params = ModelParams(atom_count=14, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = init_polar_state(params)
    full = evolve(state, h, 0.2)
    halves = evolve(evolve(state, h, 0.1), h, 0.1)
    assert np.linalg.norm(full.amplitudes - halves.amplitudes) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_unitarity_random_states(seed):
    params = ModelParams(atom_count=17, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = random_sector_state(17, seed)
    out = evolve(state, h, 0.37)
    assert out.norm_error() <= 1e-10


def test_energy_conservation():
    params = ModelParams(atom_count=60, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = init_polar_state(params)
    prop = Propagator(h)
    psi = np.array(state.amplitudes)
    e0 = h.expectation(psi)
    scale = h.spectral_bound()
    for _ in range(20):
        psi = prop.advance_vector(psi, 0.01)
        assert abs(h.expectation(psi) - e0) <= 1e-8 * scale


def test_krylov_matches_eigen_path():
    # same operator, both engines, moderate dimension; agreement locks the
    # Krylov machinery against the exact decomposition
    params = ModelParams(atom_count=1024, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    psi0 = init_polar_state(params).amplitudes
    tau = 0.01
    eig = Propagator(h, dimension_switch=4096).advance_vector(psi0, tau)
    kry = Propagator(h, dimension_switch=256).advance_vector(psi0, tau)
    assert np.linalg.norm(eig - kry) <= 1e-8
    assert abs(np.linalg.norm(kry) - 1.0) <= 1e-10


def test_krylov_norm_drift_accumulated():
    params = ModelParams(atom_count=600, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    prop = Propagator(h, dimension_switch=64)
    psi = np.array(init_polar_state(params).amplitudes)
    for _ in range(40):
        psi = prop.advance_vector(psi, 0.002)
    assert abs(np.linalg.norm(psi) - 1.0) <= 1e-8


def test_dimension_mismatch_rejected():
    params = ModelParams(atom_count=8, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    with pytest.raises(ValueError):
        evolve(np.ones(3) / np.sqrt(3.0), h, 0.1)


def test_dicke_operator_evolution_matches_dense():
    from scipy.linalg import expm

    op = build_oat_reference(ModelParams(atom_count=12, lambda_a_prime=1.0))
    psi0 = np.zeros(op.dimension, dtype=complex)
    psi0[-1] = 1.0
    out = evolve(psi0, op, 0.07)
    expected = expm(-1j * 0.07 * op.as_dense()) @ psi0
    assert np.linalg.norm(out - expected) < 1e-10


def test_evolve_sampled_single_point():
    params = ModelParams(atom_count=6, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    traj = evolve_sampled(init_polar_state(params), h, [0.0], standard_observer())
    assert len(traj.records) == 1
    rec = traj.records[0]
    assert rec.xi_plus == pytest.approx(1.0, abs=1e-12)
    assert rec.pop_m0 == 1.0
    assert rec.norm_error == 0.0


def test_evolve_sampled_rejects_bad_grid():
    params = ModelParams(atom_count=6, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    state = init_polar_state(params)
    with pytest.raises(ValueError):
        evolve_sampled(state, h, [0.1, 0.2], standard_observer())
    with pytest.raises(ValueError):
        evolve_sampled(state, h, [0.0, 0.2, 0.2], standard_observer())


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(atom_count=4, times=np.array([0.0, 0.1]), records=[])


def test_trajectory_csv_schema(tmp_path):
    params = ModelParams(atom_count=8, lambda_a_prime=1.0)
    h = build_spin_hamiltonian(params)
    traj = evolve_sampled(
        init_polar_state(params), h, np.linspace(0.0, 0.1, 4), standard_observer()
    )
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == (
        "tau,N_lambda_t,xi_plus,xi_minus,theta_plus,theta_minus,"
        "E3_bits,pop_m0,quad_criterion,norm_error"
    )
    assert len(lines) == 5
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[2]) == pytest.approx(1.0, abs=1e-12)


def test_sampled_evolution_matches_oracle_trajectory(params_n8):
    grid = np.linspace(0.0, 0.25, 6)
    h = build_spin_hamiltonian(params_n8)
    traj = evolve_sampled(init_polar_state(params_n8), h, grid, standard_observer())
    otraj = oracle.oracle_evolve_and_measure(params_n8, grid)
    for rec, orec in zip(traj.records, otraj.records):
        assert rec.xi_plus == pytest.approx(orec.xi_plus, abs=1e-8)
        assert rec.xi_minus == pytest.approx(orec.xi_minus, abs=1e-8)
        assert rec.e3_bits == pytest.approx(orec.e3_bits, abs=1e-8)
        assert rec.pop_m0 == pytest.approx(orec.pop_m0, abs=1e-8)
