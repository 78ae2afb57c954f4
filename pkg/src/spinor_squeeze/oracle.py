"""Brute-force ground truth on the full three-mode Fock space.

Everything here is built literally from the second-quantized mode operators:
the spin-1 matrices are transcribed from their defining deltas, L = sum a† S a
is assembled by sparse matrix products, evolution is dense exact
diagonalization, and every observable is evaluated by applying operator
matrices to the state.  No closed-form contraction is shared with the sector
path — disagreement between the two is how bugs get caught.

Only practical for small atom numbers (dimension (N+1)(N+2)/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .propagator import ObservableRecord, Trajectory
from .spin_basis import ModelParams, SectorState, sector_dimension

__all__ = [
    "FockState",
    "N_ORACLE_MAX_DEFAULT",
    "build_full_hamiltonian",
    "build_spin_operators",
    "embed_sector_state",
    "enumerate_basis",
    "mode_annihilators",
    "oracle_evolve_and_measure",
    "project_to_sector",
    "sector_fock_indices",
    "spin_one_matrices",
]

N_ORACLE_MAX_DEFAULT = 40

# Mode order everywhere: (0, +1, -1), matching the sector ket labels.
_MODE_SLOTS = {0: 0, +1: 1, -1: 2}


def _check_size(atom_count, max_atoms):
    if atom_count > max_atoms:
        raise ValueError(
            f"N={atom_count} too large for the brute-force oracle "
            f"(max {max_atoms}); raise the limit explicitly if you mean it"
        )


def enumerate_basis(atom_count, max_atoms=N_ORACLE_MAX_DEFAULT):
    """All occupations (n0, n+1, n-1) with sum N, lexicographic order."""
    _check_size(atom_count, max_atoms)
    basis = []
    for n0 in range(atom_count + 1):
        for np1 in range(atom_count - n0 + 1):
            basis.append((n0, np1, atom_count - n0 - np1))
    assert len(basis) == (atom_count + 1) * (atom_count + 2) // 2
    return basis


@dataclass(frozen=True)
class FockState:
    """Amplitudes over enumerate_basis(N); the oracle's state representation."""

    atom_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        dim = (self.atom_count + 1) * (self.atom_count + 2) // 2
        if amps.shape != (dim,):
            raise ValueError(f"amplitudes must have length {dim}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def _basis_index_map(basis):
    return {occ: i for i, occ in enumerate(basis)}


def mode_annihilators(atom_count, max_atoms=N_ORACLE_MAX_DEFAULT):
    """Annihilation matrices (a_0, a_+1, a_-1) on the fixed-N enumeration.

    a_alpha maps the N-atom space into the (N-1)-atom space; for operator
    products we only ever need number-conserving combinations, so each matrix
    is built between the two enumerations.
    """
    basis_n = enumerate_basis(atom_count, max_atoms)
    basis_m = enumerate_basis(atom_count - 1, max_atoms) if atom_count >= 1 else []
    index_m = _basis_index_map(basis_m)
    ops = []
    for mode in (0, +1, -1):
        slot = _MODE_SLOTS[mode]
        rows, cols, vals = [], [], []
        for col, occ in enumerate(basis_n):
            if occ[slot] == 0:
                continue
            target = list(occ)
            target[slot] -= 1
            rows.append(index_m[tuple(target)])
            cols.append(col)
            vals.append(np.sqrt(occ[slot]))
        ops.append(
            sparse.csr_matrix(
                (vals, (rows, cols)), shape=(len(basis_m), len(basis_n))
            )
        )
    return tuple(ops)


def spin_one_matrices():
    """The 3x3 spin-1 matrices from their defining deltas, slot order (0,+1,-1).

    S^x[a,b] = (delta_{a,b-1} + delta_{a,b+1})/sqrt(2)
    S^y[a,b] = i (delta_{a,b-1} - delta_{a,b+1})/sqrt(2)
    S^z[a,b] = a delta_{a,b}        (a, b are the m_f values -1, 0, +1)
    """
    values = (0, +1, -1)
    sx = np.zeros((3, 3), dtype=np.complex128)
    sy = np.zeros((3, 3), dtype=np.complex128)
    sz = np.zeros((3, 3), dtype=np.complex128)
    for a_val, a in [(v, _MODE_SLOTS[v]) for v in values]:
        for b_val, b in [(v, _MODE_SLOTS[v]) for v in values]:
            d_minus = 1.0 if a_val == b_val - 1 else 0.0
            d_plus = 1.0 if a_val == b_val + 1 else 0.0
            sx[a, b] = (d_minus + d_plus) / np.sqrt(2.0)
            sy[a, b] = 1j * (d_minus - d_plus) / np.sqrt(2.0)
            if a_val == b_val:
                sz[a, b] = a_val
    return sx, sy, sz


def build_spin_operators(atom_count, max_atoms=N_ORACLE_MAX_DEFAULT):
    """L^x, L^y, L^z = sum_{ab} a_a† S_ab a_b as sparse matrices on the N-atom space."""
    ann = mode_annihilators(atom_count, max_atoms)
    sx, sy, sz = spin_one_matrices()
    out = []
    for s in (sx, sy, sz):
        dim = (atom_count + 1) * (atom_count + 2) // 2
        total = sparse.csr_matrix((dim, dim), dtype=np.complex128)
        for a in range(3):
            for b in range(3):
                if s[a, b] != 0:
                    total = total + s[a, b] * (ann[a].getH() @ ann[b])
        out.append(total)
    return tuple(out)


def build_full_hamiltonian(params: ModelParams, max_atoms=N_ORACLE_MAX_DEFAULT):
    """Dense Hermitian lambda_a_prime (L^2 - 2N) + p L^z on the full Fock space."""
    n_atoms = params.atom_count
    _check_size(n_atoms, max_atoms)
    lx, ly, lz = build_spin_operators(n_atoms, max_atoms)
    l_squared = lx @ lx + ly @ ly + lz @ lz
    dim = (n_atoms + 1) * (n_atoms + 2) // 2
    h = params.lambda_a_prime * (
        l_squared - 2.0 * n_atoms * sparse.identity(dim, dtype=np.complex128)
    )
    if params.zeeman_p != 0.0:
        h = h + params.zeeman_p * lz
    return np.asarray(h.todense())


def sector_fock_indices(atom_count, max_atoms=N_ORACLE_MAX_DEFAULT):
    """Full-space index of |N-2n, n, n> for each pair count n."""
    index = _basis_index_map(enumerate_basis(atom_count, max_atoms))
    dim = sector_dimension(atom_count)
    return np.array(
        [index[(atom_count - 2 * n, n, n)] for n in range(dim)], dtype=np.intp
    )


def embed_sector_state(state: SectorState, max_atoms=N_ORACLE_MAX_DEFAULT) -> FockState:
    idx = sector_fock_indices(state.atom_count, max_atoms)
    dim = (state.atom_count + 1) * (state.atom_count + 2) // 2
    amps = np.zeros(dim, dtype=np.complex128)
    amps[idx] = state.amplitudes
    return FockState(state.atom_count, amps)


def project_to_sector(fock: FockState, max_atoms=N_ORACLE_MAX_DEFAULT):
    """(sector amplitudes, leakage norm outside the paired subspace)."""
    idx = sector_fock_indices(fock.atom_count, max_atoms)
    inside = fock.amplitudes[idx]
    leak_sq = float(np.linalg.norm(fock.amplitudes) ** 2 - np.linalg.norm(inside) ** 2)
    return inside.copy(), np.sqrt(max(leak_sq, 0.0))


# --- direct observable evaluation -------------------------------------------


class _Measurement:
    """Operator toolbox bound to one atom number, built once per oracle run."""

    def __init__(self, atom_count, max_atoms=N_ORACLE_MAX_DEFAULT):
        self.atom_count = atom_count
        a0, ap, am = mode_annihilators(atom_count, max_atoms)
        self.number_ops = [
            np.asarray((a.getH() @ a).todense()) for a in (a0, ap, am)
        ]
        # Collective spins on the level pairs (|+>,|0>) and (|->,|0>):
        # a_± = (a_{+1} ± a_{-1})/sqrt(2), J^x = (a_±† a_0 + a_0† a_±)/2, etc.
        self.j_ops = {}
        for sign, name in ((+1.0, "plus"), (-1.0, "minus")):
            a_s = (ap + sign * am) / np.sqrt(2.0)
            raise_s = a_s.getH() @ a0  # a_±† a_0
            lower_s = raise_s.getH()
            jx = np.asarray(((raise_s + lower_s) / 2.0).todense())
            jy = np.asarray((1j * (raise_s - lower_s) / 2.0).todense())
            jz = np.asarray(((a0.getH() @ a0 - a_s.getH() @ a_s) / 2.0).todense())
            self.j_ops[name] = (jx, jy, jz)
        # a_{±1} a_0† conserves atom number but routes through the (N+1)-atom
        # space: build both factors there.
        a0_up, ap_up, am_up = mode_annihilators(atom_count + 1, max_atoms + 1)
        self._prime_plus = ap_up @ a0_up.getH()
        self._prime_minus = am_up @ a0_up.getH()
        self._basis = enumerate_basis(atom_count, max_atoms)
        lx, ly, lz = build_spin_operators(atom_count, max_atoms)
        self.lz = np.asarray(lz.todense())
        # (a_{-1}† a_{+1} - a_{+1}† a_{-1}) / 4 = [J_+^x, J_-^x]
        self.commutator_xx = np.asarray(
            ((am.getH() @ ap - ap.getH() @ am) / 4.0).todense()
        )

    @staticmethod
    def _expect(op, psi):
        return complex(np.vdot(psi, op @ psi))

    def spin_moment_set(self, psi, name):
        jx, jy, jz = self.j_ops[name]
        mx = self._expect(jx, psi).real
        my = self._expect(jy, psi).real
        mz = self._expect(jz, psi).real
        xx = self._expect(jx @ jx, psi).real - mx * mx
        yy = self._expect(jy @ jy, psi).real - my * my
        xy = self._expect((jx @ jy + jy @ jx) / 2.0, psi).real - mx * my
        return mx, my, mz, xx, yy, xy

    def squeezing_vs_angle(self, psi, name):
        """Returns xi(theta) evaluating the variance ratio from raw moments."""
        mx, my, mz, xx, yy, xy = self.spin_moment_set(psi, name)
        n_atoms = self.atom_count

        def xi(theta):
            c, s = np.cos(theta), np.sin(theta)
            var1 = c * c * xx + s * s * yy + 2.0 * c * s * xy
            mean2 = -s * mx + c * my
            return n_atoms * var1 / (mean2**2 + mz**2)

        return xi

    def population_m0(self, psi):
        return self._expect(self.number_ops[0], psi).real / self.atom_count

    def mode_entropy(self, psi, slot):
        """Von Neumann entropy (bits) of one mode by explicit partial trace."""
        groups = {}
        for i, occ in enumerate(self._basis):
            key_occ = occ[slot]
            key_rest = tuple(o for j, o in enumerate(occ) if j != slot)
            groups.setdefault(key_occ, {})[key_rest] = psi[i]
        occs = sorted(groups)
        rests = sorted({r for g in groups.values() for r in g})
        rest_index = {r: j for j, r in enumerate(rests)}
        block = np.zeros((len(occs), len(rests)), dtype=np.complex128)
        for i, occ in enumerate(occs):
            for rest, amp in groups[occ].items():
                block[i, rest_index[rest]] = amp
        rho = block @ block.conj().T
        evals = np.linalg.eigvalsh(rho)
        evals = evals[evals > 1e-300]
        return float(-np.sum(evals * np.log2(evals)))

    def quadrature_criterion_sum(self, psi):
        """min_theta <(dX'_+^th)^2> + <(dX'_-^(th+pi/2))^2> for the phase-locked modes.

        a'_{±1} = a_{±1} a_0† / sqrt(<a_0† a_0>) literally; the quadratures are
        X'_{±1}^θ = (e^{iθ} a'_{±1}† + e^{-iθ} a'_{±1})/sqrt(2) combined as
        X'_± = (X'_{+1} ± X'_{-1})/sqrt(2).
        """
        n0 = self._expect(self.number_ops[0], psi).real
        if n0 <= 0.0:
            raise ValueError("no population left in m_f = 0")
        prime_p = np.asarray(self._prime_plus.todense()) / np.sqrt(n0)
        prime_m = np.asarray(self._prime_minus.todense()) / np.sqrt(n0)

        def quad_pair(sign):
            comb = (prime_p + sign * prime_m) / np.sqrt(2.0)
            x0 = (comb.conj().T + comb) / np.sqrt(2.0)  # theta = 0 quadrature
            x90 = (1j * comb.conj().T - 1j * comb) / np.sqrt(2.0)
            m0 = self._expect(x0, psi).real
            m90 = self._expect(x90, psi).real
            v00 = self._expect(x0 @ x0, psi).real - m0 * m0
            v99 = self._expect(x90 @ x90, psi).real - m90 * m90
            v09 = self._expect((x0 @ x90 + x90 @ x0) / 2.0, psi).real - m0 * m90
            return v00, v99, v09

        vp = quad_pair(+1.0)
        vm = quad_pair(-1.0)

        def total(theta):
            c, s = np.cos(theta), np.sin(theta)
            var_p = c * c * vp[0] + s * s * vp[1] + 2 * c * s * vp[2]
            c2, s2 = np.cos(theta + np.pi / 2), np.sin(theta + np.pi / 2)
            var_m = c2 * c2 * vm[0] + s2 * s2 * vm[1] + 2 * c2 * s2 * vm[2]
            return var_p + var_m

        _, value = minimize_angle(total)
        return value


def minimize_angle(func, period=np.pi, coarse=2048, rounds=3, refine=64):
    """Deterministic grid-with-zoom minimizer over one period of `func`."""
    thetas = np.linspace(0.0, period, coarse, endpoint=False)
    values = np.array([func(t) for t in thetas])
    best = int(np.argmin(values))
    theta, value = thetas[best], values[best]
    width = period / coarse
    for _ in range(rounds):
        local = np.linspace(theta - width, theta + width, refine)
        vals = np.array([func(t) for t in local])
        best = int(np.argmin(vals))
        theta, value = local[best], vals[best]
        width = 2.0 * width / refine
    return theta % period, float(value)


def oracle_evolve_and_measure(
    params: ModelParams,
    time_grid,
    max_atoms=N_ORACLE_MAX_DEFAULT,
) -> Trajectory:
    """Exact-diagonalization trajectory of the polar state with all observables.

    Evolution runs on the full Fock space under lambda (L^2 - 2N) + p L^z;
    times are dimensionless tau = lambda_a_prime * t.
    """
    n_atoms = params.atom_count
    _check_size(n_atoms, max_atoms)
    time_grid = np.asarray(time_grid, dtype=np.float64)
    h = build_full_hamiltonian(params, max_atoms)
    scale = params.lambda_a_prime if params.lambda_a_prime != 0.0 else 1.0
    evals, evecs = np.linalg.eigh(h / scale)

    basis = enumerate_basis(n_atoms, max_atoms)
    start = _basis_index_map(basis)[(n_atoms, 0, 0)]
    psi0 = np.zeros(len(basis), dtype=np.complex128)
    psi0[start] = 1.0
    w0 = evecs.conj().T @ psi0

    meas = _Measurement(n_atoms, max_atoms)
    records = []
    for tau in time_grid:
        psi = evecs @ (np.exp(-1j * evals * tau) * w0)
        norm_err = abs(np.linalg.norm(psi) - 1.0)
        xi_fns = {name: meas.squeezing_vs_angle(psi, name) for name in ("plus", "minus")}
        theta_p, xi_p = minimize_angle(xi_fns["plus"])
        theta_m, xi_m = minimize_angle(xi_fns["minus"])
        entropies = [meas.mode_entropy(psi, slot) for slot in (1, 2, 0)]
        e3 = float(np.cbrt(entropies[0] * entropies[1] * entropies[2]))
        records.append(
            ObservableRecord(
                xi_plus=xi_p,
                xi_minus=xi_m,
                theta_star_plus=theta_p,
                theta_star_minus=theta_m,
                e3_bits=e3,
                pop_m0=meas.population_m0(psi),
                quad_criterion=meas.quadrature_criterion_sum(psi),
                norm_error=norm_err,
            )
        )
    return Trajectory(
        atom_count=n_atoms,
        times=time_grid,
        records=records,
        source="oracle",
    )


def oracle_states(params: ModelParams, time_grid, max_atoms=N_ORACLE_MAX_DEFAULT):
    """Full-space state vectors at each grid time (for fidelity comparisons)."""
    n_atoms = params.atom_count
    _check_size(n_atoms, max_atoms)
    h = build_full_hamiltonian(params, max_atoms)
    scale = params.lambda_a_prime if params.lambda_a_prime != 0.0 else 1.0
    evals, evecs = np.linalg.eigh(h / scale)
    basis = enumerate_basis(n_atoms, max_atoms)
    start = _basis_index_map(basis)[(n_atoms, 0, 0)]
    psi0 = np.zeros(len(basis), dtype=np.complex128)
    psi0[start] = 1.0
    w0 = evecs.conj().T @ psi0
    return [
        evecs @ (np.exp(-1j * evals * tau) * w0)
        for tau in np.asarray(time_grid, dtype=np.float64)
    ]


def commutator_expectation_series(params, time_grid, max_atoms=N_ORACLE_MAX_DEFAULT):
    """|<[J_+^x, J_-^x]>| along the trajectory; small while m_f=0 dominates."""
    meas = _Measurement(params.atom_count, max_atoms)
    return np.array(
        [
            abs(complex(np.vdot(psi, meas.commutator_xx @ psi)))
            for psi in oracle_states(params, time_grid, max_atoms)
        ]
    )
