"""Spin-mixing Hamiltonian on the paired sector, plus comparison generators.

The spin-dependent collision energy of the three-mode system is
lambda_a_prime * (L^2 - 2N) with L the total (second-quantized) spin-1
operator.  Restricted to the paired basis |N-2n, n, n| it is real symmetric
tridiagonal: the quartic pair terms a+† a-† a0 a0 (and conjugate) change the
pair count by exactly one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .spin_basis import ModelParams, sector_dimension

__all__ = [
    "DEFAULT_MAX_ATOMS",
    "DickeOperator",
    "TridiagonalOperator",
    "add_linear_zeeman",
    "build_oat_reference",
    "build_spin_hamiltonian",
    "operator_to_csv",
]

DEFAULT_MAX_ATOMS = 1_000_000


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal operator, bands in energy units (rad/s).

    scale (rad/s) is the frequency used to express evolution in the
    dimensionless time tau = scale * t; propagators exponentiate
    (bands / scale) * tau.  For a zero operator scale is set to 1.
    """

    dimension: int
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=np.float64)
        off = np.asarray(self.off_diagonal, dtype=np.float64)
        if diag.shape != (self.dimension,):
            raise ValueError(f"diagonal must have length {self.dimension}")
        if off.shape != (max(self.dimension - 1, 0),):
            raise ValueError(f"off_diagonal must have length {self.dimension - 1}")
        if self.scale == 0.0:
            raise ValueError("scale must be non-zero")
        diag = diag.copy()
        off = off.copy()
        diag.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "off_diagonal", off)

    def matvec(self, x):
        y = self.diagonal * x
        if self.dimension > 1:
            y[:-1] += self.off_diagonal * x[1:]
            y[1:] += self.off_diagonal * x[:-1]
        return y

    def expectation(self, amplitudes):
        """<psi|H|psi> in rad/s; imaginary part drops by symmetry."""
        return float(np.real(np.vdot(amplitudes, self.matvec(np.asarray(amplitudes)))))

    def as_dense(self):
        h = np.diag(self.diagonal)
        if self.dimension > 1:
            idx = np.arange(self.dimension - 1)
            h[idx, idx + 1] = self.off_diagonal
            h[idx + 1, idx] = self.off_diagonal
        return h

    def spectral_bound(self):
        """Gershgorin bound on |eigenvalues| in rad/s."""
        radius = np.zeros(self.dimension)
        if self.dimension > 1:
            radius[:-1] += np.abs(self.off_diagonal)
            radius[1:] += np.abs(self.off_diagonal)
        return float(np.max(np.abs(self.diagonal) + radius))


@dataclass(frozen=True)
class DickeOperator:
    """Collective-spin operator for N two-level atoms, J = N/2.

    Matrix in the J_z eigenbasis ordered by ascending m = k - N/2
    (k = 0..N).  Only the offsets 0 and +-2 are populated here (the
    one-axis-twisting generator conserves m-parity), stored as `diagonal`
    and `off2`.  scale as in TridiagonalOperator.
    """

    atom_count: int
    diagonal: np.ndarray
    off2: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        dim = self.atom_count + 1
        diag = np.asarray(self.diagonal, dtype=np.float64)
        off2 = np.asarray(self.off2, dtype=np.float64)
        if diag.shape != (dim,):
            raise ValueError(f"diagonal must have length {dim}")
        if off2.shape != (max(dim - 2, 0),):
            raise ValueError(f"off2 must have length {dim - 2}")
        diag = diag.copy()
        off2 = off2.copy()
        diag.setflags(write=False)
        off2.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "off2", off2)

    @property
    def dimension(self):
        return self.atom_count + 1

    def as_dense(self):
        h = np.diag(self.diagonal)
        if self.dimension > 2:
            idx = np.arange(self.dimension - 2)
            h[idx, idx + 2] = self.off2
            h[idx + 2, idx] = self.off2
        return h

    def parity_chains(self):
        """Split into the two decoupled m-parity chains.

        Returns [(indices, TridiagonalOperator), ...] where `indices` maps
        chain positions back into the full J_z basis.
        """
        chains = []
        for start in (0, 1):
            idx = np.arange(start, self.dimension, 2)
            if idx.size == 0:
                continue
            diag = self.diagonal[idx]
            off = self.off2[idx[:-1]] if idx.size > 1 else np.zeros(0)
            chains.append((idx, TridiagonalOperator(idx.size, diag, off, self.scale)))
        return chains


def build_spin_hamiltonian(
    params: ModelParams, max_atoms: int = DEFAULT_MAX_ATOMS
) -> TridiagonalOperator:
    """Exact matrix of lambda_a_prime (L^2 - 2N) on the paired basis.

    Ladder algebra of the pair operators gives
        <n |L^2| n>   = 4 n (N - 2n) + 2 n + 2 (N - 2n)
        <n+1|L^2| n>  = 2 (n + 1) sqrt((N - 2n)(N - 2n - 1))
    so with the -2N shift the diagonal is 4n(N-2n) - 2n.  The shift keeps
    the polar state at zero energy and matches the full-space operator
    bit-for-bit.
    """
    n_atoms = params.atom_count
    if n_atoms > max_atoms:
        raise ValueError(
            f"N={n_atoms} exceeds the configured maximum {max_atoms} "
            "(raise max_atoms explicitly to build larger sectors)"
        )
    lam = params.lambda_a_prime
    dim = sector_dimension(n_atoms)
    n = np.arange(dim, dtype=np.float64)
    diag = lam * (4.0 * n * (n_atoms - 2.0 * n) - 2.0 * n)
    m = n[:-1]
    off = lam * 2.0 * (m + 1.0) * np.sqrt((n_atoms - 2.0 * m) * (n_atoms - 2.0 * m - 1.0))
    scale = lam if lam != 0.0 else 1.0
    return TridiagonalOperator(dim, diag, off, scale)


def add_linear_zeeman(
    h: TridiagonalOperator, p: float, atom_count: int
) -> TridiagonalOperator:
    """H + p * L_z restricted to the paired sector.

    Every basis vector has equal +1/-1 occupations, so L_z acts as zero and
    the returned operator equals H entrywise.  The addition is carried out
    literally so the invariance is demonstrated rather than assumed; the
    full-space operator (where p*L_z is non-trivial) lives in the oracle.
    """
    if h.dimension != sector_dimension(atom_count):
        raise ValueError(
            f"operator dimension {h.dimension} does not match N={atom_count}"
        )
    n = np.arange(h.dimension)
    magnetization = (n - n).astype(np.float64)  # n_{+1} - n_{-1} = 0 for every ket
    return TridiagonalOperator(
        h.dimension, h.diagonal + p * magnetization, h.off_diagonal, h.scale
    )


def build_oat_reference(params: ModelParams) -> DickeOperator:
    """One-axis-twisting generator 4 * lambda_a_prime * Jx^2 for J = N/2.

    Jx^2 in the J_z eigenbasis:
        <m | Jx^2 | m>    = (J(J+1) - m^2) / 2
        <m+2 | Jx^2 | m>  = sqrt((J-m)(J+m+1)(J-m-1)(J+m+2)) / 4
    """
    n_atoms = params.atom_count
    if n_atoms < 2:
        raise ValueError("one-axis twisting needs at least two atoms")
    lam = params.lambda_a_prime
    j = n_atoms / 2.0
    m = np.arange(n_atoms + 1, dtype=np.float64) - j
    diag = 4.0 * lam * 0.5 * (j * (j + 1.0) - m**2)
    m2 = m[:-2]
    off2 = (
        4.0
        * lam
        * 0.25
        * np.sqrt((j - m2) * (j + m2 + 1.0) * (j - m2 - 1.0) * (j + m2 + 2.0))
    )
    scale = lam if lam != 0.0 else 1.0
    return DickeOperator(n_atoms, diag, off2, scale)


def operator_to_csv(op: TridiagonalOperator, path):
    """Debug dump: one row per basis index; off_diagonal[i] couples i, i+1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "diagonal", "off_diagonal"])
        for i in range(op.dimension):
            off = f"{op.off_diagonal[i]:.17g}" if i < op.dimension - 1 else ""
            writer.writerow([i, f"{op.diagonal[i]:.17g}", off])
