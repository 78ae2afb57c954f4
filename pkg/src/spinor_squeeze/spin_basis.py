"""Zero-magnetization sector states of a three-mode spin-1 condensate.

All atoms share one motional orbital, so the internal dynamics lives on the
three bosonic modes (m_f = 0, +1, -1).  Starting from the polar state (all
atoms in m_f = 0) the spin-mixing collisions only create and destroy (+1, -1)
pairs, so the state stays inside the magnetization-zero subspace spanned by
the paired number states |N-2n, n, n> (mode order 0, +1, -1).  The pair count
n is the single quantum number of that basis.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "SectorState",
    "init_polar_state",
    "population_fraction_m0",
    "sector_dimension",
]

# Constructors tolerate the accumulated unitarity drift permitted on long
# Krylov trajectories (1e-8) with a safety margin.
_CONSTRUCTION_NORM_TOL = 1e-7


def sector_dimension(atom_count):
    """Number of paired basis states |N-2n, n, n| for N atoms: floor(N/2)+1."""
    n = int(atom_count)
    if n < 1:
        raise ValueError(f"atom_count must be a positive integer, got {atom_count}")
    return n // 2 + 1


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the spin-mixing model.

    lambda_a_prime is the spin-dependent collision rate (rad/s), positive in
    the sodium-like anti-ferromagnetic regime.  zeeman_p is the linear Zeeman
    shift (rad/s); it commutes with the spin dynamics and defaults to zero.
    """

    atom_count: int
    lambda_a_prime: float
    zeeman_p: float = 0.0

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError(f"atom_count must be >= 1, got {self.atom_count}")
        if self.lambda_a_prime < 0:
            warnings.warn(
                "lambda_a_prime < 0 (ferromagnetic regime); the pair-creation "
                "squeezing scheme assumes lambda_a_prime > 0",
                stacklevel=2,
            )


@dataclass(frozen=True)
class SectorState:
    """Pure state on the paired basis, amplitudes indexed by pair count n.

    Immutable after construction: the amplitude array is copied and marked
    read-only, so states can be shared freely across threads.
    """

    atom_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        dim = sector_dimension(self.atom_count)
        if amps.ndim != 1 or amps.shape[0] != dim:
            raise ValueError(
                f"amplitudes must have shape ({dim},) for N={self.atom_count}, "
                f"got {amps.shape}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > _CONSTRUCTION_NORM_TOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, atom_count, amplitudes):
        """Construct from an arbitrary non-zero amplitude vector, rescaling it."""
        amps = np.asarray(amplitudes, dtype=np.complex128)
        nrm = np.linalg.norm(amps)
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(atom_count, amps / nrm)

    @property
    def dimension(self):
        return self.amplitudes.shape[0]

    def norm_error(self):
        """|  ||c|| - 1 |, the unitarity drift of this snapshot."""
        return abs(np.linalg.norm(self.amplitudes) - 1.0)

    def pair_probabilities(self):
        """|c_n|^2 as a fresh writable array."""
        return np.abs(self.amplitudes) ** 2

    def to_json(self):
        """Checkpoint snapshot: {"atom_count": N, "amplitudes": [[re, im], ...]}."""
        pairs = [[float(a.real), float(a.imag)] for a in self.amplitudes]
        return json.dumps({"atom_count": self.atom_count, "amplitudes": pairs})

    @classmethod
    def from_json(cls, text):
        record = json.loads(text)
        amps = np.array(
            [complex(re, im) for re, im in record["amplitudes"]], dtype=np.complex128
        )
        return cls(int(record["atom_count"]), amps)


def init_polar_state(params: ModelParams) -> SectorState:
    """All N atoms in m_f = 0: c_0 = 1, every other pair amplitude zero."""
    if params.atom_count < 1:
        raise ValueError("empty condensate: need at least one atom")
    amps = np.zeros(sector_dimension(params.atom_count), dtype=np.complex128)
    amps[0] = 1.0
    return SectorState(params.atom_count, amps)


def population_fraction_m0(state: SectorState) -> float:
    """Fraction of atoms in m_f = 0: sum_n |c_n|^2 (N - 2n) / N."""
    n = np.arange(state.dimension)
    probs = state.pair_probabilities()
    return float(np.sum(probs * (state.atom_count - 2 * n)) / state.atom_count)
