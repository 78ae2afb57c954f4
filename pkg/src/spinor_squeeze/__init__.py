"""Squeezing and mode entanglement from spin-mixing collisions in a spin-1
Bose-Einstein condensate."""

__version__ = "0.1.0"

from .spin_basis import (
    ModelParams,
    SectorState,
    init_polar_state,
    population_fraction_m0,
    sector_dimension,
)
from .hamiltonian import (
    DickeOperator,
    TridiagonalOperator,
    add_linear_zeeman,
    build_oat_reference,
    build_spin_hamiltonian,
)
from .propagator import (
    ObservableRecord,
    Propagator,
    Trajectory,
    evolve,
    evolve_sampled,
)
from .observables import (
    SpinMoments,
    SqueezingResult,
    oat_squeezing_curve,
    optimal_squeezing,
    quadrature_criterion,
    spin_moments,
    squeezing_parameter,
    three_mode_entanglement,
)

__all__ = [
    "DickeOperator",
    "ModelParams",
    "ObservableRecord",
    "Propagator",
    "SectorState",
    "SpinMoments",
    "SqueezingResult",
    "Trajectory",
    "TridiagonalOperator",
    "add_linear_zeeman",
    "build_oat_reference",
    "build_spin_hamiltonian",
    "evolve",
    "evolve_sampled",
    "init_polar_state",
    "oat_squeezing_curve",
    "optimal_squeezing",
    "population_fraction_m0",
    "quadrature_criterion",
    "sector_dimension",
    "spin_moments",
    "squeezing_parameter",
    "three_mode_entanglement",
]
