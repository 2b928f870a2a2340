"""Finite covering towers of weighted graphs and their spectra.

Levels are derived graphs of a voltage assignment over a chain of finite
groups.  The package computes measure-weighted Laplace spectra per level,
splits each level into pulled-back and new functions, and assembles the
resulting resolution of the identity.
"""

from .groups import (DeckChain, CyclicGroup, PermutationGroup, SL2Group, chain_from_config,
                     cyclic_chain, lcm_ladder, modular_chain, permutation_chain, sl2_chain,
                     symmetric_chain, verify_chain)
from .tower import (CoverTower, DisconnectedCoverError, VoltageAssignment, WeightedGraph,
                    build_tower, check_covering, check_principal, fiber)
from .measure import (LevelFunction, inner_product, level_measure, measure_consistency,
                      pullback, pullback_adjoint)
from .spectral import (LaplaceOperator, SpectrumLevel, check_commutation, eigendecompose,
                       laplacian, lowest_eigenpairs, tower_spectra)
from .solenoid import (IntervalSet, SpectralMeasureTrunc, assemble_resolution,
                       circle_tower_analytic, density_report, direct_resolution,
                       new_spectrum_multiset_check, pvm_axioms_check, selberg_gap_report,
                       solenoid_spectrum, telescope)

__all__ = [
    "DeckChain", "CyclicGroup", "PermutationGroup", "SL2Group", "chain_from_config",
    "cyclic_chain", "lcm_ladder", "modular_chain", "permutation_chain", "sl2_chain",
    "symmetric_chain", "verify_chain", "CoverTower", "DisconnectedCoverError",
    "VoltageAssignment", "WeightedGraph", "build_tower", "check_covering",
    "check_principal", "fiber", "LevelFunction", "inner_product", "level_measure",
    "measure_consistency", "pullback", "pullback_adjoint", "LaplaceOperator",
    "SpectrumLevel", "check_commutation", "eigendecompose", "laplacian",
    "lowest_eigenpairs", "tower_spectra", "IntervalSet", "SpectralMeasureTrunc",
    "assemble_resolution", "circle_tower_analytic", "density_report", "direct_resolution",
    "new_spectrum_multiset_check", "pvm_axioms_check", "selberg_gap_report",
    "solenoid_spectrum", "telescope",
]

__version__ = "0.1.0"
