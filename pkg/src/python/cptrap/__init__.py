# CPTrap - Python Package
"""
Coherent population trapping of a three-level Lambda atom in the stochastic limit.

This package contains:
- Bath: susceptivities (resonant and principal parts) of a boson reservoir
- Generator: the 9x9 master-equation superoperator and its integrators
- Stationary: dark-state families, nullspace classification and quantum beats
- CLI: `python -m cptrap` subcommands writing CSV/JSON artifacts
"""

__version__ = "1.0.0"

from cptrap.bath import BathConfig, SusceptivitySet, build_susceptivity_set, einstein_ratio
from cptrap.generator import DensityMatrix3, build_generator, evolve_rk, master_equation_rhs
from cptrap.stationary import beats, family_state, predict_stationary, solve_nullspace

__all__ = [
    "BathConfig",
    "SusceptivitySet",
    "build_susceptivity_set",
    "einstein_ratio",
    "DensityMatrix3",
    "build_generator",
    "evolve_rk",
    "master_equation_rhs",
    "beats",
    "family_state",
    "predict_stationary",
    "solve_nullspace",
]
