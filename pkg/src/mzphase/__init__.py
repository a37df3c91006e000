"""Electron and hole geometric phases of Majorana zero modes at a
ferromagnet / topological-insulator edge / superconductor junction."""

from .bdg import ModelParams, NambuSpinor, ParamPoint, Region, Sector
from .holonomy import ParamPath, PhaseResult, curvature, path_phase
from .junction import derived_params, match_interface, sampler
from .lattice import LatticeSpec, build_lattice, lattice_sampler, zero_mode_numeric
from .nonadiabatic import Schedule, evolve, overlap_product

__all__ = [
    "ModelParams",
    "NambuSpinor",
    "ParamPoint",
    "Region",
    "Sector",
    "ParamPath",
    "PhaseResult",
    "curvature",
    "path_phase",
    "derived_params",
    "match_interface",
    "sampler",
    "LatticeSpec",
    "build_lattice",
    "lattice_sampler",
    "zero_mode_numeric",
    "Schedule",
    "evolve",
    "overlap_product",
]
__version__ = "0.1.0"
