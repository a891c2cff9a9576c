"""Maximal flows through random capacity lattices and their continuum limits."""
from .capacity import Bernoulli, Constant, DiscreteTable, Exponential, Uniform, sample
from .continuum import ConstantNu, L1Nu, PolyhedralCut, TableNu, flat_cut_bound, i_omega
from .cylinder import build_cylinder_instance, estimate_nu, phi_cyl, tau
from .errors import ConfigError, GeometryError, MeshTooCoarse, PercoflowError
from .flow import check_stream, cut_capacity, max_flow, min_cut_is_cutset
from .geometry import BoundaryPatch, ConvexPolytope, Domain, Hyperrectangle, make_cylinder
from .harness import ExperimentConfig, derive_seed, run_converge, run_phase
from .lattice import discretize

__version__ = "0.1.0"

__all__ = [
    "Bernoulli", "Constant", "DiscreteTable", "Exponential", "Uniform", "sample",
    "ConstantNu", "L1Nu", "PolyhedralCut", "TableNu", "flat_cut_bound", "i_omega",
    "build_cylinder_instance", "estimate_nu", "phi_cyl", "tau",
    "ConfigError", "GeometryError", "MeshTooCoarse", "PercoflowError",
    "check_stream", "cut_capacity", "max_flow", "min_cut_is_cutset",
    "BoundaryPatch", "ConvexPolytope", "Domain", "Hyperrectangle", "make_cylinder",
    "ExperimentConfig", "derive_seed", "run_converge", "run_phase", "discretize",
]
