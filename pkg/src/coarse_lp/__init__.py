"""Computational toolkit for coarse L^p-cohomology of graphs and groups."""

from .cocycle import (
    CocycleHandle,
    RegularRepVector,
    SublinearityProfile,
    coboundary,
    delta,
    mixing_overlap,
    separation_additivity,
    sublinearity_profile,
)
from .dirichlet import (
    EdgeChain,
    EnergyReport,
    TailDescriptor,
    VertexFunction,
    chain_norm,
    coupling,
    divergence,
    gradient,
    nonvanishing_lower_bound,
    p_energy,
    p_laplacian,
    solve_p_harmonic,
)
from .errors import BudgetExceededError, NonConvergenceError, RegionError
from .folner import (
    ControlCertificate,
    FolnerSequence,
    almost_fixed_displacement,
    average_cocycle,
    convolve_approximation,
    folner_lamplighter,
    folner_zd,
    verify_controlled,
)
from .graph import Graph, build_cayley_ball, estimate_hyperbolicity, gromov_product, read_graph, write_graph
from .groups import GroupSpec
from .hyperbolic import (
    BoundaryFunction,
    TreeBall,
    boundary_extension,
    build_tree_ball,
    extension_energy_profile,
    nonvanishing_certificate,
    unit_flow_cycle,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
