"""Persistent local-homology sheaves of weighted graphs.

Build a Vietoris-Rips flag filtration, compute per-vertex stalks of
persistent relative cocycles, couple adjacent stalks into interval-tagged
rank-1 sheaf Laplacian atoms, diffuse features through the assembled
operator, and validate every fast-path quantity against a dense exact
oracle.
"""

from .complexes import (
    Filtration,
    SimplexSubset,
    WeightedGraph,
    build_flag_complex,
    closure,
    frontier,
    graph_from_points,
    interior,
    star,
    star_of_vertices,
    truncate_neighborhood,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    ContractError,
    IllConditionedError,
    UnknownSimplexError,
)
from .linalg import Field, Reduction, SparseColumnMatrix, rank, reduce, restrict_rows_cols
from .nn import (
    FeatureBundle,
    FiltrationGradient,
    MLPParams,
    diffuse,
    dirichlet_energy,
    filtration_gradient,
    hypernet_weights,
    message_pass,
    sign_equivariant_layer,
)
from .persistence import (
    Diagram,
    PersistentCocycle,
    betti_at,
    persistent_cohomology,
    persistent_relative_cohomology,
)
from .sheaf import (
    AssembledLaplacian,
    ExtendedCoboundaryMatrix,
    LocalStalk,
    SheafLaplacianBlock,
    assemble_laplacian,
    build_extended_matrix,
    compute_stalk,
    laplacian_at_time,
    sheaf_laplacian_block,
)

__version__ = "0.1.0"
