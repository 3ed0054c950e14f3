from . import schemas
from .catalog import CATALOG, build, diagnose_scheme, get_entry, list_entries, resolve
from .function_systems import (
    backward_trajectory,
    composition_factor,
    contraction_factor,
    forward_trajectory,
    hutchinson_apply,
    ifs_attractor,
    invariant_ball,
    invariant_ball_for,
    product_diagnostic,
    similarity_bound,
)
from .metric_sets import decimate, diameter, directed_distance, hausdorff, sets_equal, union
from .sfs_bridge import (
    attractor_from_basis,
    build_h_matrix,
    build_p_matrix,
    composition_search,
    lift,
    sfs_from_subdivision,
    word_limit,
)
from .subdivision import (
    c0_convergence_estimate,
    check_constant_reproduction,
    refine,
    slice_matrices,
    subdivide_levels,
)

__all__ = [
    "schemas",
    "CATALOG",
    "build",
    "diagnose_scheme",
    "get_entry",
    "list_entries",
    "resolve",
    "backward_trajectory",
    "composition_factor",
    "contraction_factor",
    "forward_trajectory",
    "hutchinson_apply",
    "ifs_attractor",
    "invariant_ball",
    "invariant_ball_for",
    "product_diagnostic",
    "similarity_bound",
    "decimate",
    "diameter",
    "directed_distance",
    "hausdorff",
    "sets_equal",
    "union",
    "attractor_from_basis",
    "build_h_matrix",
    "build_p_matrix",
    "composition_search",
    "lift",
    "sfs_from_subdivision",
    "word_limit",
    "c0_convergence_estimate",
    "check_constant_reproduction",
    "refine",
    "slice_matrices",
    "subdivide_levels",
]
