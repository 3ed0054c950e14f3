from .sfs import (
    schemas,
    hausdorff,
    ifs_attractor,
    forward_trajectory,
    backward_trajectory,
    slice_matrices,
    sfs_from_subdivision,
    resolve,
)
from .utils import get_thread_count

__all__ = [
    "schemas",
    "hausdorff",
    "ifs_attractor",
    "forward_trajectory",
    "backward_trajectory",
    "slice_matrices",
    "sfs_from_subdivision",
    "resolve",
    "get_thread_count",
]
