"""Free products ``Z^k1 * Z^k2`` relative to the first factor.

Normal-form arithmetic with both word metrics lives in ``group``; the
penetration constant is estimated in ``bcp`` and consumed by the ball
embedding in ``ball``."""
from .ball import (
    BallEmbedding,
    SeparationFailure,
    check_coset_decomposition,
    constant_phi,
    coset_representatives,
    embed_ball,
    group_space,
    h_space,
    scaled_identity_phi,
)
from .bcp import BCPConstant, BCPEstimate, BudgetExceeded, bcp_constant, estimate_bcp, slim_triangle_check, triangle_slack
from .cayley import bfs_relative_capped, bfs_s, count_shortest_paths
from .group import (
    A,
    B,
    IDENTITY,
    FreeProductGroup,
    GroupElement,
    abs_length,
    coset_rep,
    dist_rel,
    dist_s,
    h_part,
    inverse,
    multiply,
    rel_length,
)
from .paths import HComponent, RelPath, canonical_geodesic, h_components, penetrations, relative_geodesics

__all__ = [name for name in dir() if not name.startswith("_")]
