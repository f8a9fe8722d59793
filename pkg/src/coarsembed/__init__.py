"""Finite-scale coarse embeddings into l^p direct sums.

The metric layer measures how a map compresses and expands distances.  On
top of it sit the amalgamation of a family of scale-wise maps into one block
vector in ``E^p`` and the gluing of embedded pieces.  The ``relhyp``
subpackage applies both to relative balls in free products of free abelian
groups.
"""
from .embedding import (
    CoarseMap,
    ConditionReport,
    amalgamate,
    amalgamation_bounds,
    build_scale_family,
    constant_map,
    coordinate_map,
    family_from_coarse_embedding,
    frechet_embedding,
    rescale_to_scale,
    verify_conditions,
)
from .estimators import AmalgamationEmbedding
from .gluing import GlueError, GlueInput, GlueResult, MapProvider, glue_family, glue_long_range, glue_two
from .lp import BlockVector, convexity_modulus_estimate, direct_sum, mazur_map, p_norm
from .metric import FiniteMetricSpace, MetricError, ModulusTable, SubsetPair, check_metric, check_s_separated, compression_moduli

__version__ = "0.1.0"
