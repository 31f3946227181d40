"""pairrank: rank free-form topic labels from general to specific.

Pairwise human judgments are aggregated with a Gaussian skill-rating
model, the next most informative pairs are chosen actively, and the
continuous ranking is discretized into taxonomy levels.
"""

from .kernels import BACKEND_NAME
from .rating import (
    Annotation,
    ComparisonMatrix,
    Ranking,
    RatingConfig,
    SkillRating,
    rank_from_matrix,
    update_pair,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "BACKEND_NAME",
    "ComparisonMatrix",
    "Ranking",
    "RatingConfig",
    "SkillRating",
    "__version__",
    "rank_from_matrix",
    "update_pair",
]
