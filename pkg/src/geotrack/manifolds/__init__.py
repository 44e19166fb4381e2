from .base import GeodesicBall, Manifold, project_ball, sample_tangent_gaussian
from .euclidean import Euclidean, make_euclidean
from .spd import SPD, karcher_cost, karcher_grad, make_spd

__all__ = [
    "Manifold",
    "GeodesicBall",
    "project_ball",
    "sample_tangent_gaussian",
    "Euclidean",
    "make_euclidean",
    "SPD",
    "make_spd",
    "karcher_cost",
    "karcher_grad",
]
