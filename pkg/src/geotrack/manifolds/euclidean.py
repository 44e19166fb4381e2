"""Flat space ``R^n``: exact closed forms for every manifold operation."""

import numpy as np

from ..errors import ContractError
from .base import MEMBERSHIP_TOL, Manifold


class Euclidean(Manifold):
    """``R^n`` with the dot product (curvature identically zero)."""

    kappa = 0.0

    def __init__(self, n):
        if int(n) != n or n < 1:
            raise ContractError(f"dimension must be a positive integer, got {n}")
        self.ambient_dim = self.dim = int(n)
        self.point_shape = (self.dim,)
        self._validate_descriptor()

    def __repr__(self):
        return f"Euclidean({self.dim})"

    def belongs(self, x, atol=MEMBERSHIP_TOL):
        return np.shape(x) == self.point_shape and bool(np.all(np.isfinite(x)))

    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        return self.belongs(v)

    def inner(self, x, u, v):
        self.check_shape(u, v)
        return float(np.dot(u, v))

    def dist(self, x, y):
        self.check_shape(x, y)
        return float(np.linalg.norm(np.asarray(y, float) - x))

    def exp(self, x, v):
        self.check_shape(x, v)
        return np.asarray(x, float) + v

    def log(self, x, y):
        self.check_shape(x, y)
        return np.asarray(y, float) - x

    def transport(self, x, y, v):
        self.check_shape(x, y, v)
        return np.array(v, dtype=float)

    def random_tangent(self, x, rng):
        return rng.standard_normal(self.dim)

    def random_point(self, rng):
        return rng.standard_normal(self.dim)


def make_euclidean(n):
    return Euclidean(n)
