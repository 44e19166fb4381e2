"""Abstract Hadamard-manifold interface and geodesic-ball constraint sets.

Points and tangent vectors are plain ``numpy`` arrays in ambient
coordinates. Tangent vectors do not carry their base point; every
operation takes the base point explicitly, as in most Riemannian
optimisation toolboxes.
"""

import abc
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

MEMBERSHIP_TOL = 1e-10


class Manifold(abc.ABC):
    """A complete, simply connected manifold of nonpositive curvature.

    Attributes
    ----------
    ambient_dim : int
        Length ``n`` of the flattened ambient coordinate vector.
    dim : int
        Intrinsic dimension ``d``.
    kappa : float
        Lower bound on the sectional curvature (``kappa <= 0``).
    point_shape : tuple
        Array shape used for points and tangent vectors.
    """

    ambient_dim: int
    dim: int
    kappa: float
    point_shape: tuple

    def _validate_descriptor(self):
        if self.dim < 1:
            raise ContractError(f"intrinsic dimension must be >= 1, got {self.dim}")
        if self.dim > self.ambient_dim:
            raise ContractError("intrinsic dimension exceeds ambient dimension")
        if self.kappa > 0:
            raise ContractError(f"curvature lower bound must be <= 0, got {self.kappa}")

    # -- membership ---------------------------------------------------------

    @abc.abstractmethod
    def belongs(self, x, atol=MEMBERSHIP_TOL):
        """Whether ``x`` is a point of the manifold."""

    @abc.abstractmethod
    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        """Whether ``v`` lies in the tangent space at ``x``."""

    def check_shape(self, *arrays):
        for a in arrays:
            if np.shape(a) != self.point_shape:
                raise ContractError(
                    f"expected array of shape {self.point_shape}, got {np.shape(a)}"
                )

    # -- geometry -----------------------------------------------------------

    @abc.abstractmethod
    def inner(self, x, u, v):
        """Riemannian inner product of ``u`` and ``v`` at ``x``."""

    def norm(self, x, v):
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    @abc.abstractmethod
    def dist(self, x, y):
        """Geodesic distance."""

    @abc.abstractmethod
    def exp(self, x, v):
        """Exponential map at ``x`` applied to the tangent vector ``v``."""

    @abc.abstractmethod
    def log(self, x, y):
        """Inverse exponential map: tangent vector at ``x`` pointing to ``y``."""

    @abc.abstractmethod
    def transport(self, x, y, v):
        """Parallel transport of ``v`` from ``x`` to ``y`` along the geodesic."""

    @abc.abstractmethod
    def random_tangent(self, x, rng):
        """Draw ``u = P u0`` with ``u0 ~ N(0, I_n)`` and ``P`` the orthogonal
        projection onto the tangent space in ambient coordinates."""

    @abc.abstractmethod
    def random_point(self, rng):
        """A random point, for tests and probing."""

    def zero_vector(self, x):
        return np.zeros(self.point_shape)

    def tangent_basis(self, x):
        """Basis of the tangent space at ``x``, orthonormal in the metric.

        The default suits manifolds whose metric is the ambient dot product.
        """
        n = int(np.prod(self.point_shape))
        return [e.reshape(self.point_shape) for e in np.eye(n)]

    def geodesic(self, x, y, t):
        """Point at fraction ``t`` along the geodesic from ``x`` to ``y``."""
        return self.exp(x, t * self.log(x, y))


def sample_tangent_gaussian(manifold, x, rng):
    """Projected Gaussian direction at ``x``; ``E ||u||^2 = d``."""
    return manifold.random_tangent(x, rng)


@dataclass(frozen=True)
class GeodesicBall:
    """Closed geodesic ball ``{x : dist(x, center) <= radius}``.

    Geodesic balls are convex on Hadamard manifolds, so the metric
    projection onto them is single valued and given in closed form.
    Any two points of the ball are at most ``diameter = 2 * radius`` apart.
    """

    manifold: Manifold
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractError(f"ball radius must be positive, got {self.radius}")

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, atol=1e-12):
        return self.manifold.dist(self.center, x) <= self.radius * (1 + atol) + atol

    def project(self, x):
        return project_ball(self, x)


def project_ball(ball, x):
    """Metric projection of ``x`` onto ``ball``.

    Points inside the ball are returned unchanged; points outside are
    pulled back along the geodesic from the center.
    """
    M = ball.manifold
    r = M.dist(ball.center, x)
    if r <= ball.radius:
        return x
    return M.exp(ball.center, (ball.radius / r) * M.log(ball.center, x))
