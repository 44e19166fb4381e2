"""Self-checking suites: oracle bounds by Monte Carlo and geometric identities
by random fuzzing. Each suite returns a :class:`SuiteResult`."""

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import ProblemConstants, optimal_eta, zeta
from .manifolds.base import GeodesicBall
from .oracle import offset_quadratic, verify_oracle_bounds
from .rng import make_rng

GEOMETRY_TOL = 1e-8
TRIANGLE_SLACK = 1e-6
REFERENCE_DELTA = 1e-3  # delta used to pick eta-bar when the tested delta is 0


@dataclass
class SuiteResult:
    name: str
    checked: int
    violations: int
    worst: float
    details: list = field(default_factory=list)

    @property
    def passed(self):
        return self.violations == 0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.violations}/{self.checked} violations, worst {self.worst:.3g}"


def _spread_points(manifold, rng, max_step=3.0):
    """A random point and a second one at a random distance up to ``max_step``."""
    x = manifold.random_point(rng)
    v = manifold.random_tangent(x, rng)
    v *= rng.uniform(0, max_step) / max(manifold.norm(x, v), 1e-300)
    return x, manifold.exp(x, v)


def oracle_suite(
    samples=100_000,
    dims=(2, 6),
    deltas=(0.0, REFERENCE_DELTA),
    etas=("bar", 0.1),
    L=1.5,
    sigma=0.5,
    L_factor=1.0,
    at_minimizer=False,
    rng=None,
):
    """Bias and second-moment bounds of the two-point oracle on quadratics.

    Each configuration uses ``f_t(x) = (L/2)||x||^2 + delta (t mod 2)``
    evaluated at a point at distance 1 from the minimiser (or at the
    minimiser itself). The bounds are evaluated with ``L_factor * L``, so
    ``L_factor < 1`` is a negative control. ``eta="bar"`` uses the
    Delta-optimal precision for the configuration's ``delta`` (or for
    ``REFERENCE_DELTA`` when ``delta = 0``).
    """
    rng = make_rng(rng)
    worst = -math.inf
    fails = 0
    details = []
    for d in dims:
        for delta in deltas:
            c = ProblemConstants(L=L, sigma=sigma, delta=delta, V=0.5, kappa=0.0, R=10.0, d=d)
            declared = c.replace(L=L_factor * L)
            for eta in etas:
                if eta == "bar":
                    eta = optimal_eta(c.replace(delta=delta or REFERENCE_DELTA))
                obj = offset_quadratic(d, np.zeros(d), delta, L=L, constants=c)
                x = np.zeros(d)
                if not at_minimizer:
                    x = rng.standard_normal(d)
                    x /= np.linalg.norm(x)
                rep = verify_oracle_bounds(obj, x, eta, samples, rng, constants=declared)
                fails += not rep.passed
                worst = max(
                    worst,
                    rep.bias - rep.bias_bound - 3 * rep.bias_se,
                    rep.second_moment - rep.second_moment_bound - 3 * rep.second_moment_se,
                )
                details.append(((d, delta, eta), rep))
    return SuiteResult("oracle-bounds", len(details), fails, worst, details)


def negative_control_suite(samples=100_000, rng=None):
    """Oracle suite with ``L`` understated by 2x; expected to FAIL.

    At the minimiser with ``delta = 0`` the true second moment is
    ``(L eta / 2)^2 d (d+2)(d+4)``, which beats the understated bound
    ``(L eta)^2 (d+6)^3 / 8`` only once ``d`` is about 15, so the control
    runs at ``d = 24``.
    """
    return oracle_suite(
        samples=samples,
        dims=(24,),
        deltas=(0.0,),
        etas=(0.1,),
        L_factor=0.5,
        at_minimizer=True,
        rng=rng,
    )


def triangle_suite(manifold, samples=10_000, rng=None, slack=TRIANGLE_SLACK):
    """``a^2 <= zeta(kappa, c) b^2 + c^2 - 2 b c cos A`` on random triangles,
    with the angle ``A`` measured at one vertex through the log map."""
    rng = make_rng(rng)
    M = manifold
    bad, worst = 0, -math.inf
    for _ in range(samples):
        x, y = _spread_points(M, rng)
        w = M.random_tangent(x, rng)
        z = M.exp(x, w * rng.uniform(0, 3.0) / max(M.norm(x, w), 1e-300))
        ly, lz = M.log(x, y), M.log(x, z)
        b, c = M.norm(x, ly), M.norm(x, lz)
        a = M.dist(y, z)
        rhs = zeta(M.kappa, c) * b * b + c * c - 2 * M.inner(x, ly, lz)
        excess = a * a - rhs
        worst = max(worst, excess)
        bad += excess > slack
    return SuiteResult("law-of-cosines", samples, bad, worst)


def projection_suite(manifold, samples=1000, rng=None):
    """Nonexpansiveness of the projection onto a geodesic ball."""
    rng = make_rng(rng)
    M = manifold
    bad, worst = 0, -math.inf
    for _ in range(samples):
        center, _ = _spread_points(M, rng)
        ball = GeodesicBall(M, center, rng.uniform(0.1, 2.0))
        x, y = _spread_points(M, rng, max_step=4.0)
        excess = M.dist(ball.project(x), ball.project(y)) - M.dist(x, y)
        worst = max(worst, excess)
        bad += excess > GEOMETRY_TOL
    return SuiteResult("projection-nonexpansive", samples, bad, worst)


def roundtrip_suite(manifold, samples=1000, rng=None, tol=GEOMETRY_TOL):
    """Relative error of ``Log_x(Exp_x(v))`` against ``v``."""
    rng = make_rng(rng)
    M = manifold
    bad, worst = 0, -math.inf
    for _ in range(samples):
        x = M.random_point(rng)
        v = M.random_tangent(x, rng)
        v *= rng.uniform(0.01, 3.0) / M.norm(x, v)
        err = M.norm(x, M.log(x, M.exp(x, v)) - v) / M.norm(x, v)
        worst = max(worst, err)
        bad += err > tol
    return SuiteResult("exp-log-roundtrip", samples, bad, worst)


def transport_suite(manifold, samples=1000, rng=None, tol=GEOMETRY_TOL):
    """Parallel transport preserves inner products (relative error)."""
    rng = make_rng(rng)
    M = manifold
    bad, worst = 0, -math.inf
    for _ in range(samples):
        x, y = _spread_points(M, rng)
        u, v = M.random_tangent(x, rng), M.random_tangent(x, rng)
        tu, tv = M.transport(x, y, u), M.transport(x, y, v)
        scale = M.norm(x, u) * M.norm(x, v)
        err = max(
            abs(M.inner(y, tu, tv) - M.inner(x, u, v)) / scale,
            abs(M.norm(y, tu) - M.norm(x, u)) / M.norm(x, u),
        )
        worst = max(worst, err)
        bad += err > tol
    return SuiteResult("transport-isometry", samples, bad, worst)


def geometry_suites(manifold, rng=None, triangles=10_000, samples=1000):
    rng = make_rng(rng)
    return [
        roundtrip_suite(manifold, samples, rng),
        transport_suite(manifold, samples, rng),
        projection_suite(manifold, samples, rng),
        triangle_suite(manifold, triangles, rng),
    ]
