import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geotrack.errors import ContractError
from geotrack.manifolds import Euclidean, GeodesicBall, SPD, project_ball, sample_tangent_gaussian
from geotrack.rng import make_rng

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_distance_examples(plane):
    assert plane.dist(np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(5.0)
    x = np.array([1.0, 2.0])
    assert plane.dist(x, x) == 0.0


def test_geodesic_is_straight_line():
    E = Euclidean(3)
    x = np.ones(3)
    y = x + np.array([1.0, 0, 0])
    assert E.dist(x, E.geodesic(x, y, 0.25)) == pytest.approx(0.25)


def test_exp_log_examples(plane):
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(plane.exp(x, np.array([0.0, -2.0])), [1.0, 0.0])
    np.testing.assert_array_equal(plane.exp(x, plane.zero_vector(x)), x)
    np.testing.assert_array_equal(plane.log(x, x), np.zeros(2))


def test_shape_mismatch_is_contract_error(plane):
    with pytest.raises(ContractError):
        plane.dist(np.zeros(2), np.zeros(3))
    with pytest.raises(ContractError):
        plane.inner(np.zeros(2), np.zeros(2), np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_distance_symmetry_and_log_norm(x, y):
    E = Euclidean(4)
    d = E.dist(x, y)
    assert d == pytest.approx(E.dist(y, x), rel=1e-12, abs=1e-12)
    assert d == pytest.approx(E.norm(x, E.log(x, y)), rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(E.exp(x, E.log(x, y)), y, atol=1e-12 * (1 + d))


def test_transport_identity_cases(plane, spd3, rng):
    x, y = np.array([1.0, 1.0]), np.array([-2.0, 5.0])
    v = np.array([0.3, -0.7])
    np.testing.assert_array_equal(plane.transport(x, y, v), v)
    X = spd3.random_point(rng)
    V = spd3.random_tangent(X, rng)
    np.testing.assert_allclose(spd3.transport(X, X, V), V, atol=1e-12)


def test_project_ball_examples(plane):
    ball = GeodesicBall(plane, np.zeros(2), 1.0)
    np.testing.assert_allclose(project_ball(ball, np.array([2.0, 0.0])), [1.0, 0.0])
    inside = np.array([0.2, -0.3])
    assert project_ball(ball, inside) is inside
    assert ball.diameter == 2.0


def test_projection_matches_radial_formula_and_is_nonexpansive(rng):
    E = Euclidean(3)
    c = rng.standard_normal(3)
    ball = GeodesicBall(E, c, 0.8)
    for _ in range(1000):
        x, y = c + 2 * rng.standard_normal(3), c + 2 * rng.standard_normal(3)
        px, py = ball.project(x), ball.project(y)
        # closed-form radial projection
        for z, pz in ((x, px), (y, py)):
            r = np.linalg.norm(z - c)
            ref = z if r <= 0.8 else c + 0.8 * (z - c) / r
            np.testing.assert_allclose(pz, ref, atol=1e-12)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12


def test_projection_idempotent_on_spd(spd3, rng):
    ball = GeodesicBall(spd3, spd3.random_point(rng), 0.5)
    for _ in range(50):
        P = ball.project(spd3.random_point(rng))
        assert spd3.dist(ball.center, P) <= 0.5 + 1e-10
        np.testing.assert_allclose(ball.project(P), P, atol=1e-10)


def test_ball_rejects_nonpositive_radius(plane):
    with pytest.raises(ContractError):
        GeodesicBall(plane, np.zeros(2), 0.0)


def test_infinite_ball_never_projects(plane):
    ball = GeodesicBall(plane, np.zeros(2), np.inf)
    x = np.array([1e6, -1e6])
    np.testing.assert_array_equal(ball.project(x), x)


def test_tangent_gaussian_moments(rng):
    E = Euclidean(5)
    x = np.zeros(5)
    n = 100_000
    U = np.array([sample_tangent_gaussian(E, x, rng) for _ in range(n)])
    assert np.all(np.abs(U.mean(axis=0)) <= 4 * np.sqrt(5 / n))
    assert np.mean(np.sum(U**2, axis=1)) == pytest.approx(5, rel=0.05)


def test_gaussian_direction_moments_against_known_values(rng):
    """Mean of ||u|| is at most sqrt(d); mean of ||u||^4 equals d(d+2) <= (d+4)^2."""
    d, n = 6, 100_000
    U = rng.standard_normal((n, d))
    r = np.linalg.norm(U, axis=1)
    se1 = r.std() / np.sqrt(n)
    assert r.mean() <= np.sqrt(d) + 3 * se1
    r4 = r**4
    assert r4.mean() == pytest.approx(d * (d + 2), rel=4 * r4.std() / np.sqrt(n) / (d * (d + 2)))
    assert r4.mean() <= (d + 4) ** 2


def test_rng_substreams_are_deterministic_and_distinct():
    a = make_rng(7, 0).standard_normal(4)
    b = make_rng(7, 0).standard_normal(4)
    c = make_rng(7, 1).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    g = np.random.default_rng(3)
    assert make_rng(g) is g


def test_spd_descriptor_dimensions():
    M = SPD(4)
    assert M.dim == 10 and M.ambient_dim == 16 and M.kappa == -0.5
    with pytest.raises(ContractError):
        SPD(3, kappa=0.1)
