import math
import warnings

import numpy as np
import pytest

from geotrack.errors import CalibrationError, ContractError, SolverError
from geotrack.karcher import (
    Drift,
    KarcherInstance,
    averaged_study,
    calibrate_omega,
    domain_ball,
    empirical_delta,
    evaluate_run,
    generate_instance,
    karcher_mean,
    probe_points,
    study_constants,
    track_minimizers,
    true_minimizer,
)
from geotrack.manifolds import SPD
from geotrack.manifolds.spd import karcher_cost, karcher_grad
from geotrack.optimizer import RunRecord, constant_schedule, optimal_schedule, run

E = math.e


def test_instance_validation():
    with pytest.raises(ContractError):
        KarcherInstance(N=0)
    with pytest.raises(ContractError):
        KarcherInstance(T=0)
    with pytest.raises(ContractError):
        KarcherInstance(eigenvalue_range=(2.0, 1.0))
    with pytest.raises(ContractError):
        Drift("sideways")
    with pytest.raises(ContractError):
        Drift("constant", -1.0)


def test_drift_profiles():
    assert Drift("constant", 0.2).phi(3.0) == pytest.approx(0.6)
    assert Drift("decaying", 0.2).phi(3.0) == pytest.approx(0.8)


def test_generated_base_matrices(rng):
    inst = KarcherInstance(m=3, N=6, T=10, eigenvalue_range=(0.5, 2.0))
    obj = generate_instance(inst, rng)
    M = obj.manifold
    for B, D in zip(obj.base, obj.directions):
        w = np.linalg.eigvalsh(B)
        assert w.min() >= 0.5 - 1e-12 and w.max() <= 2.0 + 1e-12
        assert M.norm(B, D) == pytest.approx(1.0, rel=1e-12)


def test_measurements_follow_unit_speed_geodesics(rng):
    inst = KarcherInstance(N=4, T=10, drift=Drift("constant", 0.3))
    obj = generate_instance(inst, rng)
    M = obj.manifold
    for t in (1, 4, 7):
        for B, A in zip(obj.base, obj.matrices_at(t)):
            assert M.dist(B, A) == pytest.approx(0.3 * t / 2, rel=1e-9)


def test_frozen_drift_is_time_invariant(rng):
    inst = KarcherInstance(N=5, T=20, drift=Drift("constant", 0.0))
    obj = generate_instance(inst, rng)
    X = SPD(3).random_point(rng)
    assert obj(0, X) == obj(13, X)
    ball = domain_ball(obj)
    pts = probe_points(ball, 30, rng)
    assert empirical_delta(obj, pts, range(0, 40, 5)) == 0.0
    mins = track_minimizers(obj, 10)
    rec = RunRecord(iterates=[ball.center] * 5, oracle_samples=[], params_used=[], seed=None)
    met = evaluate_run(rec, obj, mins)
    assert met.VT[-1] == pytest.approx(0.0, abs=1e-9)
    assert met.delta_hat == 0.0


def test_objective_value_and_grad(rng):
    obj = generate_instance(KarcherInstance(N=3, T=5, drift=Drift("constant", 0.1)), rng)
    X = SPD(3).random_point(rng)
    As = obj.matrices_at(5)
    assert obj(5, X) == karcher_cost(X, As)
    np.testing.assert_array_equal(obj.grad(5, X), karcher_grad(X, As))
    with pytest.raises(ContractError):
        obj(-1, X)


def test_true_minimizer_single_matrix(rng):
    inst = KarcherInstance(N=1, T=5, drift=Drift("constant", 0.0))
    obj = generate_instance(inst, rng)
    X = true_minimizer(obj, 0, np.eye(3), max_iter=2)
    np.testing.assert_allclose(X, obj.base[0], atol=1e-10)


def test_two_point_mean_is_midpoint():
    As = np.array([np.eye(3), np.diag([E**2, 1, 1])])
    np.testing.assert_allclose(karcher_mean(As, warm_start=np.eye(3)), np.diag([E, 1, 1]), atol=1e-10)


def test_true_minimizer_certificate(rng):
    inst = KarcherInstance(N=10, T=5, drift=Drift("constant", 0.01))
    obj = generate_instance(inst, rng, constants=study_constants(6))
    M = obj.manifold
    X = true_minimizer(obj, 3, np.eye(3))
    As = obj.matrices_at(3)
    assert M.norm(X, karcher_grad(X, As)) <= 1e-10
    f = obj(3, X)
    for _ in range(100):
        Y = M.random_point(rng, scale=0.5)
        # strong convexity with sigma = 1 about the minimiser
        assert obj(3, Y) >= f + 0.5 * M.dist(X, Y) ** 2 - 1e-9


def test_true_minimizer_gives_up(rng):
    obj = generate_instance(KarcherInstance(N=10, T=5), rng)
    with pytest.raises(SolverError):
        true_minimizer(obj, 0, np.eye(3) * 5, max_iter=3)


def test_evaluate_run_clairvoyant(rng):
    obj = generate_instance(KarcherInstance(N=4, T=5, drift=Drift("constant", 0.05)), rng)
    mins = track_minimizers(obj, 12)
    xs = [mins[1]] + [mins[2 * k + 1] for k in range(1, 6)]
    # iterate k sits at the minimiser of half-step 2k+1
    rec = RunRecord(iterates=xs, oracle_samples=[], params_used=[], seed=None)
    met = evaluate_run(rec, obj, mins)
    np.testing.assert_allclose(met.e, 0.0, atol=1e-9)
    np.testing.assert_allclose(met.reg_track, 0.0, atol=1e-15)


def test_evaluate_run_single_step_by_hand(rng):
    obj = generate_instance(KarcherInstance(N=3, T=5, drift=Drift("constant", 0.2)), rng)
    M = obj.manifold
    mins = track_minimizers(obj, 2)
    x0, x1 = M.random_point(rng, 0.5), M.random_point(rng, 0.5)
    met = evaluate_run(RunRecord([x0, x1], [], [], None), obj, mins)
    assert met.e[0] == pytest.approx(M.dist(x0, mins[1]), rel=1e-10)
    assert met.ebar[0] == pytest.approx(M.dist(x1, mins[1]), rel=1e-10)
    assert met.reg_track[0] == pytest.approx(obj(1, x0) - obj(1, mins[1]), rel=1e-10)
    assert met.reg_est[0] == pytest.approx(obj(1, x1) - obj(1, mins[1]), rel=1e-10)
    assert met.delta_hat == pytest.approx(abs(obj(0, x0) - obj(1, x0)), rel=1e-10)
    assert met.V_hat == 0.0 and met.VT[0] == 0.0
    with pytest.raises(ContractError):
        evaluate_run(RunRecord([x0, x1, x0], [], [], None), obj, mins)


def test_evaluate_run_matches_unbatched_loop(rng):
    c = study_constants(6)
    obj = generate_instance(KarcherInstance(N=5, T=30, drift=Drift("constant", 0.01)), rng, constants=c)
    M = obj.manifold
    ball = domain_ball(obj)
    rec = run(obj, ball.center, ball, optimal_schedule(c), 30, rng=3)
    mins = track_minimizers(obj, 60, warm_start=ball.center)
    met = evaluate_run(rec, obj, mins)
    xs = rec.iterates
    e = [M.dist(xs[k], mins[2 * k + 1]) for k in range(30)]
    lt = np.cumsum([obj(2 * k + 1, xs[k]) - obj(2 * k + 1, mins[2 * k + 1]) for k in range(30)])
    vt = np.cumsum([0] + [M.dist(mins[2 * j + 1], mins[2 * j + 3]) for j in range(29)])
    np.testing.assert_allclose(met.e, e, rtol=1e-9)
    np.testing.assert_allclose(met.reg_track, lt, rtol=1e-8)
    np.testing.assert_allclose(met.VT, vt, rtol=1e-9, atol=1e-15)
    assert np.all(np.diff(met.reg_track) >= 0) and np.all(met.e >= 0)


def test_calibration_hits_window_and_scales(rng):
    obj = generate_instance(KarcherInstance(N=10, T=200), rng)
    w1 = calibrate_omega(obj, 1e-3, probes=100, rng=1)
    # on a frozen probe set and a short horizon (total drift small next to
    # the spread of the data) the variation is nearly linear in the speed
    short = generate_instance(KarcherInstance(N=10, T=10), rng)
    fixed = domain_ball(short.with_omega(0.01))
    a = calibrate_omega(short, 1e-3, probes=100, rng=1, ball=fixed)
    b = calibrate_omega(short, 2e-3, probes=100, rng=1, ball=fixed)
    assert b / a == pytest.approx(2.0, rel=0.1)
    # with the self-consistent ball, a larger speed also widens the domain
    w2 = calibrate_omega(obj, 2e-3, probes=100, rng=1)
    assert w1 < w2 < 2.2 * w1
    calibrated = obj.with_omega(w1)
    ball = domain_ball(calibrated)
    pts = probe_points(ball, 1000, np.random.default_rng(99))
    steps = np.linspace(0, 400, 16).astype(int)
    assert empirical_delta(calibrated, pts, steps) <= 1e-3


def test_calibration_failure(rng):
    obj = generate_instance(KarcherInstance(N=3, T=10), rng)
    with pytest.raises(CalibrationError):
        calibrate_omega(obj, 1e-3, probes=20, rng=0, max_steps=0)
    with pytest.raises(ContractError):
        calibrate_omega(obj, 0.0)


def test_domain_ball_covers_the_drift(rng):
    obj = generate_instance(KarcherInstance(N=4, T=50, drift=Drift("constant", 0.01)), rng)
    ball = domain_ball(obj)
    for t in (0, 50, 101):
        for A in obj.matrices_at(t):
            assert ball.contains(A)


def test_single_run_study_equals_evaluate_run():
    inst = KarcherInstance(N=4, T=30, drift=Drift("constant", 0.002))
    trace = averaged_study(inst, optimal_schedule, runs=1, seed=5)
    z = trace["zeroth"]
    assert len(z.e_mean) == 31
    np.testing.assert_array_equal(z.e_mean, z.runs[0].e)
    np.testing.assert_array_equal(z.reg_track, z.runs[0].reg_track)
    np.testing.assert_array_equal(z.e_stderr, 0.0)
    assert trace["first"].e_mean[0] == z.e_mean[0]


def test_study_is_seed_deterministic():
    inst = KarcherInstance(N=3, T=20)
    a = averaged_study(inst, optimal_schedule, runs=2, seed=11, probes=30)
    b = averaged_study(inst, optimal_schedule, runs=2, seed=11, probes=30)
    np.testing.assert_array_equal(a["zeroth"].e_mean, b["zeroth"].e_mean)
    assert a.omegas == b.omegas


def test_study_flags_violations():
    inst = KarcherInstance(N=3, T=20, drift=Drift("constant", 0.05))
    c = study_constants(6, V=1e-6)
    with pytest.warns(UserWarning, match="violate"):
        trace = averaged_study(inst, optimal_schedule, runs=2, seed=0, constants=c)
    assert trace.flagged == [0, 1]


def test_static_first_order_converges():
    inst = KarcherInstance(N=10, T=2000, drift=Drift("constant", 0.0))
    trace = averaged_study(inst, optimal_schedule, runs=1, seed=1, arms=("first",))
    assert trace["first"].tail_mean() <= 1e-6


@pytest.mark.slow
def test_decaying_drift_path_variation_is_sublinear():
    inst = KarcherInstance(N=10, T=1000, drift=Drift("decaying", 0.01))
    trace = averaged_study(inst, constant_schedule_factory, runs=1, seed=2, arms=("first",))
    vt = trace["first"].VT_cum
    ratios = [vt[T] / T for T in (125, 250, 500, 1000)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    # V_T ~ 2 omega (sqrt(T/2 + 1) - 1) along unit-speed-like paths
    assert vt[1000] < 0.05 * 1000 * 0.01


def constant_schedule_factory(c):
    return constant_schedule(0.5 * c.alpha_max, 0.01)


def _halving_iteration(e):
    hit = np.nonzero(e <= 0.5 * e[0])[0]
    return int(hit[0]) if hit.size else len(e)


@pytest.mark.slow
def test_smaller_problem_converges_sooner():
    ks = {}
    for m in (3, 9):
        inst = KarcherInstance(m=m, T=1500)
        tr = averaged_study(inst, optimal_schedule, runs=1, seed=4, arms=("zeroth",),
                            constants=study_constants(inst.d))
        ks[m] = _halving_iteration(tr["zeroth"].e_mean)
    assert ks[3] < ks[9]
