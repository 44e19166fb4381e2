"""Acceptance criteria; each test prints one PASS/FAIL line."""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from geotrack.bounds import (
    ProblemConstants,
    complexity_K,
    delta_bound,
    optimal_alpha,
    optimal_eta,
    optimal_parameters,
)
from geotrack.karcher import (
    Drift,
    KarcherInstance,
    averaged_study,
    regret_checkpoints,
    study_constants,
)
from geotrack.manifolds import SPD
from geotrack.optimizer import make_doubling_schedule, optimal_schedule
from geotrack.verification import geometry_suites, negative_control_suite, oracle_suite


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def study(d, **kw):
    base = dict(L=1.5, sigma=1.0, delta=1e-3, V=0.5, kappa=-0.5, R=1.0, d=d, zeta=1.5)
    base.update(kw)
    return ProblemConstants(**base)


def test_criterion_01_optimal_eta(report):
    e3, e9 = optimal_eta(study(6)), optimal_eta(study(45))
    ok = abs(e3 - 0.0089) <= 2e-4 and abs(e9 - 0.005) <= 1e-4
    report(1, ok, f"eta_3={e3:.6f} (0.0089 +/- 2e-4), eta_9={e9:.6f} (0.005 +/- 1e-4)")


def test_criterion_02_delta_regression(report):
    d3 = delta_bound(study(6), 0.0074, 0.0089).Delta
    d9 = delta_bound(study(45), 0.0015, 0.005).Delta
    r3, r9 = abs(d3 / 543.73 - 1), abs(d9 / 2666 - 1)
    ok = r3 <= 5e-3 and r9 <= 5e-3
    report(2, ok, f"Delta_3={d3:.2f} (rel {r3:.2e}), Delta_9={d9:.1f} (rel {r9:.2e}); tol 0.5%")


def test_criterion_03_optimal_alpha(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for d, ref in ((6, 0.0074), (45, 0.0015)):
        c = study(d)
        opt = optimal_parameters(c, grid_points=10_000)
        a = optimal_alpha(c)
        h = c.alpha_max / 10_001
        # grid tolerance: Delta change over one grid cell at the grid minimiser
        tol = abs(delta_bound(c, min(opt.grid_alpha + h, c.alpha_max * (1 - 1e-12)), opt.eta).Delta - opt.grid_Delta)
        rel = abs(a / ref - 1)
        ok &= rel <= 0.05 and opt.Delta <= opt.grid_Delta + tol and not opt.used_grid_fallback
        parts.append(f"d={d}: alpha={a:.6f} (rel {rel:.3f}), Delta={opt.Delta:.4f} vs grid {opt.grid_Delta:.4f}")
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    report(3, ok, "; ".join(parts) + f"; {dt:.2f}s")


def test_criterion_04_oracle_certification(report):
    t0 = time.perf_counter()
    suite = oracle_suite(samples=100_000, dims=(2, 6), deltas=(0.0, 1e-3), etas=("bar", 0.1), rng=20244)
    control = negative_control_suite(samples=100_000, rng=20245)
    dt = time.perf_counter() - t0
    ok = suite.passed and not control.passed and dt < 30
    report(
        4,
        ok,
        f"{suite.checked - suite.violations}/{suite.checked} configs within bound + 3 SE; "
        f"L/2 control {'FAIL' if not control.passed else 'PASS'} as expected "
        f"({control.details[0][1].summary()}); {dt:.1f}s",
    )


def test_criterion_05_geometry(report):
    t0 = time.perf_counter()
    res = geometry_suites(SPD(3), rng=20246, triangles=10_000, samples=1000)
    dt = time.perf_counter() - t0
    ok = all(r.passed for r in res) and dt < 60
    report(5, ok, "; ".join(r.line() for r in res) + f"; {dt:.1f}s")


def test_criterion_06_karcher_tracking(report):
    t0 = time.perf_counter()
    inst = KarcherInstance(m=3, N=10, T=2000, drift=Drift("constant"))
    trace = averaged_study(inst, optimal_schedule, runs=20, seed=2024, constants=study_constants(6))
    dt = time.perf_counter() - t0
    z, f = trace["zeroth"].tail_mean(), trace["first"].tail_mean()
    V_max = max(m.V_hat for m in trace["zeroth"].runs)
    d_max = max(m.delta_hat for m in trace["zeroth"].runs)
    ok = math.isfinite(z) and z < trace.Delta and f < z and not trace.flagged and dt <= 300
    report(
        6,
        ok,
        f"tail e: zeroth {z:.4f} < Delta {trace.Delta:.2f}; first {f:.4f} < zeroth; "
        f"max delta_hat {d_max:.2e}, max V_hat {V_max:.2e}, flagged {trace.flagged}; {dt:.0f}s",
    )


def test_criterion_07_regret(report):
    t0 = time.perf_counter()
    inst = KarcherInstance(m=3, N=10, T=2000, drift=Drift("decaying"))

    def sched(c):
        return make_doubling_schedule(c, 1.0)

    trace = averaged_study(inst, sched, runs=10, seed=2024, arms=("zeroth",), constants=study_constants(6))
    rows = regret_checkpoints(trace, sched, [250, 500, 1000, 2000])
    dt = time.perf_counter() - t0
    per_T = [r.reg_track / r.T for r in rows]
    mono = all(b < a for a, b in zip(per_T, per_T[1:]))
    dominated = all(r.reg_track <= r.bound_track for r in rows)
    ok = mono and dominated and not trace.flagged and dt <= 300
    table = ", ".join(f"T={r.T}: Reg/T={r.reg_track / r.T:.4g} (bound {r.bound_track:.3g})" for r in rows)
    report(7, ok, f"{table}; V_T/T at 2000 = {rows[-1].VT / 2000:.2e}; {dt:.0f}s")


def test_criterion_08_schedule_feasibility(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst, bad = -math.inf, 0
    for _ in range(100):
        L = rng.uniform(0.5, 5)
        c = ProblemConstants(
            L=L,
            sigma=L * rng.uniform(0.05, 1),
            delta=10 ** rng.uniform(-5, -1),
            V=rng.uniform(0, 1),
            kappa=-rng.uniform(0, 2),
            R=rng.uniform(0.1, 5),
            d=int(rng.integers(1, 100)),
        )
        cbar = 10 ** rng.uniform(-1, 1)
        s = make_doubling_schedule(c, cbar, check_periods=12)
        for m in range(13):
            p = s.period(m)
            gap = p.D - cbar / math.sqrt(2**m)
            worst = max(worst, gap)
            bad += gap > 1e-12 or not s.rho_at(2**m - 1) < 1
    dt = time.perf_counter() - t0
    report(8, bad == 0 and dt < 5, f"1300 periods, {bad} violations, max D_k - cbar/sqrt(T_k) = {worst:.3g}; {dt:.2f}s")


def test_criterion_09_bounds_consistency(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    order_bad = 0
    for _ in range(1000):
        L = rng.uniform(0.2, 5)
        c = ProblemConstants(
            L=L,
            sigma=L * rng.uniform(0.01, 1),
            delta=10 ** rng.uniform(-6, -0.5),
            V=rng.uniform(0, 2),
            kappa=-rng.uniform(0, 3),
            R=rng.uniform(0.05, 10),
            d=int(rng.integers(1, 100)),
        )
        r = delta_bound(c, rng.uniform(1e-6, 1) * c.alpha_max, 10 ** rng.uniform(-4, 0))
        order_bad += not (r.theta2 > r.theta1 and 2 * r.rho > math.sqrt(2))

    # complexity: closed form against explicit iteration of the recursion
    reps, starts, eps, Vs = [], [], [], []
    for _ in range(1000):
        L = rng.uniform(0.5, 3)
        c = ProblemConstants(
            L=L,
            sigma=L * rng.uniform(0.5, 1),
            delta=10 ** rng.uniform(-5, -2),
            V=rng.uniform(0, 1),
            kappa=-rng.uniform(0, 1),
            R=rng.uniform(0.1, 2),
            d=int(rng.integers(1, 30)),
        )
        rep = delta_bound(c, rng.uniform(0.3, 0.9) * c.alpha_max, 10 ** rng.uniform(-3, -1))
        gap = rep.Delta * rng.uniform(0.01, 1)
        reps.append((c, rep))
        starts.append(rep.Delta + gap)
        eps.append(gap * rng.uniform(0.01, 0.9))
        Vs.append(c.V)
    rho = np.array([r.rho for _, r in reps])
    step = np.array([r.D + 2 * v for (_, r), v in zip(reps, Vs)])
    target = np.array([r.Delta for _, r in reps]) + np.array(eps)
    e = np.array(starts)
    K_iter = np.zeros(len(e), dtype=int)
    active = e > target
    k = 0
    while active.any():
        k += 1
        e = np.where(active, rho * e + step, e)
        K_iter[active] = k
        active = e > target
    K_closed = np.array([complexity_K(c, r, e0, ep).K for (c, r), e0, ep in zip(reps, starts, eps)])
    mismatch = int(np.sum(K_closed != K_iter))
    dt = time.perf_counter() - t0
    ok = order_bad == 0 and mismatch == 0 and dt < 5
    report(
        9,
        ok,
        f"theta2>theta1 and 2rho>sqrt2 violated in {order_bad}/1000; "
        f"complexity_K mismatches {mismatch}/1000 (K up to {K_iter.max()}); {dt:.2f}s",
    )


def test_criterion_10_determinism(report, tmp_path):
    t0 = time.perf_counter()
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        cmd = [sys.executable, "-m", "geotrack", "run", "--T", "150", "--runs", "2", "--seed", "77", "--out", str(out)]
        proc = subprocess.run(cmd, capture_output=True, text=True, env=dict(os.environ, GEOTRACK_THREADS="1"))
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in ("zeroth.csv", "first.csv"))
    dt = time.perf_counter() - t0
    report(10, same and dt < 60, f"two invocations with seed 77 give byte-identical CSVs: {same}; {dt:.1f}s")
