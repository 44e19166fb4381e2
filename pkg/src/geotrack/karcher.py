"""Online Karcher-mean tracking on SPD matrices.

At every half-step ``t`` the cost is ``f_t(X) = (1/2N) sum_i dist(X, A_{t,i})^2``.
Measurements drift along fixed geodesics, ``A_{t,i} = Exp_{B_i}(phi(t/2) D_i)``,
with unit-speed directions ``D_i`` and either a constant speed
(``phi(s) = omega s``) or a decaying one (``phi(s) = 2 omega sqrt(s + 1)``,
whose path length grows like ``sqrt(T)``).
"""

import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .bounds import ProblemConstants, delta_bound, regret_upper_bounds
from .errors import CalibrationError, ContractError, SolverError
from .manifolds.base import GeodesicBall
from .manifolds.spd import (
    SPD,
    _half_powers,
    karcher_cost,
    karcher_cost_many,
    karcher_grad,
    karcher_grad_norm_many,
    spd_exp,
    spd_exp_many,
    spd_log,
    spd_pair_distances,
    sym,
)
from .oracle import TimeVaryingObjective
from .optimizer import StepSchedule, run
from .rng import make_rng

log = logging.getLogger(__name__)

DRIFT_KINDS = ("constant", "decaying")


@dataclass(frozen=True)
class Drift:
    """Drift profile; ``omega=None`` asks the study to calibrate it."""

    kind: str = "constant"
    omega: Optional[float] = None

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ContractError(f"drift kind must be one of {DRIFT_KINDS}, got {self.kind!r}")
        if self.omega is not None and self.omega < 0:
            raise ContractError("omega must be nonnegative")

    def phi(self, s, omega=None):
        w = self.omega if omega is None else omega
        if w is None:
            raise ContractError("drift speed not set")
        if self.kind == "constant":
            return w * s
        return 2 * w * math.sqrt(s + 1)


@dataclass(frozen=True)
class KarcherInstance:
    m: int = 3
    N: int = 10
    T: int = 2000
    drift: Drift = Drift()
    eigenvalue_range: tuple = (0.5, 2.0)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.eigenvalue_range
        if self.N < 1 or self.T < 1 or self.m < 1:
            raise ContractError("m, N and T must be >= 1")
        if not 0 < lo <= hi:
            raise ContractError("need 0 < lambda_min <= lambda_max")

    @property
    def d(self):
        return self.m * (self.m + 1) // 2


def study_constants(d, delta=1e-3, V=0.5, zeta=1.5, L=1.5, kappa=-0.5, R=1.0, G=1.0):
    """Constants of the SPD Karcher study: ``L = zeta = 1.5``, ``sigma = 1``."""
    return ProblemConstants(L=L, sigma=1.0, delta=delta, V=V, kappa=kappa, R=R, d=d, G=G, zeta=zeta)


def _random_rotation(m, rng):
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    return Q * np.sign(np.diag(R))


class KarcherObjective(TimeVaryingObjective):
    """Time-varying Karcher cost over drifting SPD measurements."""

    def __init__(self, base, directions, drift, omega, constants=None, horizon=None):
        self.base = np.asarray(base, dtype=float)
        self.directions = np.asarray(directions, dtype=float)
        self.drift = drift
        self.omega = float(omega)
        self.horizon = horizon
        N, m, _ = self.base.shape
        self.N, self.m = N, m
        super().__init__(SPD(m), self.value, constants=constants, grad=self._grad_at)
        self.matrices_at = lru_cache(maxsize=16384)(self._matrices_at)

    def _matrices_at(self, t):
        if t < 0 or int(t) != t:
            raise ContractError(f"half-step must be a nonnegative integer, got {t}")
        s = self.drift.phi(t / 2.0, self.omega)
        if s == 0.0:
            return self.base
        return spd_exp_many(self.base, s * self.directions)

    def value(self, t, X):
        return karcher_cost(X, self.matrices_at(t))

    def _grad_at(self, t, X):
        return karcher_grad(X, self.matrices_at(t))

    def with_omega(self, omega, constants=None):
        return KarcherObjective(
            self.base,
            self.directions,
            self.drift,
            omega,
            constants=self.constants if constants is None else constants,
            horizon=self.horizon,
        )

    def with_constants(self, constants):
        return KarcherObjective(
            self.base, self.directions, self.drift, self.omega, constants, self.horizon
        )


def generate_instance(inst, rng=None, constants=None):
    """Draw base matrices and drift directions for ``inst``.

    Base matrices are ``Q diag(lambda) Q^T`` with log-uniform eigenvalues and
    Haar-random rotations; directions have unit Riemannian norm at their
    base. ``inst.drift.omega=None`` yields a frozen (``omega = 0``) objective
    to be calibrated later.
    """
    rng = make_rng(inst.seed if rng is None else rng)
    lo, hi = inst.eigenvalue_range
    m, N = inst.m, inst.N
    base = np.empty((N, m, m))
    dirs = np.empty((N, m, m))
    for i in range(N):
        lam = np.exp(rng.uniform(np.log(lo), np.log(hi), size=m))
        Q = _random_rotation(m, rng)
        base[i] = sym((Q * lam) @ Q.T)
        S = sym(rng.standard_normal((m, m)))
        S /= np.linalg.norm(S)
        Bh, _ = _half_powers(base[i])
        dirs[i] = sym(Bh @ S @ Bh)
    omega = inst.drift.omega or 0.0
    return KarcherObjective(base, dirs, inst.drift, omega, constants=constants, horizon=inst.T)


# -- ground truth -------------------------------------------------------------


def _karcher_descent(X, As, step, tol, max_iter):
    """Riemannian gradient descent ``X <- Exp_X(-step grad f)``.

    In whitened coordinates ``W_i = X^-1/2 A_i X^-1/2`` the gradient is
    ``-X^1/2 mean(log W_i) X^1/2`` and its norm is ``||mean log W_i||_F``.
    """
    for it in range(max_iter):
        w, Q = np.linalg.eigh(X)
        s = np.sqrt(w)
        Xh = (Q * s) @ Q.T
        Xih = (Q / s) @ Q.T
        lw, lQ = np.linalg.eigh(sym(Xih @ As @ Xih))
        S = np.mean((lQ * np.log(lw)[:, None, :]) @ np.swapaxes(lQ, -1, -2), axis=0)
        S = sym(S)
        if np.linalg.norm(S) <= tol:
            return X, it
        ew, eQ = np.linalg.eigh(step * S)
        X = sym(Xh @ ((eQ * np.exp(ew)) @ eQ.T) @ Xh)
    raise SolverError(f"Karcher descent did not reach tol={tol} in {max_iter} iterations")


def true_minimizer(obj, t, warm_start, step=None, tol=1e-10, max_iter=100_000):
    """Karcher mean of the measurements at half-step ``t``.

    Fixed step ``1/L`` (``L`` from the objective's constants, else 1), run
    until the Riemannian gradient norm is at most ``tol``.
    """
    if step is None:
        L = obj.constants.L if obj.constants is not None else 1.0
        step = 1.0 / L
    X, _ = _karcher_descent(np.asarray(warm_start, float), obj.matrices_at(t), step, tol, max_iter)
    return X


def track_minimizers(obj, n_half_steps, warm_start=None, **kw):
    """Minimisers at half-steps ``0 .. n_half_steps - 1``, each warm-started
    from a geodesic extrapolation of the previous two."""
    x = obj.base[0] if warm_start is None else warm_start
    out = []
    for t in range(n_half_steps):
        if len(out) >= 2:
            guess = spd_exp(out[-1], -spd_log(out[-1], out[-2]))
        else:
            guess = x
        x = true_minimizer(obj, t, guess, **kw)
        out.append(x)
    return out


def karcher_mean(As, warm_start=None, step=1.0, tol=1e-12, max_iter=100_000):
    As = np.asarray(As, dtype=float)
    X = np.mean(As, axis=0) if warm_start is None else warm_start
    X, _ = _karcher_descent(X, As, step, tol, max_iter)
    return X


# -- calibration ----------------------------------------------------------------


def _ball_geometry(obj):
    """Centre (Karcher mean of the base matrices) and base spread."""
    center = karcher_mean(obj.base)
    spread = max(obj.manifold.dist(center, B) for B in obj.base)
    return center, spread


def _radius(obj, spread, omega, horizon):
    return spread + obj.drift.phi((2 * horizon + 3) / 2.0, omega) + 1e-9


def domain_ball(obj, horizon=None):
    """Ball centred at the Karcher mean of the base matrices whose radius
    covers every base matrix plus the full drift over the horizon."""
    T = obj.horizon if horizon is None else horizon
    center, spread = _ball_geometry(obj)
    return GeodesicBall(obj.manifold, center, _radius(obj, spread, obj.omega, T))


def _probe_layout(ball_center, n, rng, manifold):
    """Unit directions at the centre and radial fractions in ``[0, 1]``."""
    dirs = []
    for _ in range(n):
        u = manifold.random_tangent(ball_center, rng)
        dirs.append(u / manifold.norm(ball_center, u))
    return np.array(dirs), rng.uniform(0, 1, size=n)


def _place_probes(center, dirs, fractions, radius):
    return spd_exp_many(np.broadcast_to(center, dirs.shape), (fractions * radius)[:, None, None] * dirs)


def probe_points(ball, n, rng):
    """Points spread through ``ball``: geodesics from the center in random
    directions, at uniformly random fractions of the radius."""
    dirs, frac = _probe_layout(ball.center, n, rng, ball.manifold)
    return _place_probes(ball.center, dirs, frac, ball.radius)


def _probe_steps(obj, n_steps):
    T = obj.horizon or 1
    return np.unique(np.linspace(0, 2 * T, n_steps).round().astype(int))


def empirical_delta(obj, points, steps):
    """``max |f_t(X) - f_{t+1}(X)|`` over the probe points and half-steps."""
    P = np.asarray(points)
    w, Q = np.linalg.eigh(P)
    Pih = (Q / np.sqrt(w)[:, None, :]) @ np.swapaxes(Q, -1, -2)
    Pih = Pih[:, None]

    def costs(t):
        A = obj.matrices_at(int(t))[None]
        lw = np.linalg.eigvalsh(sym(Pih @ A @ Pih))
        return 0.5 * np.mean(np.sum(np.log(lw) ** 2, axis=-1), axis=1)

    return max(float(np.max(np.abs(costs(t) - costs(t + 1)))) for t in steps)


CALIBRATION_WINDOW = (0.8, 0.95)


def calibrate_omega(obj, delta_target, probes=200, rng=None, steps=16, ball=None, max_steps=60):
    """Drift speed whose empirical variation lands in ``[0.8, 0.95] * delta_target``.

    The variation is maximised over probe points and evenly spaced
    half-steps. By default the probes fill the domain ball implied by the
    trial speed itself (fixed directions and radial fractions, rescaled),
    so the result is self-consistent with :func:`domain_ball`; passing
    ``ball`` freezes them instead. A linear first guess is refined by
    bracketing and bisection, at most ``max_steps`` trials in total.
    """
    if not delta_target > 0:
        raise ContractError("delta_target must be positive")
    rng = make_rng(rng)
    lo_frac, hi_frac = CALIBRATION_WINDOW
    ts = _probe_steps(obj, steps)
    T = obj.horizon or 1

    if ball is not None:
        pts = probe_points(ball, probes, rng)

        def points(w):
            return pts

    else:
        center, spread = _ball_geometry(obj)
        dirs, frac = _probe_layout(center, probes, rng, obj.manifold)

        def points(w):
            return _place_probes(center, dirs, frac, _radius(obj, spread, w, T))

    def measure(w):
        return empirical_delta(obj.with_omega(w), points(w), ts)

    lo, hi = 0.0, None
    w = delta_target
    for n in range(max_steps):
        d = measure(w)
        if lo_frac * delta_target <= d <= hi_frac * delta_target:
            return w
        if d < lo_frac * delta_target:
            lo = w
        else:
            hi = w
        if n == 0 and d > 0:
            # the variation is close to linear in the speed
            w = w * 0.5 * (lo_frac + hi_frac) * delta_target / d
        elif hi is None:
            w = 2 * w
        else:
            w = 0.5 * (lo + hi)
    raise CalibrationError(f"no drift speed found for delta={delta_target} in {max_steps} steps")


# -- metrics --------------------------------------------------------------------


@dataclass
class MetricsTrace:
    """Per-iteration errors and cumulative regrets of one run.

    Row ``k`` uses iterates ``x_k`` and ``x_{k+1}`` and the minimiser at
    half-step ``2k + 1``. ``VT[k]`` sums minimiser movement over rows ``< k``.
    """

    e: np.ndarray
    ebar: np.ndarray
    loss_track: np.ndarray
    loss_est: np.ndarray
    reg_track: np.ndarray
    reg_est: np.ndarray
    VT: np.ndarray
    grad_norm: np.ndarray
    delta_hat: float
    V_hat: float


def evaluate_run(record, objective, minimizers):
    K = len(record.iterates) - 1
    if len(minimizers) < 2 * K:
        raise ContractError(f"need minimisers for {2 * K} half-steps, got {len(minimizers)}")
    xs = np.asarray(record.iterates)
    mins = np.asarray(minimizers[: 2 * K])
    rows = np.arange(K)
    odd = mins[1::2]  # x*_{2k+1}
    A_odd = np.array([objective.matrices_at(2 * k + 1) for k in rows])
    A_even = np.array([objective.matrices_at(2 * k) for k in rows])

    fstar = karcher_cost_many(odd, A_odd)
    f_pre = karcher_cost_many(xs[:-1], A_odd)
    f_post = karcher_cost_many(xs[1:], A_odd)
    lt = np.maximum(f_pre - fstar, 0.0)
    le = np.maximum(f_post - fstar, 0.0)
    gn = np.maximum(
        karcher_grad_norm_many(xs[:-1], A_odd), karcher_grad_norm_many(xs[1:], A_odd)
    )
    dh = float(np.max(np.abs(karcher_cost_many(xs[:-1], A_even) - f_pre)))

    steps = spd_pair_distances(odd[:-1], odd[1:]) if K > 1 else np.zeros(0)
    vh = float(np.max(spd_pair_distances(mins[1:-1:2], mins[2::2]))) if K > 1 else 0.0
    return MetricsTrace(
        e=spd_pair_distances(xs[:-1], odd),
        ebar=spd_pair_distances(xs[1:], odd),
        loss_track=lt,
        loss_est=le,
        reg_track=np.cumsum(lt),
        reg_est=np.cumsum(le),
        VT=np.concatenate([[0.0], np.cumsum(steps)]),
        grad_norm=gn,
        delta_hat=dh,
        V_hat=vh,
    )


# -- multi-run study ----------------------------------------------------------------


@dataclass
class ArmTrace:
    """Run-averaged metrics for one oracle arm (rows ``k = 0..T``)."""

    name: str
    e_mean: np.ndarray
    e_stderr: np.ndarray
    ebar_mean: np.ndarray
    reg_track: np.ndarray
    reg_est: np.ndarray
    VT_cum: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    G_cummax: np.ndarray
    runs: list = field(default_factory=list, repr=False)

    @property
    def k(self):
        return np.arange(len(self.e_mean))

    def tail_mean(self, fraction=0.1):
        n = max(1, int(round(fraction * len(self.e_mean))))
        return float(np.mean(self.e_mean[-n:]))


@dataclass
class AveragedTrace:
    arms: dict
    constants: list
    omegas: list
    flagged: list
    Delta: Optional[float]

    def __getitem__(self, name):
        return self.arms[name]


def _resolve_schedule(schedule, constants):
    return schedule if isinstance(schedule, StepSchedule) else schedule(constants)


def initial_point(ball, rng, fraction=0.5):
    """Point at ``fraction * radius`` from the ball centre in a random direction."""
    M = ball.manifold
    u = M.random_tangent(ball.center, rng)
    u /= M.norm(ball.center, u)
    return M.exp(ball.center, fraction * ball.radius * u)


def _study_run(inst, schedule, run_index, seed, constants, arms, probes):
    rng = make_rng(seed, run_index)
    obj = generate_instance(inst, rng)
    if inst.drift.omega is None:
        omega = calibrate_omega(obj, constants.delta, probes=probes, rng=rng)
    else:
        omega = inst.drift.omega
    obj = obj.with_omega(omega)
    ball = domain_ball(obj)
    c = constants.replace(R=ball.diameter)
    obj = obj.with_constants(c)
    sched = _resolve_schedule(schedule, c)
    x0 = initial_point(ball, rng)
    K = inst.T + 1
    mins = track_minimizers(obj, 2 * K, warm_start=ball.center)
    run_seed = int(rng.integers(2**63))
    out = {}
    for arm in arms:
        rec = run(obj, x0, ball, sched, K, rng=run_seed, oracle=arm)
        met = evaluate_run(rec, obj, mins)
        out[arm] = (met, rec.params_used)
    return out, c, omega


def _threads():
    try:
        return max(1, int(os.environ.get("GEOTRACK_THREADS", "1")))
    except ValueError:
        return 1


def averaged_study(
    inst,
    schedule,
    runs,
    seed=0,
    constants=None,
    arms=("zeroth", "first"),
    probes=200,
    workers=None,
):
    """Run ``runs`` independent instances and average the metrics pointwise.

    ``schedule`` is a :class:`StepSchedule` or a callable building one from the
    per-run :class:`ProblemConstants` (whose ``R`` is the domain diameter).
    Run ``i`` uses the random substream ``(seed, i)``. Runs whose empirical
    variation or minimiser drift exceeds the declared ``delta`` / ``V`` are
    listed in ``flagged`` and trigger a warning.
    """
    if runs < 1:
        raise ContractError("runs must be >= 1")
    constants = study_constants(inst.d) if constants is None else constants
    workers = _threads() if workers is None else workers
    jobs = [(inst, schedule, i, seed, constants, arms, probes) for i in range(runs)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, runs)) as ex:
            results = list(ex.map(_study_run, *zip(*jobs)))
    else:
        results = [_study_run(*j) for j in jobs]

    flagged = []
    for i, (res, c, _) in enumerate(results):
        for met, _params in res.values():
            if met.delta_hat > c.delta or met.V_hat > c.V:
                flagged.append(i)
                break
    if flagged:
        warnings.warn(f"runs {flagged} violate the declared delta/V bounds")

    out = {}
    for arm in arms:
        mets = [res[arm][0] for res, _, _ in results]
        params = results[0][0][arm][1]
        E = np.array([m.e for m in mets])
        K = E.shape[1]
        out[arm] = ArmTrace(
            name=arm,
            e_mean=E.mean(axis=0),
            e_stderr=(E.std(axis=0, ddof=1) / math.sqrt(runs)) if runs > 1 else np.zeros(K),
            ebar_mean=np.mean([m.ebar for m in mets], axis=0),
            reg_track=np.mean([m.reg_track for m in mets], axis=0),
            reg_est=np.mean([m.reg_est for m in mets], axis=0),
            VT_cum=np.mean([m.VT for m in mets], axis=0),
            alpha=np.array([p.alpha for p in params[:K]]),
            eta=np.array([p.eta if arm == "zeroth" else 0.0 for p in params[:K]]),
            G_cummax=np.maximum.accumulate(np.max([m.grad_norm for m in mets], axis=0)),
            runs=mets,
        )
    cs = [c for _, c, _ in results]
    Delta = None
    s0 = _resolve_schedule(schedule, cs[0])
    if s0.kind in ("constant", "optimal"):
        p = s0.params_at(0)
        Delta = delta_bound(cs[0], p.alpha, p.eta).Delta
    return AveragedTrace(
        arms=out,
        constants=cs,
        omegas=[w for _, _, w in results],
        flagged=flagged,
        Delta=Delta,
    )


@dataclass(frozen=True)
class RegretCheckpoint:
    T: int
    reg_track: float
    reg_est: float
    bound_track: float
    bound_est: float
    VT: float
    G: float


def regret_checkpoints(trace, schedule, horizons, arm="zeroth"):
    """Measured regret at each horizon next to the doubling-schedule bound.

    The bound is evaluated with the averaged ``e_0, e_T, ebar_0, ebar_T`` and
    ``V_T`` of the trace, ``rho`` from the schedule, and ``G`` set to the
    largest gradient norm met along the trajectories up to ``T``.
    """
    a = trace[arm]
    c0 = trace.constants[0]
    out = []
    for T in horizons:
        if T >= len(a.e_mean):
            raise ContractError(f"horizon {T} exceeds the trace length {len(a.e_mean) - 1}")
        c = c0.replace(G=float(a.G_cummax[T]))
        sched = _resolve_schedule(schedule, c)
        r = [sched.rho_at(k) for k in (0, 1, T, T + 1)]
        b = regret_upper_bounds(
            c,
            T,
            rho0=r[0],
            rho1=r[1],
            rhoT=r[2],
            rhoT1=r[3],
            e0=float(a.e_mean[0]),
            eT=float(a.e_mean[T]),
            ebar0=float(a.ebar_mean[0]),
            ebarT=float(a.ebar_mean[T]),
            VT=float(a.VT_cum[T]),
            cbar=getattr(sched, "cbar", 1.0),
        )
        out.append(
            RegretCheckpoint(
                T=T,
                reg_track=float(a.reg_track[T - 1]),
                reg_est=float(a.reg_est[T - 1]),
                bound_track=b.track,
                bound_est=b.est,
                VT=float(a.VT_cum[T]),
                G=c.G,
            )
        )
    return out
