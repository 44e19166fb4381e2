"""Projected zeroth-order iterate and its step-size / precision schedules.

One iteration is ``x_{k+1} = P_X[ Exp_{x_k}(-alpha_k g_k) ]`` with ``g_k`` a
single two-point oracle draw.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

import numpy as np

from .bounds import noise_floor, optimal_parameters, rho
from .errors import ConfigurationError, ContractError, ScheduleError
from .manifolds.base import project_ball
from .oracle import estimate_gradient, first_order_sample
from .rng import make_rng


@dataclass(frozen=True)
class AlgorithmParams:
    alpha: float
    eta: float
    cbar: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "eta", "cbar"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ContractError(f"{name} must be positive and finite, got {v}")


class StepSchedule:
    """Maps an iteration index to the :class:`AlgorithmParams` used there."""

    kind = "constant"

    def params_at(self, k):
        raise NotImplementedError


class ConstantSchedule(StepSchedule):
    def __init__(self, params, kind="constant"):
        if kind not in ("constant", "optimal"):
            raise ContractError(f"unknown constant schedule kind {kind!r}")
        self.params = params
        self.kind = kind

    def __repr__(self):
        return f"ConstantSchedule({self.params}, kind={self.kind!r})"

    def params_at(self, k):
        return self.params


def constant_schedule(alpha, eta):
    return ConstantSchedule(AlgorithmParams(alpha, eta))


def optimal_schedule(c):
    """Constant schedule at the ``Delta``-minimising ``(alpha, eta)``."""
    opt = optimal_parameters(c)
    return ConstantSchedule(AlgorithmParams(opt.alpha, opt.eta), kind="optimal")


def period_of(k):
    """Doubling period containing iteration ``k``: returns ``(m, 2**m)`` with
    ``2**m - 1 <= k <= 2**(m+1) - 2``."""
    if k < 0:
        raise ContractError("iteration index must be nonnegative")
    m = (int(k) + 1).bit_length() - 1
    return m, 1 << m


@dataclass(frozen=True)
class PeriodParams:
    m: int
    T: int
    alpha: float
    eta: float
    eta_interval: tuple
    D: float


class DoublingSchedule(StepSchedule):
    """Piecewise-constant ``(alpha_k, eta_k)`` on periods of length ``2**m``
    chosen so that ``D_k <= cbar / sqrt(T_k)`` in every period.

    ``alpha`` takes 0.99 of the admissible upper limit and ``eta`` the
    midpoint of its admissible interval.
    """

    kind = "doubling"
    SAFETY = 0.99

    def __init__(self, c, cbar=1.0):
        if not cbar > 0:
            raise ContractError("cbar must be positive")
        self.c = c
        self.cbar = float(cbar)
        self._period = lru_cache(maxsize=None)(self._compute_period)

    def __repr__(self):
        return f"DoublingSchedule(cbar={self.cbar})"

    def _compute_period(self, m):
        c, cbar = self.c, self.cbar
        L, dl, d, z = c.L, c.delta, c.d, c.zeta_R
        Tk = float(2**m)
        amax = c.alpha_max

        if dl > 0:
            Abar = 4 * L**2 * dl**2 * z**2 * ((d + 4) ** 4 - d * (d + 6) ** 3)
            if abs(Abar) < 1e-30:
                raise ScheduleError(f"period {m}: alpha quadratic is degenerate", period=m)
            Bbar = -4 * L * dl * (d + 4) ** 2 * z * cbar**2 / Tk
            Cbar = cbar**4 / Tk**2
            disc = Bbar**2 - 4 * Abar * Cbar
            if disc < 0:
                raise ScheduleError(f"period {m}: no real alpha root", period=m)
            # smaller root, written to stay accurate for either sign of Abar
            y2 = 2 * Cbar / (-Bbar + math.sqrt(disc))
            alpha = self.SAFETY * min(math.sqrt(y2), amax)
        else:
            alpha = self.SAFETY * amax

        A = 0.5 * L**2 * (d + 6) ** 3 * z
        B = 2 * L * dl * (d + 4) ** 2 * z - cbar**2 / (alpha**2 * Tk)
        C = 2 * dl**2 * d * z
        disc = B * B - 4 * A * C
        if not B < 0 or disc < 0:
            raise ScheduleError(f"period {m}: no feasible eta after alpha choice", period=m)
        x1 = (-B + math.sqrt(disc)) / (2 * A)
        x2 = 2 * C / (-B + math.sqrt(disc))
        lo, hi = math.sqrt(x2), math.sqrt(x1)
        eta = 0.5 * (lo + hi)
        D = alpha * math.sqrt(noise_floor(c, eta) * z)
        if D > cbar / math.sqrt(Tk) + 1e-12:
            raise ScheduleError(f"period {m}: D_k={D} exceeds cbar/sqrt(T_k)", period=m)
        return PeriodParams(m=m, T=int(Tk), alpha=alpha, eta=eta, eta_interval=(lo, hi), D=D)

    def period(self, m):
        return self._period(m)

    def params_at(self, k):
        m, _ = period_of(k)
        p = self._period(m)
        return AlgorithmParams(p.alpha, p.eta, self.cbar)

    def rho_at(self, k):
        return rho(self.c, self.params_at(k).alpha)


def make_doubling_schedule(c, cbar=1.0, check_periods=0):
    """Build a doubling schedule; periods ``0..check_periods`` are built
    eagerly so infeasibility surfaces immediately."""
    s = DoublingSchedule(c, cbar)
    for m in range(check_periods + 1):
        s.period(m)
    return s


@dataclass
class RunRecord:
    iterates: List[np.ndarray]
    oracle_samples: list
    params_used: List[AlgorithmParams]
    seed: Optional[int]
    oracle: str = "zeroth"

    @property
    def T(self):
        return len(self.oracle_samples)


def step(x_k, g, alpha, ball):
    """``P_ball[ Exp_{x_k}(-alpha * g.value) ]``."""
    if not alpha > 0:
        raise ContractError(f"alpha must be positive, got {alpha}")
    if g.point is not x_k and not np.array_equal(g.point, x_k):
        raise ContractError("oracle sample is based at a different point")
    M = ball.manifold
    return project_ball(ball, M.exp(x_k, -alpha * g.value))


def _validate_schedule(obj, schedule):
    if schedule.kind in ("constant", "optimal") and obj.constants is not None:
        a = schedule.params_at(0).alpha
        amax = obj.constants.alpha_max
        if not 0 < a < amax:
            raise ConfigurationError(
                f"step size {a:g} outside the admissible interval (0, {amax:g})"
            )


def run(obj, x0, ball, schedule, T, rng=None, oracle="zeroth"):
    """Run ``T`` iterations from ``x0``.

    ``rng`` may be an integer seed (recorded in the result for replay) or a
    ``numpy.random.Generator``. With ``oracle="first"`` the exact gradient
    replaces the two-point estimate and no random numbers are drawn.
    """
    if int(T) != T or T < 1:
        raise ContractError(f"T must be a positive integer, got {T}")
    if oracle not in ("zeroth", "first"):
        raise ContractError(f"unknown oracle {oracle!r}")
    if not ball.contains(x0):
        raise ContractError("x0 must lie in the feasible ball")
    _validate_schedule(obj, schedule)
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = make_rng(rng)

    x = x0
    iterates, samples, used = [x0], [], []
    for k in range(int(T)):
        p = schedule.params_at(k)
        if oracle == "zeroth":
            g = estimate_gradient(obj, k, x, p.eta, gen)
        else:
            g = first_order_sample(obj, k, x)
        x = step(x, g, p.alpha, ball)
        iterates.append(x)
        samples.append(g)
        used.append(p)
    return RunRecord(iterates, samples, used, seed, oracle)
