"""Closed-form tracking-error and regret bounds, and the parameter rules
that minimise them.

Notation follows the usual zeroth-order literature: ``L`` smoothness,
``sigma`` strong convexity, ``delta`` bound on the change of the cost between
two consecutive half-steps, ``V`` bound on the minimiser drift, ``kappa``
curvature lower bound, ``R`` diameter of the feasible set, ``d`` intrinsic
dimension and ``G`` gradient bound.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ContractError, DegenerateInputError, DomainError

SQRT_T_CONSTANT = math.sqrt(2.0) / (math.sqrt(2.0) - 1.0)


def zeta(kappa, e):
    """Curvature distortion ``x / tanh(x)`` with ``x = e * sqrt(|kappa|)``.

    Continuously extended to 1 at ``x = 0``; always ``>= 1``.
    """
    if kappa > 0:
        raise DomainError(f"kappa must be <= 0, got {kappa}")
    if e < 0:
        raise DomainError(f"e must be >= 0, got {e}")
    x = e * math.sqrt(-kappa)
    if x < 1e-4:
        return 1.0 + x * x / 3.0
    return x / math.tanh(x)


def curvature_for_zeta(target, e):
    """The ``kappa <= 0`` for which ``zeta(kappa, e) == target``."""
    if target < 1 or e <= 0:
        raise DomainError("need target >= 1 and e > 0")
    if target == 1:
        return 0.0
    x = brentq(lambda s: s / math.tanh(s) - target, 1e-8, target + 1.0, xtol=1e-15)
    return -((x / e) ** 2)


@dataclass(frozen=True)
class ProblemConstants:
    """Problem constants entering every bound.

    ``zeta`` optionally pins the curvature factor used in place of
    ``zeta(kappa, R)``; this mirrors the common practice of bounding it
    numerically for a given data set.
    """

    L: float
    sigma: float
    delta: float
    V: float
    kappa: float
    R: float
    d: int
    G: float = 1.0
    zeta: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.sigma <= self.L):
            raise ContractError(f"need 0 < sigma <= L, got sigma={self.sigma}, L={self.L}")
        if self.delta < 0 or self.V < 0:
            raise ContractError("delta and V must be nonnegative")
        if self.kappa > 0:
            raise ContractError("kappa must be <= 0")
        if not self.R > 0:
            raise ContractError("R must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise ContractError("d must be a positive integer")
        if not self.G > 0:
            raise ContractError("G must be positive")
        if self.zeta is not None and self.zeta < 1:
            raise ContractError("zeta override must be >= 1")

    @property
    def zeta_R(self):
        return self.zeta if self.zeta is not None else zeta(self.kappa, self.R)

    @property
    def alpha_max(self):
        """Upper end of the admissible constant step-size interval."""
        return self.sigma / (2 * self.L**2 * (self.d + 4) * self.zeta_R)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class BoundReport:
    """Quantities of the asymptotic tracking bound for one ``(alpha, eta)``."""

    alpha: float
    eta: float
    zeta_R: float
    rho: float
    theta1: float
    theta2: float
    D: float
    Delta: float
    V: float = 0.0
    theta_bar: Optional[float] = None
    extras: dict = field(default_factory=dict)


class RegretBounds(NamedTuple):
    track: float
    est: float


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ContractError(f"{name} must be positive, got {value}")


def noise_floor(c, eta):
    """The eta-dependent part of the oracle second moment:
    ``(L^2 eta^2 / 2)(d+6)^3 + 2 L delta (d+4)^2 + (2 delta^2 / eta^2) d``."""
    L, d, dl = c.L, c.d, c.delta
    return 0.5 * L**2 * eta**2 * (d + 6) ** 3 + 2 * L * dl * (d + 4) ** 2 + 2 * dl**2 * d / eta**2


def bias_bound(c, eta):
    """Bound on ``|| E[g] - grad f ||`` for the two-point oracle."""
    _check_positive(eta=eta)
    return 0.5 * c.L * eta * (c.d + 3) ** 1.5 + c.delta / eta * math.sqrt(c.d)


def second_moment_bound(c, eta, grad_norm):
    """Bound on ``E ||g||^2`` for the two-point oracle."""
    _check_positive(eta=eta)
    if grad_norm < 0:
        raise ContractError("grad_norm must be nonnegative")
    return noise_floor(c, eta) + 2 * (c.d + 4) * grad_norm**2


def rho_squared(c, alpha, zeta_value=None):
    z = c.zeta_R if zeta_value is None else zeta_value
    return 2 * (c.d + 4) * c.L**2 * z * alpha**2 - c.sigma * alpha + 1


def rho(c, alpha):
    """Contraction factor of the expected tracking error for step ``alpha``."""
    return math.sqrt(rho_squared(c, alpha))


def theta1(c, alpha, eta):
    return (c.L * eta * (c.d + 3) ** 1.5 + 2 * c.delta * math.sqrt(c.d) / eta) / (
        2 * rho(c, alpha)
    )


def theta2(c, eta):
    return math.sqrt(noise_floor(c, eta) * c.zeta_R)


def psi(e, c, alpha, eta):
    """One-step bound on ``E[e_{k+1} | x_k]`` squared, before adding ``2V``.

    Uses the error-dependent curvature factor ``zeta(kappa, e)`` (or the
    pinned ``c.zeta`` when set).
    """
    _check_positive(alpha=alpha, eta=eta)
    z = c.zeta if c.zeta is not None else zeta(c.kappa, e)
    a = rho_squared(c, alpha, z)
    b = alpha * (c.L * eta * (c.d + 3) ** 1.5 + 2 * c.delta * math.sqrt(c.d) / eta)
    return a * e**2 + b * e + noise_floor(c, eta) * z * alpha**2


def delta_bound(c, alpha, eta):
    """Radius ``Delta = (D + 2V) / (1 - rho)`` of the asymptotic error ball."""
    _check_positive(alpha=alpha, eta=eta)
    if not alpha < c.alpha_max:
        raise DomainError(
            f"alpha={alpha:g} outside (0, {c.alpha_max:g}): rho would be >= 1"
        )
    r = rho(c, alpha)
    t1 = theta1(c, alpha, eta)
    t2 = theta2(c, eta)
    D = alpha * max(t1, t2)
    return BoundReport(
        alpha=alpha,
        eta=eta,
        zeta_R=c.zeta_R,
        rho=r,
        theta1=t1,
        theta2=t2,
        D=D,
        Delta=(D + 2 * c.V) / (1 - r),
        V=c.V,
    )


def optimal_eta(c):
    """Oracle precision minimising ``theta2`` (hence ``Delta``)."""
    if c.delta <= 0:
        raise DegenerateInputError(
            "optimal eta is 0 when delta = 0; pick any small eta instead"
        )
    return (4 * c.delta**2 * c.d / (c.L**2 * (c.d + 6) ** 3)) ** 0.25


def _delta_at(c, alpha, theta_bar):
    r = math.sqrt(rho_squared(c, alpha))
    return (alpha * theta_bar + 2 * c.V) / (1 - r)


@dataclass(frozen=True)
class OptimalParameters:
    eta: float
    alpha: float
    theta_bar: float
    Delta: float
    alpha_interval: tuple
    grid_alpha: float
    grid_Delta: float
    used_grid_fallback: bool


GRID_POINTS = 10_000


def optimal_parameters(c, grid_points=GRID_POINTS):
    """Step size and precision minimising ``Delta``.

    ``alpha`` is the root of the stationarity quadratic ``A a^2 + B a + C``
    inside ``(0, alpha_max)``; both roots are tried and the one with the
    smaller ``Delta`` wins. A uniform grid over the interval provides an
    independent cross-check and the fallback when no root qualifies.
    """
    eta = optimal_eta(c)
    tb = theta2(c, eta)
    Lz = c.L**2 * c.zeta_R * (c.d + 4)
    s, V = c.sigma, c.V
    A = (8 * V * Lz + s * tb) ** 2 - 8 * tb**2 * Lz
    B = -4 * V * (tb * s**2 + 8 * V * Lz * s + 8 * tb * Lz)
    C = (2 * s * V + 2 * tb) ** 2 - 4 * tb**2
    amax = c.alpha_max

    grid = np.linspace(0, amax, grid_points + 2)[1:-1]
    r = np.sqrt(2 * Lz * grid**2 - s * grid + 1)
    vals = (grid * tb + 2 * V) / (1 - r)
    i = int(np.argmin(vals))
    grid_alpha, grid_Delta = float(grid[i]), float(vals[i])

    candidates = []
    if abs(A) > 1e-300:
        disc = B * B - 4 * A * C
        if disc >= 0:
            sq = math.sqrt(disc)
            q = -0.5 * (B + math.copysign(sq, B))
            roots = [q / A] + ([C / q] if q != 0 else [])
            candidates = [a for a in roots if 0 < a < amax]
    elif B != 0:
        a = -C / B
        candidates = [a] if 0 < a < amax else []

    if candidates:
        alpha = min(candidates, key=lambda a: _delta_at(c, a, tb))
        fallback = False
    else:
        warnings.warn("no stationarity root in the admissible interval; using grid minimiser")
        alpha, fallback = grid_alpha, True
    return OptimalParameters(
        eta=eta,
        alpha=alpha,
        theta_bar=tb,
        Delta=_delta_at(c, alpha, tb),
        alpha_interval=(0.0, amax),
        grid_alpha=grid_alpha,
        grid_Delta=grid_Delta,
        used_grid_fallback=fallback,
    )


def optimal_alpha(c):
    return optimal_parameters(c).alpha


@dataclass(frozen=True)
class ComplexityBound:
    """Iterations needed for the expected error to enter ``Delta + epsilon``.

    ``K is None`` means the starting error is already within ``Delta``.
    ``log_ratio_estimate`` is the closed-form log-ratio estimate
    ``log[(D + (1-rho) eps) / ((1-rho) e0 - 2V)] / log(rho)``, kept for
    comparison; it does not follow from the recursion and is usually smaller.
    """

    K: Optional[int]
    log_ratio_estimate: Optional[float]

    @property
    def immediate(self):
        return self.K is None


def complexity_K(c, report, e0, epsilon):
    """Smallest ``K >= 1`` with ``rho^K (e0 - Delta) <= epsilon``, obtained by
    unrolling ``E e_{k+1} <= rho E e_k + D + 2V``."""
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    r, D, V = report.rho, report.D, c.V
    if not 0 < r < 1:
        raise DomainError(f"need 0 < rho < 1, got {r}")
    gap = (1 - r) * e0 - D - 2 * V
    lit_den = (1 - r) * e0 - 2 * V
    estimate = (
        math.log((D + (1 - r) * epsilon) / lit_den) / math.log(r) if lit_den > 0 else None
    )
    if gap <= 0:
        return ComplexityBound(K=None, log_ratio_estimate=estimate)
    excess = gap / (1 - r)  # e0 - Delta
    K = max(1, math.ceil(math.log(epsilon / excess) / math.log(r)))
    # snap to the exact envelope, guarding against log rounding
    while r**K * excess > epsilon:
        K += 1
    while K > 1 and r ** (K - 1) * excess <= epsilon:
        K -= 1
    return ComplexityBound(K=K, log_ratio_estimate=estimate)


def regret_upper_bounds(c, T, *, rho0, rho1, rhoT, rhoT1, e0, eT, ebar0, ebarT, VT, cbar=1.0):
    """Dynamic-regret bounds for the doubling schedule.

    The ``sqrt(T)`` term uses the positive constant ``sqrt(2) / (sqrt(2) - 1)``
    times ``cbar``.
    """
    if T < 1:
        raise ContractError("T must be >= 1")
    for name, r in (("rho0", rho0), ("rho1", rho1), ("rhoT", rhoT), ("rhoT1", rhoT1)):
        if not r < 1:
            raise DomainError(f"{name}={r} must be < 1")
    sqrt_term = cbar * SQRT_T_CONSTANT * math.sqrt(T)
    m_track = max(rho0, rhoT)
    m_est = max(rho1, rhoT1)
    track = c.G / (1 - m_track) * (e0 - rhoT * eT + sqrt_term + VT)
    est = c.G / (1 - m_est) * (ebar0 - rhoT1 * ebarT + sqrt_term + m_est * VT)
    return RegretBounds(track, est)
