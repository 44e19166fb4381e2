"""Time-varying objectives and the two-point zeroth-order gradient oracle.

Time is counted in integer half-steps ``t``: iteration ``k`` corresponds to
``t = 2k`` and the intermediate instant ``k + 1/2`` to ``t = 2k + 1``.
Objectives therefore never see fractional times.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bounds import bias_bound, second_moment_bound
from .errors import ContractError


class TimeVaryingObjective:
    """A family ``f_t`` of functions on ``manifold`` indexed by half-steps.

    Parameters
    ----------
    manifold : Manifold
    value : callable ``(t, x) -> float``
    constants : ProblemConstants, optional
        Declared smoothness / convexity / variation constants.
    grad : callable ``(t, x) -> tangent``, optional
        Riemannian gradient, when known in closed form.
    """

    def __init__(self, manifold, value, constants=None, grad=None):
        self.manifold = manifold
        self._value = value
        self._grad = grad
        self.constants = constants

    def __call__(self, t, x):
        return float(self._value(t, x))

    @property
    def has_grad(self):
        return self._grad is not None

    def grad(self, t, x):
        if self._grad is None:
            return finite_difference_grad(self, t, x)
        return self._grad(t, x)


def finite_difference_grad(obj, t, x, step=None):
    """Central differences along a metric-orthonormal tangent basis, with
    step ``1e-5 * (1 + ||x||)``."""
    M = obj.manifold
    x = np.asarray(x, dtype=float)
    h = 1e-5 * (1 + np.linalg.norm(x)) if step is None else step
    g = np.zeros(M.point_shape)
    for b in M.tangent_basis(x):
        g = g + (obj(t, M.exp(x, h * b)) - obj(t, M.exp(x, -h * b))) / (2 * h) * b
    return g


@dataclass(frozen=True)
class OracleSample:
    """One oracle draw at base point ``point``.

    ``value == (point_eval_kplus - point_eval_k) / eta * direction``.
    First-order samples carry ``eta = 0`` and ``direction = None``.
    """

    point: np.ndarray
    value: np.ndarray
    point_eval_k: float
    point_eval_kplus: float
    direction: Optional[np.ndarray]
    eta: float
    k: int


def estimate_gradient(obj, k, x, eta, rng, u=None):
    """Two-point estimate at iteration ``k``.

    Evaluates ``f`` at half-step ``2k`` at ``x`` and then at half-step
    ``2k + 1`` at ``Exp_x(eta u)``; exactly two evaluations, in that order.
    ``u`` defaults to a projected Gaussian draw from ``rng``.
    """
    if not eta > 0:
        raise ContractError(f"eta must be positive, got {eta}")
    if k < 0 or int(k) != k:
        raise ContractError(f"iteration index must be a nonnegative integer, got {k}")
    M = obj.manifold
    if u is None:
        u = M.random_tangent(x, rng)
    f_k = obj(2 * k, x)
    f_kp = obj(2 * k + 1, M.exp(x, eta * u))
    return OracleSample(
        point=x,
        value=((f_kp - f_k) / eta) * u,
        point_eval_k=f_k,
        point_eval_kplus=f_kp,
        direction=u,
        eta=eta,
        k=int(k),
    )


def first_order_sample(obj, k, x):
    """Exact-gradient stand-in for the oracle, using ``grad f`` at half-step ``2k``."""
    return OracleSample(
        point=x,
        value=obj.grad(2 * k, x),
        point_eval_k=float("nan"),
        point_eval_kplus=float("nan"),
        direction=None,
        eta=0.0,
        k=int(k),
    )


@dataclass(frozen=True)
class DiagnosticReport:
    bias: float
    bias_se: float
    bias_bound: float
    second_moment: float
    second_moment_se: float
    second_moment_bound: float
    grad_norm: float
    samples: int

    @property
    def bias_pass(self):
        return self.bias <= self.bias_bound + 3 * self.bias_se

    @property
    def second_moment_pass(self):
        return self.second_moment <= self.second_moment_bound + 3 * self.second_moment_se

    @property
    def passed(self):
        return self.bias_pass and self.second_moment_pass

    def summary(self):
        tag = "PASS" if self.passed else "FAIL"
        return (
            f"{tag}: bias {self.bias:.4g} (se {self.bias_se:.2g}) <= {self.bias_bound:.4g}; "
            f"E|g|^2 {self.second_moment:.4g} (se {self.second_moment_se:.2g}) "
            f"<= {self.second_moment_bound:.4g}"
        )


MIN_DIAGNOSTIC_SAMPLES = 1000


def verify_oracle_bounds(obj, x, eta, samples, rng, k=0, constants=None):
    """Monte-Carlo check of the oracle's bias and second-moment bounds at ``x``.

    The reference gradient is ``grad f`` at half-step ``2k + 1``. Each
    estimate passes when it does not exceed its bound by more than three
    standard errors. ``constants`` overrides ``obj.constants`` (used for
    negative controls).
    """
    if samples < MIN_DIAGNOSTIC_SAMPLES:
        raise ContractError(f"need at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {samples}")
    c = obj.constants if constants is None else constants
    if c is None:
        raise ContractError("objective declares no constants")
    g_ref = np.ravel(obj.grad(2 * k + 1, x))
    G = np.empty((samples, g_ref.size))
    for i in range(samples):
        G[i] = np.ravel(estimate_gradient(obj, k, x, eta, rng).value)
    mean = G.mean(axis=0)
    bias = float(np.linalg.norm(mean - g_ref))
    bias_se = float(np.sqrt(G.var(axis=0, ddof=1).sum() / samples))
    sq = np.einsum("ij,ij->i", G, G)
    grad_norm = float(np.linalg.norm(g_ref))
    return DiagnosticReport(
        bias=bias,
        bias_se=bias_se,
        bias_bound=bias_bound(c, eta),
        second_moment=float(sq.mean()),
        second_moment_se=float(sq.std(ddof=1) / np.sqrt(samples)),
        second_moment_bound=second_moment_bound(c, eta, grad_norm),
        grad_norm=grad_norm,
        samples=samples,
    )


def shifted_quadratic(n, center, shift, L=1.0, constants=None):
    """Euclidean ``f_t(x) = (L/2) ||x - a_t||^2`` with ``a_t = center`` at even
    half-steps and ``center + shift`` at odd ones.

    Picking ``shift`` orthogonal to ``x - center`` with
    ``||shift||^2 = 2 delta / L`` makes ``|f_{k+} (x) - f_k(x)| = delta``
    exactly at ``x``.
    """
    from .manifolds import Euclidean

    center = np.asarray(center, dtype=float)
    shift = np.asarray(shift, dtype=float)

    def anchor(t):
        return center + shift if t % 2 else center

    return TimeVaryingObjective(
        Euclidean(n),
        lambda t, x: 0.5 * L * float(np.sum((x - anchor(t)) ** 2)),
        constants=constants,
        grad=lambda t, x: L * (x - anchor(t)),
    )


def offset_quadratic(n, center, delta, L=1.0, constants=None):
    """Euclidean ``f_t(x) = (L/2) ||x - center||^2 + delta * (t mod 2)``.

    The variation ``|f_{k+}(x) - f_k(x)|`` equals ``delta`` at every point, so
    the declared ``delta`` is attained but never exceeded.
    """
    from .manifolds import Euclidean

    center = np.asarray(center, dtype=float)
    if delta < 0:
        raise ContractError("delta must be nonnegative")
    return TimeVaryingObjective(
        Euclidean(n),
        lambda t, x: 0.5 * L * float(np.sum((x - center) ** 2)) + delta * (t % 2),
        constants=constants,
        grad=lambda t, x: L * (x - center),
    )
