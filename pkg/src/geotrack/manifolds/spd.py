"""Symmetric positive-definite matrices with the affine-invariant metric.

All matrix functions go through one symmetric eigendecomposition. Inputs
whose smallest eigenvalue falls below ``1e-12 * lambda_max`` raise
:class:`~geotrack.errors.DomainError` instead of being clipped.

Functions ending in ``_many`` accept a stack of matrices with shape
``(N, m, m)`` and skip input validation; they back the Karcher-mean hot
loops.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DomainError
from .base import MEMBERSHIP_TOL, Manifold

EIG_FLOOR = 1e-12


def sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues in descending order and orthogonal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T

    def apply(self, func):
        """``Q func(Lambda) Q^T``."""
        Q = self.eigenvectors
        return sym((Q * func(self.eigenvalues)) @ Q.T)


def sym_eig(X, require_pd=False):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("matrix has non-finite entries")
    w, Q = np.linalg.eigh(sym(X))
    w, Q = w[::-1], Q[:, ::-1]
    if require_pd and not w[-1] > EIG_FLOOR * max(w[0], 0.0):
        raise DomainError(
            f"matrix is not positive definite (eigenvalues {w[-1]:.3e} .. {w[0]:.3e})"
        )
    return SymEig(w, Q)


def _pd_eig(X):
    return sym_eig(X, require_pd=True)


def _check_sym(V, name="tangent vector"):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ContractError(f"{name} must be a square matrix, got shape {V.shape}")
    if np.max(np.abs(V - V.T), initial=0.0) > MEMBERSHIP_TOL * max(1.0, np.abs(V).max()):
        raise ContractError(f"{name} is not symmetric")
    return sym(V)


def sqrtm(X):
    return _pd_eig(X).apply(np.sqrt)


def invsqrtm(X):
    return _pd_eig(X).apply(lambda w: 1.0 / np.sqrt(w))


def logm(X):
    return _pd_eig(X).apply(np.log)


def expm_sym(S):
    return sym_eig(S).apply(np.exp)


def _half_powers(X):
    e = _pd_eig(X)
    s = np.sqrt(e.eigenvalues)
    Q = e.eigenvectors
    return sym((Q * s) @ Q.T), sym((Q / s) @ Q.T)


def spd_inner(X, U, V):
    """``trace(X^-1 U X^-1 V)``."""
    U = _check_sym(U)
    V = _check_sym(V)
    Xinv = np.linalg.inv(_pd_eig(X).reconstruct())
    return float(np.sum((Xinv @ U) * (Xinv @ V).T))


def spd_norm(X, V):
    return float(np.sqrt(max(spd_inner(X, V, V), 0.0)))


def spd_distance(X, Y):
    """``|| log(X^-1/2 Y X^-1/2) ||_F``."""
    _pd_eig(Y)
    _, Xih = _half_powers(X)
    w = np.linalg.eigvalsh(sym(Xih @ Y @ Xih))
    if not w[0] > 0:
        raise DomainError("second argument is not positive definite")
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def spd_exp(X, V):
    """``X^1/2 expm(X^-1/2 V X^-1/2) X^1/2``."""
    V = _check_sym(V)
    Xh, Xih = _half_powers(X)
    return sym(Xh @ expm_sym(Xih @ V @ Xih) @ Xh)


def spd_log(X, Y):
    """``X^1/2 logm(X^-1/2 Y X^-1/2) X^1/2``."""
    _pd_eig(Y)
    Xh, Xih = _half_powers(X)
    return sym(Xh @ logm(sym(Xih @ Y @ Xih)) @ Xh)


def spd_transport(X, Y, V):
    """Parallel transport ``E V E^T`` with ``E = X^1/2 (X^-1/2 Y X^-1/2)^1/2 X^-1/2``."""
    V = _check_sym(V)
    _pd_eig(Y)
    Xh, Xih = _half_powers(X)
    E = Xh @ sqrtm(sym(Xih @ Y @ Xih)) @ Xih
    return sym(E @ V @ E.T)


def spd_sample_tangent(X, rng):
    """``(G + G^T) / 2`` with ``G`` standard normal: the ambient projection
    of a Gaussian onto the symmetric matrices."""
    m = np.shape(X)[0]
    return sym(rng.standard_normal((m, m)))


# -- batched kernels (no validation) -----------------------------------------


def _eigh_apply_many(S, func):
    w, Q = np.linalg.eigh(S)
    return (Q * func(w)[..., None, :]) @ np.swapaxes(Q, -1, -2)


def spd_distances_many(X, As):
    """Distances from ``X`` to each matrix in the stack ``As``."""
    _, Xih = _half_powers(X)
    w = np.linalg.eigvalsh(sym(Xih @ As @ Xih))
    if np.any(w <= 0):
        raise DomainError("stack contains a matrix that is not positive definite")
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def spd_logs_many(X, As):
    """``Log_X(A_i)`` for each ``A_i`` in the stack, shape ``(N, m, m)``."""
    Xh, Xih = _half_powers(X)
    return sym(Xh @ _eigh_apply_many(sym(Xih @ As @ Xih), np.log) @ Xh)


def spd_exp_many(Xs, Vs):
    """Exponential map applied pointwise along stacks ``Xs`` and ``Vs``."""
    w, Q = np.linalg.eigh(sym(Xs))
    s = np.sqrt(w)[..., None, :]
    Qt = np.swapaxes(Q, -1, -2)
    Xh = (Q * s) @ Qt
    Xih = (Q / s) @ Qt
    return sym(Xh @ _eigh_apply_many(sym(Xih @ Vs @ Xih), np.exp) @ Xh)


def _half_powers_many(Xs):
    w, Q = np.linalg.eigh(sym(Xs))
    if np.any(w <= EIG_FLOOR * w[..., -1:]):
        raise DomainError("stack contains a matrix that is not positive definite")
    s = np.sqrt(w)[..., None, :]
    Qt = np.swapaxes(Q, -1, -2)
    return (Q * s) @ Qt, (Q / s) @ Qt


def _whitened_logs_many(Xs, As):
    """``log(X_k^-1/2 A_{k,i} X_k^-1/2)`` for ``Xs (K, m, m)``, ``As (K, N, m, m)``."""
    _, Xih = _half_powers_many(Xs)
    Xih = Xih[:, None]
    return _eigh_apply_many(sym(Xih @ As @ Xih), np.log)


def spd_pair_distances(Xs, Ys):
    """``dist(X_k, Y_k)`` for matching stacks."""
    _, Xih = _half_powers_many(Xs)
    w = np.linalg.eigvalsh(sym(Xih @ Ys @ Xih))
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def karcher_cost_many(Xs, As):
    """Karcher cost of ``X_k`` against its own stack ``As[k]``."""
    _, Xih = _half_powers_many(Xs)
    Xih = Xih[:, None]
    w = np.linalg.eigvalsh(sym(Xih @ As @ Xih))
    return 0.5 * np.mean(np.sum(np.log(w) ** 2, axis=-1), axis=-1)


def karcher_grad_norm_many(Xs, As):
    """Riemannian norm of the Karcher gradient at each ``X_k``.

    In whitened coordinates the gradient is ``-mean_i log W_i``, so its norm
    is a Frobenius norm.
    """
    L = _whitened_logs_many(Xs, As)
    return np.linalg.norm(np.mean(L, axis=1), axis=(-2, -1))


def karcher_cost(X, As):
    """``(1 / 2N) sum_i dist(X, A_i)^2``."""
    d = spd_distances_many(X, As)
    return float(0.5 * np.mean(d**2))


def karcher_grad(X, As):
    """Riemannian gradient ``-(1/N) sum_i Log_X(A_i)`` of :func:`karcher_cost`."""
    return -np.mean(spd_logs_many(X, As), axis=0)


class SPD(Manifold):
    """``SPD(m)`` with ``<U, V>_X = trace(X^-1 U X^-1 V)``.

    Points and tangent vectors are ``(m, m)`` arrays; flattening gives the
    ``m^2`` ambient coordinates. The default curvature bound ``-1/2`` is the
    standard lower bound for this metric.
    """

    def __init__(self, m, kappa=-0.5):
        if int(m) != m or m < 1:
            raise ContractError(f"matrix size must be a positive integer, got {m}")
        self.m = int(m)
        self.ambient_dim = self.m**2
        self.dim = self.m * (self.m + 1) // 2
        self.kappa = float(kappa)
        self.point_shape = (self.m, self.m)
        self._validate_descriptor()

    def __repr__(self):
        return f"SPD({self.m}, kappa={self.kappa})"

    def belongs(self, x, atol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape != self.point_shape or not np.all(np.isfinite(x)):
            return False
        if np.max(np.abs(x - x.T)) > atol * max(1.0, np.abs(x).max()):
            return False
        w = np.linalg.eigvalsh(sym(x))
        return bool(w[0] > EIG_FLOOR * max(w[-1], 0.0))

    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        v = np.asarray(v, dtype=float)
        return v.shape == self.point_shape and bool(
            np.max(np.abs(v - v.T)) <= atol * max(1.0, np.abs(v).max())
        )

    def inner(self, x, u, v):
        self.check_shape(x, u, v)
        return spd_inner(x, u, v)

    def dist(self, x, y):
        self.check_shape(x, y)
        return spd_distance(x, y)

    def exp(self, x, v):
        self.check_shape(x, v)
        return spd_exp(x, v)

    def log(self, x, y):
        self.check_shape(x, y)
        return spd_log(x, y)

    def transport(self, x, y, v):
        self.check_shape(x, y, v)
        return spd_transport(x, y, v)

    def random_tangent(self, x, rng):
        return spd_sample_tangent(x, rng)

    def tangent_basis(self, x):
        """``X^1/2 B X^1/2`` over the Frobenius-orthonormal basis ``B`` of
        symmetric matrices; orthonormal in the affine-invariant metric."""
        Xh, _ = _half_powers(x)
        m = self.m
        out = []
        for i in range(m):
            for j in range(i, m):
                B = np.zeros((m, m))
                if i == j:
                    B[i, i] = 1.0
                else:
                    B[i, j] = B[j, i] = 1 / np.sqrt(2)
                out.append(sym(Xh @ B @ Xh))
        return out

    def random_point(self, rng, scale=1.0):
        """``Exp_I(scale * S)`` for a random symmetric ``S``."""
        return expm_sym(scale * spd_sample_tangent(np.eye(self.m), rng))


def make_spd(m, kappa=-0.5):
    return SPD(m, kappa=kappa)
