"""Linear-Gaussian state space: Kalman filter likelihood and a brute-force oracle.

Model (``t = 1..T``)::

    x_0 ~ N(m0, P0)
    x_t = F x_{t-1} + c + w_t,   w_t ~ N(0, Q)
    y_t = H x_t + v_t,           v_t ~ N(0, R)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap(args[0]) if args and callable(args[0]) else wrap

LOG2PI = np.log(2.0 * np.pi)


@dataclass
class StateSpace:
    F: np.ndarray
    c: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R: np.ndarray
    m0: np.ndarray
    P0: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def l(self) -> int:
        return self.H.shape[0]


@dataclass
class FilterResult:
    loglik: float
    filtered_mean: np.ndarray  # x_t | y_1..t, shape (T, n)
    filtered_cov: np.ndarray   # (T, n, n)
    pred_obs_mean: np.ndarray  # y_t | y_1..t-1, shape (T, l)
    pred_obs_cov: np.ndarray   # (T, l, l)


def kalman_filter(ss: StateSpace, Y, store: bool = True) -> FilterResult:
    """Run the filter and return the exact Gaussian log-likelihood of ``Y``.

    Covariances are updated in Joseph form and re-symmetrised each step, so
    they stay symmetric PSD even when ``R`` is singular. If an innovation
    covariance is singular the log-likelihood is ``-inf`` but the filtered
    moments are still produced.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != ss.l and Y.shape[0] == ss.l:
        Y = Y.T
    T, l = Y.shape
    n = ss.n
    F, c, Q, H, R = ss.F, ss.c, ss.Q, ss.H, ss.R
    m, P = ss.m0.astype(float), ss.P0.astype(float)
    I = np.eye(n)
    loglik = 0.0
    if store:
        fm, fP = np.empty((T, n)), np.empty((T, n, n))
        pm, pS = np.empty((T, l)), np.empty((T, l, l))
    for t in range(T):
        m = F @ m + c
        P = F @ P @ F.T + Q
        yhat = H @ m
        PHt = P @ H.T
        S = H @ PHt + R
        S = 0.5 * (S + S.T)
        e = Y[t] - yhat
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            # degenerate (noiseless) step: no density, gain from the pseudo-inverse
            loglik = -np.inf
            K = PHt @ np.linalg.pinv(S, rcond=1e-12, hermitian=True)
        else:
            z = np.linalg.solve(L, e)
            loglik -= 0.5 * (l * LOG2PI + 2.0 * np.sum(np.log(np.diag(L))) + z @ z)
            K = np.linalg.solve(L.T, np.linalg.solve(L, PHt.T)).T
        m = m + K @ e
        IKH = I - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
        P = 0.5 * (P + P.T)
        if store:
            fm[t], fP[t], pm[t], pS[t] = m, P, yhat, S
    if not store:
        return FilterResult(float(loglik), m[None], P[None], np.empty((0, l)), np.empty((0, l, l)))
    return FilterResult(float(loglik), fm, fP, pm, pS)


@njit(cache=True)
def _loglik_core(F, c, Q, H, R, m0, P0, Y):
    T, l = Y.shape
    n = F.shape[0]
    m = m0.copy()
    P = P0.copy()
    I = np.eye(n)
    ll = 0.0
    for t in range(T):
        m = F @ m + c
        P = F @ P @ F.T + Q
        PHt = P @ H.T
        S = H @ PHt + R
        S = 0.5 * (S + S.T)
        L = np.linalg.cholesky(S)
        Linv = np.ascontiguousarray(np.linalg.inv(L))
        e = Y[t] - H @ m
        z = Linv @ e
        logdet = 0.0
        for i in range(l):
            logdet += np.log(L[i, i])
        ll -= 0.5 * (l * LOG2PI + 2.0 * logdet + z @ z)
        K = PHt @ (Linv.T @ Linv)
        m = m + K @ e
        IKH = I - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
        P = 0.5 * (P + P.T)
    return ll


def loglik(ss: StateSpace, Y) -> float:
    """Log-likelihood only; compiled version of the :func:`kalman_filter` recursion.

    Returns ``-inf`` when an innovation covariance is not positive definite.
    """
    Y = np.ascontiguousarray(np.atleast_2d(np.asarray(Y, dtype=float)))
    args = [np.ascontiguousarray(np.asarray(a, dtype=float)) for a in (ss.F, ss.c, ss.Q, ss.H, ss.R, ss.m0, ss.P0)]
    try:
        return float(_loglik_core(*args, Y))
    except np.linalg.LinAlgError:
        return -np.inf


def joint_gaussian_loglik(ss: StateSpace, Y) -> float:
    """Log-density of the stacked observations from explicitly assembled moments.

    Builds ``x_{1:T} = A x_0 + B (c + w)_{1:T}`` as dense block matrices and
    evaluates the ``(T l)``-variate normal density directly; used to check
    :func:`kalman_filter`.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    T, l = Y.shape
    n = ss.n
    powers = [np.eye(n)]
    for _ in range(T):
        powers.append(ss.F @ powers[-1])
    A = np.vstack(powers[1:])
    B = np.zeros((T * n, T * n))
    for t in range(T):
        for s in range(t + 1):
            B[t * n:(t + 1) * n, s * n:(s + 1) * n] = powers[t - s]
    Hbig = np.kron(np.eye(T), ss.H)
    mean_x = A @ ss.m0 + B @ np.tile(ss.c, T)
    cov_x = A @ ss.P0 @ A.T + B @ np.kron(np.eye(T), ss.Q) @ B.T
    mean_y = Hbig @ mean_x
    cov_y = Hbig @ cov_x @ Hbig.T + np.kron(np.eye(T), ss.R)
    cov_y = 0.5 * (cov_y + cov_y.T)
    r = Y.reshape(-1) - mean_y
    sign, logdet = np.linalg.slogdet(cov_y)
    if sign <= 0:
        raise np.linalg.LinAlgError("observation covariance is not positive definite")
    return float(-0.5 * (T * l * LOG2PI + logdet + r @ np.linalg.solve(cov_y, r)))
