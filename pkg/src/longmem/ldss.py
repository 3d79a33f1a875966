"""Long-dependent state-space (LDSS) model.

Latent states follow a fractionally differenced VARMA recursion

    W(B) D_k(B) h_t = V(B) eps_t,   eps_t ~ N(mu, Sigma_eps),

where ``D_k(B) = diag(sum_{j<=k} c_{ij} B^j)`` is the lag-``k`` truncation of
``diag((1 - B)^{d_i})`` with ``d`` taken from the ASE estimate, and
observations are ``X_t ~ N(U h_t, Sigma_h)``. The scalar fractional filters are
applied first and the ARMA matrix polynomial multiplies from the left, so
the composed AR polynomial is ``A(B) = W(B) D_k(B)`` of order ``p + k``.

For identification the fit fixes ``W_0 = V_0 = I`` and ``U = I`` (latent and
observed dimensions coincide), estimates a full ``Sigma_eps`` via its
Cholesky factor and a diagonal ``Sigma_h``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .estimators import EstimatorConfig, estimate
from .fracdiff import apply_fracdiff, frac_coeffs
from .kalman import StateSpace, kalman_filter, loglik
from .simulate import spectral_radius

logger = logging.getLogger(__name__)

DIFFUSE = 1e6
MAX_ORDER = 2
INTERVALS = (68.27, 95.45, 99.73)


class LdssFitError(RuntimeError):
    def __init__(self, message: str, theta=None):
        super().__init__(message)
        self.theta = theta


@dataclass
class LdssModel:
    d: np.ndarray
    k: int
    mu: np.ndarray
    Sigma_eps: np.ndarray
    W: list
    V: list
    U: np.ndarray
    Sigma_h: np.ndarray
    loglik: float = float("nan")
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.d = np.atleast_1d(np.asarray(self.d, dtype=float))
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.Sigma_eps = np.atleast_2d(np.asarray(self.Sigma_eps, dtype=float))
        self.Sigma_h = np.atleast_2d(np.asarray(self.Sigma_h, dtype=float))
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.W = [np.atleast_2d(np.asarray(w, dtype=float)) for w in self.W]
        self.V = [np.atleast_2d(np.asarray(v, dtype=float)) for v in self.V]

    @property
    def l_h(self) -> int:
        return len(self.d)

    @property
    def l(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return len(self.W) - 1

    @property
    def q(self) -> int:
        return len(self.V) - 1

    @property
    def ar_order(self) -> int:
        return max(self.p + self.k, 1)

    @property
    def state_dim(self) -> int:
        return self.l_h * (self.ar_order + self.q)

    def frac_rows(self) -> np.ndarray:
        """Row ``i`` is ``(1, b_i1, ..., b_ik)``, the truncated ``(1 - B)^{d_i}``."""
        return np.vstack([frac_coeffs(di, self.k).coeffs for di in self.d])

    def composed_ar(self) -> list:
        """Coefficient matrices ``A_0 .. A_{p+k}`` of ``W(B) D_k(B)``."""
        rows = self.frac_rows()
        out = [np.zeros((self.l_h, self.l_h)) for _ in range(self.p + self.k + 1)]
        for a, Wa in enumerate(self.W):
            for b in range(self.k + 1):
                out[a + b] += Wa @ np.diag(rows[:, b])
        return out

    def transition(self):
        """``(F, c, G)`` with ``s_t = F s_{t-1} + c + G eta_t``, ``eta ~ N(0, Sigma_eps)``."""
        lh, P, q = self.l_h, self.ar_order, self.q
        W0inv = np.linalg.inv(self.W[0])
        A = self.composed_ar()
        n = self.state_dim
        F = np.zeros((n, n))
        for j in range(1, P + 1):
            Aj = A[j] if j < len(A) else np.zeros((lh, lh))
            F[:lh, (j - 1) * lh:j * lh] = -W0inv @ Aj
        if P > 1:
            F[lh:P * lh, :(P - 1) * lh] = np.eye((P - 1) * lh)
        off = P * lh
        for j in range(1, q + 1):
            F[:lh, off + (j - 1) * lh:off + j * lh] = W0inv @ self.V[j]
        if q > 1:
            F[off + lh:, off:off + (q - 1) * lh] = np.eye((q - 1) * lh)
        G = np.zeros((n, lh))
        G[:lh] = W0inv @ self.V[0]
        if q > 0:
            G[off:off + lh] = np.eye(lh)
        c = np.zeros(n)
        c[:lh] = W0inv @ sum(self.V) @ self.mu
        return F, c, G

    def state_space(self, P0_scale: float = DIFFUSE) -> StateSpace:
        F, c, G = self.transition()
        n = self.state_dim
        H = np.zeros((self.l, n))
        H[:, :self.l_h] = self.U
        return StateSpace(F, c, G @ self.Sigma_eps @ G.T, H, self.Sigma_h,
                          np.zeros(n), P0_scale * np.eye(n))

    def ar_radius(self) -> float:
        F, _, _ = self.transition()
        P = self.ar_order * self.l_h
        return spectral_radius(F[:P, :P])

    def to_dict(self) -> dict:
        return {
            "d": self.d.tolist(), "k": self.k, "p": self.p, "q": self.q,
            "mu": self.mu.tolist(), "Sigma_eps": self.Sigma_eps.tolist(),
            "W": [w.tolist() for w in self.W], "V": [v.tolist() for v in self.V],
            "U": self.U.tolist(), "Sigma_h": self.Sigma_h.tolist(),
            "state_dim": self.state_dim, "loglik": self.loglik,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LdssModel":
        return cls(d=doc["d"], k=int(doc["k"]), mu=doc["mu"], Sigma_eps=doc["Sigma_eps"],
                   W=doc["W"], V=doc["V"], U=doc["U"], Sigma_h=doc["Sigma_h"],
                   loglik=float(doc.get("loglik", float("nan"))))


def ldss_simulate(model: LdssModel, T: int, burn_in: int = 500, seed=None) -> np.ndarray:
    """Draw ``T`` observations from the model, starting from a zero state."""
    rng = np.random.default_rng(seed)
    F, c, G = model.transition()
    Le, Lh = _psd_sqrt(model.Sigma_eps), _psd_sqrt(model.Sigma_h)
    s = np.zeros(model.state_dim)
    out = np.empty((T, model.l))
    for t in range(-burn_in, T):
        s = F @ s + c + G @ (Le @ rng.standard_normal(model.l_h))
        if t >= 0:
            out[t] = model.U @ s[:model.l_h] + Lh @ rng.standard_normal(model.l)
    return out


# -- fitting -------------------------------------------------------------------


class _Packer:
    """Free parameters <-> model, with ``W_0 = V_0 = U = I`` held fixed."""

    def __init__(self, d, k, p, q, l):
        self.d, self.k, self.p, self.q, self.l = np.asarray(d, float), k, p, q, l
        self.tril = np.tril_indices(l)

    def model(self, theta) -> LdssModel:
        l = self.l
        i = 0
        mu = theta[i:i + l]; i += l
        W = [np.eye(l)]
        for _ in range(self.p):
            W.append(theta[i:i + l * l].reshape(l, l)); i += l * l
        V = [np.eye(l)]
        for _ in range(self.q):
            V.append(theta[i:i + l * l].reshape(l, l)); i += l * l
        Lc = np.zeros((l, l))
        Lc[self.tril] = theta[i:i + len(self.tril[0])]; i += len(self.tril[0])
        Lc[np.diag_indices(l)] = np.exp(np.diag(Lc))
        Sigma_h = np.diag(np.exp(theta[i:i + l]))
        return LdssModel(self.d, self.k, mu, Lc @ Lc.T, W, V, np.eye(l), Sigma_h)

    def theta(self, model: LdssModel) -> np.ndarray:
        parts = [model.mu]
        parts += [w.ravel() for w in model.W[1:]]
        parts += [v.ravel() for v in model.V[1:]]
        Lc = np.linalg.cholesky(model.Sigma_eps + 1e-12 * np.eye(self.l))
        Lc[np.diag_indices(self.l)] = np.log(np.diag(Lc))
        parts.append(Lc[self.tril])
        parts.append(np.log(np.diag(model.Sigma_h)))
        return np.concatenate(parts)


def _initial_model(X: np.ndarray, d, k: int, p: int, q: int) -> LdssModel:
    # least squares VAR(p) on the truncated fractional differences of the data
    T, l = X.shape
    xbar = X.mean(axis=0)
    Y = np.column_stack([apply_fracdiff(X[:, i] - xbar[i], frac_coeffs(d[i], k)) for i in range(l)])[k:]
    W = [np.eye(l)]
    resid = Y
    if p > 0:
        Z = np.hstack([Y[p - j:len(Y) - j] for j in range(1, p + 1)])
        coef, *_ = np.linalg.lstsq(Z, Y[p:], rcond=None)
        resid = Y[p:] - Z @ coef
        W += [-coef[(j - 1) * l:j * l].T for j in range(1, p + 1)]
    S = np.atleast_2d(np.cov(resid.T)) + 1e-8 * np.eye(l)
    V = [np.eye(l)] + [np.zeros((l, l)) for _ in range(q)]
    tmp = LdssModel(d, k, np.zeros(l), S, W, V, np.eye(l), np.eye(l))
    A1 = sum(tmp.composed_ar())
    mu = np.linalg.solve(sum(V), A1 @ xbar)
    return LdssModel(d, k, mu, 0.9 * S, W, V, np.eye(l), np.diag(0.1 * np.diag(S)))


def ldss_loglik(model: LdssModel, X) -> float:
    return loglik(model.state_space(), np.asarray(X, dtype=float))


def ldss_fit(X, k: int = 4, p: int = 1, q: int = 0, d=None, config: EstimatorConfig | None = None,
             maxiter: int = 500, penalty: float = 1e10) -> LdssModel:
    """Fit an LDSS model by maximising the exact Kalman likelihood.

    ``d`` defaults to the ASE estimate of ``X``; it stays fixed during the
    likelihood search (L-BFGS-B with finite-difference gradients).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, l = X.shape
    if p > MAX_ORDER or q > MAX_ORDER or p < 0 or q < 0:
        raise ValueError(f"ARMA orders must lie in 0..{MAX_ORDER}")
    if k < 0:
        raise ValueError("truncation lag k must be non-negative")
    if d is None:
        d = estimate(X, config, "ASE").d_hat
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if len(d) != l:
        raise ValueError("memory vector length must equal the number of columns")
    state_dim = l * (max(p + k, 1) + q)
    if T <= state_dim:
        raise ValueError(f"series too short: T={T} must exceed state dimension {state_dim}")

    pk = _Packer(d, k, p, q, l)
    init = _initial_model(X, d, k, p, q)

    def negll(theta):
        model = pk.model(theta)
        if model.ar_radius() >= 1.0 + 1e-6 or (q and spectral_radius(_ma_companion(model)) >= 1.0):
            return penalty
        ll = ldss_loglik(model, X)
        if np.isnan(ll):
            raise LdssFitError("non-finite likelihood during search", theta.copy())
        return -ll if np.isfinite(ll) else penalty

    theta0 = pk.theta(init)
    history = [-negll(theta0)]
    res = optimize.minimize(
        negll, theta0, method="L-BFGS-B",
        callback=lambda xk: history.append(-negll(xk)),
        options={"maxiter": maxiter},
    )
    model = pk.model(res.x)
    model.loglik = -float(res.fun)
    if not np.isfinite(model.loglik) or res.fun >= penalty:
        raise LdssFitError("fit ended at an infeasible point", res.x)
    model.history = history
    logger.info("ldss fit: loglik %.4f after %d iterations (%s)", model.loglik, res.nit, res.message)
    return model


def _ma_companion(model: LdssModel) -> np.ndarray:
    from .simulate import companion
    return companion([-v for v in model.V[1:]], model.l_h)


# -- forecasting ---------------------------------------------------------------


@dataclass
class ForecastDistribution:
    horizon: int
    samples: np.ndarray  # K x horizon x l
    mean: np.ndarray
    intervals: dict  # level -> (lower, upper), each horizon x l

    def to_records(self):
        """Long-format rows ``(step, component, mean, lo_68, hi_68, lo_95, hi_95, lo_99, hi_99)``."""
        rows = []
        for h in range(self.horizon):
            for i in range(self.mean.shape[1]):
                row = [h + 1, i + 1, self.mean[h, i]]
                for lvl in INTERVALS:
                    lo, hi = self.intervals[lvl]
                    row += [lo[h, i], hi[h, i]]
                rows.append(row)
        return rows


def _psd_sqrt(P: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    w = np.where(w > rel * max(w.max(), 1.0), w, 0.0)
    return V * np.sqrt(w)


def ldss_forecast(model: LdssModel, X, horizon: int, K: int = 1000, seed=None) -> ForecastDistribution:
    """Monte Carlo forecast paths from the filtered state at the end of ``X``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != model.l:
        raise ValueError("data dimension does not match the model")
    ss = model.state_space()
    F, c, G = model.transition()
    fr = kalman_filter(ss, X)
    rng = np.random.default_rng(seed)
    n = ss.n
    s = fr.filtered_mean[-1] + rng.standard_normal((K, n)) @ _psd_sqrt(fr.filtered_cov[-1]).T
    Le = _psd_sqrt(model.Sigma_eps)
    Lh = _psd_sqrt(model.Sigma_h)
    out = np.empty((K, horizon, model.l))
    for h in range(horizon):
        eta = rng.standard_normal((K, model.l_h)) @ Le.T
        s = s @ F.T + c + eta @ G.T
        out[:, h] = s @ ss.H.T + rng.standard_normal((K, model.l)) @ Lh.T
    intervals = {}
    for lvl in INTERVALS:
        a = (1.0 - lvl / 100.0) / 2.0
        lo, hi = np.quantile(out, [a, 1.0 - a], axis=0)
        intervals[lvl] = (lo, hi)
    return ForecastDistribution(horizon, out, out.mean(axis=0), intervals)


def one_step_intervals(model: LdssModel, X, percentile: float, history=None):
    """One-step-ahead predictive central intervals for every row of ``X``.

    ``history`` (if given) is filtered first and only conditions the forecasts.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if history is not None:
        H = np.asarray(history, dtype=float)
        Y = np.vstack([H.reshape(-1, X.shape[1]), X])
    else:
        Y = X
    fr = kalman_filter(model.state_space(), Y)
    mean = fr.pred_obs_mean[-len(X):]
    sd = np.sqrt(np.maximum(np.diagonal(fr.pred_obs_cov[-len(X):], axis1=1, axis2=2), 0.0))
    z = np.inf if percentile >= 100 else norm.ppf(0.5 + percentile / 200.0)
    with np.errstate(invalid="ignore"):
        half = np.where(np.isinf(z), np.inf, z * sd)
    return mean - half, mean + half


def coverage_percentage(truth, model: LdssModel, percentile: float = 95.45, history=None) -> float:
    """Percentage of ``truth`` entries inside the one-step-ahead central ``percentile`` interval."""
    truth = np.asarray(truth, dtype=float)
    if truth.size == 0:
        raise ValueError("truth is empty")
    if not 0 < percentile <= 100:
        raise ValueError("percentile must lie in (0, 100]")
    lo, hi = one_step_intervals(model, truth, percentile, history)
    truth = truth.reshape(lo.shape)
    return float(100.0 * np.mean((truth >= lo) & (truth <= hi)))


def ar1_baseline_forecast(X, horizon: int) -> np.ndarray:
    """Per-component least-squares AR(1) point forecast (short-memory reference)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    out = np.empty((horizon, X.shape[1]))
    for i in range(X.shape[1]):
        x = X[:, i]
        mu = x.mean()
        y0, y1 = x[:-1] - mu, x[1:] - mu
        phi = float(y0 @ y1 / (y0 @ y0))
        last = x[-1] - mu
        for h in range(horizon):
            last *= phi
            out[h, i] = mu + last
    return out
