"""Synthetic data generators.

Covers copula-coupled heavy-tailed sources, fractionally integrated
processes (optionally with ARMA dynamics), and the Lorenz system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .fracdiff import Direction, apply_fracdiff, frac_coeffs

MARGINALS = ("gaussian", "student_t", "standard_logistic", "hyperbolic_secant")


@dataclass(frozen=True)
class SourceSpec:
    """Distribution of the i.i.d. source rows.

    ``marginal`` is one of :data:`MARGINALS`; ``df`` is used by ``student_t``
    only. Rows are coupled with a Gaussian copula whose correlation matrix has
    ones on the diagonal and ``copula_corr`` elsewhere.
    """

    l: int = 1
    marginal: str = "gaussian"
    df: float = 3.0
    copula_corr: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("dimension l must be >= 1")
        if self.marginal not in MARGINALS:
            raise ValueError(f"unknown marginal {self.marginal!r}; choose from {MARGINALS}")
        if self.marginal == "student_t" and self.df <= 2:
            raise ValueError("student_t needs df > 2 for a finite variance")
        lo = -1.0 / (self.l - 1) if self.l > 1 else -1.0
        if not (lo < self.copula_corr < 1.0):
            raise ValueError(
                f"copula correlation {self.copula_corr} outside ({lo:.4g}, 1) for l={self.l}"
            )

    def correlation(self) -> np.ndarray:
        R = np.full((self.l, self.l), self.copula_corr)
        np.fill_diagonal(R, 1.0)
        return R


def _standard_quantile(marginal: str, u: np.ndarray, df: float) -> np.ndarray:
    # quantile of the marginal rescaled to zero mean and unit (population) variance
    if marginal == "gaussian":
        return special.ndtri(u)
    if marginal == "student_t":
        return stats.t.ppf(u, df) / np.sqrt(df / (df - 2.0))
    if marginal == "standard_logistic":
        return np.log(u / (1.0 - u)) / (np.pi / np.sqrt(3.0))
    # hyperbolic secant with density sech(pi x / 2) / 2 already has unit variance
    return (2.0 / np.pi) * np.log(np.tan(0.5 * np.pi * u))


def gen_source(spec: SourceSpec, T: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw a ``T x l`` matrix of i.i.d. copula-coupled rows.

    Correlated standard normals are pushed through the normal CDF and then
    through the target quantile function, standardized by the marginal's
    population moments.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    L = np.linalg.cholesky(spec.correlation())
    z = rng.standard_normal((T, spec.l)) @ L.T
    if spec.marginal == "gaussian":
        return z
    # ndtr saturates at 1.0 for z > ~8.3; use the symmetric form to keep both tails
    u = np.where(z < 0, special.ndtr(z), 1.0 - special.ndtr(-z))
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    return _standard_quantile(spec.marginal, u, spec.df)


def gen_arise(d, source, burn_in: int = 0) -> np.ndarray:
    """Fractionally integrate each source column: ``X_i = (1 - B)^{-d_i} eps_i``.

    The MA(inf) expansion is truncated at the length of ``source``, with zero
    pre-sample values; the first ``burn_in`` outputs are discarded.
    """
    eps = np.asarray(source, dtype=float)
    squeeze = eps.ndim == 1
    if squeeze:
        eps = eps[:, None]
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape[0] != eps.shape[1]:
        raise ValueError(f"memory vector has {d.shape[0]} entries for {eps.shape[1]} columns")
    if np.any(np.abs(d) >= 0.5):
        raise ValueError("each |d_i| must be < 1/2")
    if burn_in < 0 or burn_in >= eps.shape[0]:
        raise ValueError("burn_in must satisfy 0 <= burn_in < len(source)")
    n = eps.shape[0]
    out = np.empty_like(eps)
    for i, di in enumerate(d):
        if di == 0.0:
            out[:, i] = eps[:, i]
        else:
            out[:, i] = apply_fracdiff(eps[:, i], frac_coeffs(di, n - 1, Direction.INVERSE))
    out = out[burn_in:]
    return out[:, 0] if squeeze else out


@dataclass
class ArmaSpec:
    """Matrix polynomials ``W(B) = W_0 + sum W_k B^k`` and ``V(B) = V_0 + sum V_k B^k``.

    The sign convention follows the left-hand side ``W(B) zeta_t = V(B) eps_t``,
    so a scalar AR(1) with coefficient ``phi`` has ``W_1 = -phi``.
    """

    W: list = field(default_factory=lambda: [np.eye(1)])
    V: list = field(default_factory=lambda: [np.eye(1)])

    def __post_init__(self):
        self.W = [np.atleast_2d(np.asarray(w, dtype=float)) for w in self.W]
        self.V = [np.atleast_2d(np.asarray(v, dtype=float)) for v in self.V]
        l = self.W[0].shape[0]
        for m in self.W + self.V:
            if m.shape != (l, l):
                raise ValueError("all ARMA coefficient matrices must be l x l")
        for name, m in (("W_0", self.W[0]), ("V_0", self.V[0])):
            if abs(np.linalg.det(m)) < 1e-12:
                raise ValueError(f"{name} must be invertible")
        if spectral_radius(self.ar_companion()) >= 1.0:
            raise ValueError("AR polynomial is not stationary (companion spectral radius >= 1)")
        if spectral_radius(self.ma_companion()) >= 1.0:
            raise ValueError("MA polynomial is not invertible (companion spectral radius >= 1)")

    @property
    def l(self) -> int:
        return self.W[0].shape[0]

    @property
    def p(self) -> int:
        return len(self.W) - 1

    @property
    def q(self) -> int:
        return len(self.V) - 1

    def ar_companion(self) -> np.ndarray:
        W0inv = np.linalg.inv(self.W[0])
        return companion([-W0inv @ w for w in self.W[1:]], self.l)

    def ma_companion(self) -> np.ndarray:
        V0inv = np.linalg.inv(self.V[0])
        return companion([-V0inv @ v for v in self.V[1:]], self.l)


def companion(blocks, l: int) -> np.ndarray:
    """Block companion matrix of ``x_t = sum_k A_k x_{t-k}``."""
    P = len(blocks)
    if P == 0:
        return np.zeros((l, l))
    F = np.zeros((l * P, l * P))
    F[:l, :] = np.hstack(blocks)
    F[l:, :-l] = np.eye(l * (P - 1))
    return F


def spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def arma_filter(arma: ArmaSpec, eps: np.ndarray) -> np.ndarray:
    """Run ``W(B) zeta_t = V(B) eps_t`` forward from zero initial conditions."""
    T, l = eps.shape
    W0inv = np.linalg.inv(arma.W[0])
    A = [-W0inv @ w for w in arma.W[1:]]
    M = [W0inv @ v for v in arma.V]
    zeta = np.zeros((T, l))
    for t in range(T):
        acc = M[0] @ eps[t]
        for k, Mk in enumerate(M[1:], start=1):
            if t - k >= 0:
                acc += Mk @ eps[t - k]
        for k, Ak in enumerate(A, start=1):
            if t - k >= 0:
                acc += Ak @ zeta[t - k]
        zeta[t] = acc
    return zeta


def gen_arise_arma(d, arma: ArmaSpec, T: int, burn_in: int | None = None, seed=None) -> np.ndarray:
    """Fractionally integrated VARMA draw with standard Gaussian innovations."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape[0] != arma.l:
        raise ValueError("memory vector and ARMA dimension differ")
    burn_in = T if burn_in is None else burn_in
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((T + burn_in, arma.l))
    zeta = arma_filter(arma, eps) if (arma.p or arma.q or not _is_identity(arma)) else eps
    return gen_arise(d, zeta, burn_in)


def _is_identity(arma: ArmaSpec) -> bool:
    return np.array_equal(arma.W[0], np.eye(arma.l)) and np.array_equal(arma.V[0], np.eye(arma.l))


def gen_arfima(d, T: int, burn_in: int | None = None, seed=None, source: SourceSpec | None = None):
    """Convenience wrapper: ``T`` rows of ``(1 - B)^{-d}`` applied to a source draw."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    burn_in = T if burn_in is None else burn_in
    if source is None:
        source = SourceSpec(l=len(d), seed=seed)
    elif source.l != len(d):
        raise ValueError("source dimension and memory vector differ")
    rng = np.random.default_rng(seed if seed is not None else source.seed)
    eps = gen_source(source, T + burn_in, rng)
    return gen_arise(d, eps, burn_in)


def gen_lorenz(T: int = 2000, dt: float = 0.01, init=(1.0, 1.0, 1.0), params=(10.0, 28.0, 8.0 / 3.0)):
    """Classical RK4 integration of the Lorenz system; returns ``T x 3`` (row 0 is ``init``)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a, b, c = params

    def rhs(s):
        x, y, z = s
        return np.array([a * (y - x), x * (b - z) - y, x * y - c * z])

    out = np.empty((T, 3))
    s = np.asarray(init, dtype=float).copy()
    for t in range(T):
        out[t] = s
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * dt * k1)
        k3 = rhs(s + 0.5 * dt * k2)
        k4 = rhs(s + dt * k3)
        s = s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return out
