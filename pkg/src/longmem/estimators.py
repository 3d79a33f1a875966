"""Local Whittle-type memory estimators on a pluggable spectral backend.

All three estimators minimise the concentrated objective

    R(d) = log det G(d) - (2 / m) sum_i sum_j d_i log lambda_j,
    G(d) = (1 / m) sum_j Re[ Psi_j(d)^{-1} S_j conj(Psi_j(d))^{-1} ],

with ``Psi_j(d) = diag(lambda_j^{-d_i} exp(i (pi - lambda_j) d_i / 2))``. They
differ only in the spectral matrices ``S_j``: wavelet-thresholded (ASE), raw
periodogram (GSE) or tapered periodogram (TSE).
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .spectral import SpectralMatrixSeries, periodogram, tapered_periodogram, wavelet_spectrum

BACKEND_FOR = {"ASE": "wavelet", "GSE": "periodogram", "TSE": "tapered"}
MIN_T = 64


class EstimationError(RuntimeError):
    """Raised when the memory estimate cannot be produced."""

    def __init__(self, message: str, best_point=None):
        super().__init__(message)
        self.best_point = best_point


@dataclass
class EstimatorConfig:
    """Knobs of :func:`estimate`.

    ``bandwidth`` is the number ``m`` of Fourier frequencies; when ``None`` it
    is ``floor(T ** bandwidth_exponent)``. The wavelet-only settings are
    ignored by the periodogram backends.
    """

    bandwidth: int | None = None
    bandwidth_exponent: float = 0.65
    search_box: tuple = (-0.49, 0.49)
    optimizer: str = "nelder_mead_multistart"
    grid_points: int = 9
    refine: int = 3
    tolerance: float = 1e-10
    max_iter: int = 2000
    spectral_backend: str | None = None
    wavelet: str = "haar"
    threshold_rule: str = "hard"
    C: float = 1.0
    delta: float = 0.01
    C_scale: float = 1.0

    def __post_init__(self):
        lo, hi = self.search_box
        if not (-0.5 < lo < hi < 0.5):
            raise ValueError("search box must lie inside (-1/2, 1/2)")
        if self.optimizer not in ("nelder_mead_multistart", "projected_gradient"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def m_for(self, T: int) -> int:
        m = self.bandwidth if self.bandwidth is not None else int(np.floor(T**self.bandwidth_exponent))
        if not 1 <= m <= T // 2:
            raise ValueError(f"bandwidth m={m} outside 1..{T // 2}")
        return m

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MemoryEstimate:
    """Fitted memory vector with its local level matrix and asymptotic law.

    ``information`` is the limiting matrix ``Sigma`` of ``sqrt(m)(d_hat - d)``'s
    inverse covariance; ``sigma`` is the resulting covariance ``Sigma^{-1}/m``.
    """

    d_hat: np.ndarray
    G_hat: np.ndarray
    information: np.ndarray
    sigma: np.ndarray
    objective_value: float
    method: str
    m: int
    T: int
    config: dict = field(default_factory=dict)

    @property
    def l(self) -> int:
        return len(self.d_hat)

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.sigma))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "d_hat": self.d_hat.tolist(),
            "g_hat": self.G_hat.tolist(),
            "information": self.information.tolist(),
            "sigma": self.sigma.tolist(),
            "std_errors": self.std_errors.tolist(),
            "objective_value": self.objective_value,
            "m": self.m,
            "T": self.T,
            "config": self.config,
        }


class _Objective:
    """``R(d)`` with the frequency sums precomputed for one spectral series."""

    def __init__(self, spec: SpectralMatrixSeries, m: int | None = None):
        k = slice(None) if m is None else slice(0, m)
        lam = spec.frequencies[k]
        self.S = spec.matrices[k]
        self.loglam = np.log(lam)
        self.half_phase = 0.5 * (np.pi - lam)
        self.mean_loglam = float(self.loglam.mean())
        self.m = len(lam)

    def g_hat(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        dsum = d[:, None] + d[None, :]
        ddiff = d[:, None] - d[None, :]
        # 1 / (psi_a conj(psi_b)) = lambda^{d_a + d_b} exp(-i (pi - lambda)(d_a - d_b) / 2)
        w = np.exp(self.loglam[:, None, None] * dsum - 1j * self.half_phase[:, None, None] * ddiff)
        G = np.mean((w * self.S).real, axis=0)
        return 0.5 * (G + G.T)

    def __call__(self, d) -> float:
        d = np.asarray(d, dtype=float)
        sign, logdet = np.linalg.slogdet(self.g_hat(d))
        if sign <= 0 or not np.isfinite(logdet):
            return np.inf
        return float(logdet - 2.0 * self.mean_loglam * d.sum())


def g_hat(d, spec: SpectralMatrixSeries) -> np.ndarray:
    """Average of ``Re[Psi_j^{-1} S_j conj(Psi_j)^{-1}]`` over the series' frequencies."""
    return _Objective(spec).g_hat(np.atleast_1d(d))


def ase_objective(d, spec: SpectralMatrixSeries) -> float:
    """``log det G(d) - (2/m) sum_i sum_j d_i log lambda_j``; ``+inf`` if ``G(d)`` is singular."""
    return _Objective(spec)(np.atleast_1d(d))


def asymptotic_sigma(G) -> np.ndarray:
    """``(4 + pi^2)/2 * G o G^{-1} + (4 - pi^2)/2 * 1 1^T`` (Hadamard product ``o``)."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if np.linalg.cond(G) > 1e14:
        raise ValueError("G is singular")
    H = G * np.linalg.inv(G).T
    S = 0.5 * (4.0 + np.pi**2) * H + 0.5 * (4.0 - np.pi**2) * np.ones_like(G)
    return 0.5 * (S + S.T)


def _rank_key(f: float, x: np.ndarray):
    return (f, float(np.linalg.norm(x)), tuple(np.round(x, 12)))


def _nelder_mead(obj, x0, lo, hi, cfg: EstimatorConfig):
    res = optimize.minimize(
        obj, x0, method="Nelder-Mead", bounds=[(lo, hi)] * len(x0),
        options={"xatol": 1e-7, "fatol": cfg.tolerance, "maxiter": cfg.max_iter},
    )
    return np.clip(res.x, lo, hi), float(res.fun), bool(res.success)


def _projected_gradient(obj, x0, lo, hi, cfg: EstimatorConfig, h: float = 1e-6):
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    f = obj(x)
    step = 0.05
    for _ in range(cfg.max_iter):
        g = np.array([(obj(x + h * e) - obj(x - h * e)) / (2 * h) for e in np.eye(len(x))])
        if not np.all(np.isfinite(g)):
            break
        while step > 1e-12:
            xn = np.clip(x - step * g, lo, hi)
            fn = obj(xn)
            if fn <= f - 1e-4 * np.dot(g, x - xn):
                break
            step *= 0.5
        else:
            return x, f, True
        if f - fn < cfg.tolerance:
            return xn, fn, True
        x, f = xn, fn
        step = min(step * 2.0, 0.25)
    return x, f, False


def _starts(obj, l: int, lo: float, hi: float, cfg: EstimatorConfig):
    grid = np.linspace(lo, hi, cfg.grid_points + 2)[1:-1]
    if l <= 2:
        pts = [np.array(p) for p in itertools.product(grid, repeat=l)]
    else:
        # coordinate-wise warm start: best grid value per component, others at zero
        base = np.zeros(l)
        for i in range(l):
            vals = []
            for g in grid:
                x = base.copy()
                x[i] = g
                vals.append(obj(x))
            base[i] = grid[int(np.argmin(vals))]
        pts = [base]
    scored = sorted(((obj(p), p) for p in pts), key=lambda t: _rank_key(t[0], t[1]))
    return [p for f, p in scored[: max(cfg.refine, 1)] if np.isfinite(f)] or [scored[0][1]]


def minimize_objective(obj, l: int, cfg: EstimatorConfig):
    lo, hi = cfg.search_box
    runs = []
    for x0 in _starts(obj, l, lo, hi, cfg):
        if cfg.optimizer == "nelder_mead_multistart":
            runs.append(_nelder_mead(obj, x0, lo, hi, cfg))
        else:
            runs.append(_projected_gradient(obj, x0, lo, hi, cfg))
    runs.sort(key=lambda r: _rank_key(r[1], r[0]))
    best = runs[0]
    if not any(r[2] for r in runs) or not np.isfinite(best[1]):
        raise EstimationError("optimizer did not converge within the iteration budget", best[0])
    return best[0], best[1]


def build_spectrum(X, method: str, m: int, cfg: EstimatorConfig) -> SpectralMatrixSeries:
    backend = cfg.spectral_backend or BACKEND_FOR[method]
    if backend == "wavelet":
        return wavelet_spectrum(
            X, m, C=cfg.C, delta=cfg.delta, rule=cfg.threshold_rule,
            family=cfg.wavelet, C_scale=cfg.C_scale,
        )
    if backend == "periodogram":
        return periodogram(X, m)
    if backend == "tapered":
        return tapered_periodogram(X, m)
    raise ValueError(f"unknown spectral backend {backend!r}")


def estimate(X, config: EstimatorConfig | None = None, method: str = "ASE") -> MemoryEstimate:
    """Estimate the memory vector of the columns of ``X``.

    Parameters
    ----------
    X : array_like, shape (T,) or (T, l)
    config : EstimatorConfig, optional
    method : {"ASE", "GSE", "TSE"}

    Raises
    ------
    EstimationError
        If a column is constant or the optimizer fails.
    """
    cfg = config or EstimatorConfig()
    method = method.upper()
    if method not in BACKEND_FOR:
        raise ValueError(f"unknown method {method!r}; choose ASE, GSE or TSE")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, l = X.shape
    if T < MIN_T:
        raise ValueError(f"need at least T = {MIN_T} observations, got {T}")
    if not np.all(np.isfinite(X)):
        raise ValueError("series contains non-finite values")
    if np.any(np.ptp(X, axis=0) == 0.0):
        raise EstimationError("zero-variance component")
    m = cfg.m_for(T)
    spec = build_spectrum(X, method, m, cfg)
    obj = _Objective(spec)
    d_hat, fval = minimize_objective(obj, l, cfg)
    G = obj.g_hat(d_hat)
    info = asymptotic_sigma(G)
    sigma = np.linalg.inv(info) / m
    return MemoryEstimate(
        d_hat=d_hat, G_hat=G, information=info, sigma=0.5 * (sigma + sigma.T),
        objective_value=fval, method=method, m=m, T=T, config=cfg.to_dict(),
    )
