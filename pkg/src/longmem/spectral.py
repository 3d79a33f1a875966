"""Spectral density estimators on the Fourier grid ``lambda_j = 2 pi j / T``.

Three estimators share the :class:`SpectralMatrixSeries` container:

* ``periodogram`` -- raw cross-periodogram matrices,
* ``tapered_periodogram`` -- cosine-Hanning tapered periodogram,
* ``wavelet_spectrum`` -- periodogram denoised by thresholding its discrete
  wavelet coefficients, then repaired to Hermitian PSD matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pywt

WAVELETS = {"db4": "db2", "haar": "haar"}  # db4 = 4-tap Daubechies (two vanishing moments)
PSD_FLOOR = 1e-12


@dataclass
class SpectralMatrixSeries:
    """Per-frequency ``l x l`` complex matrices at ``lambda_j = 2 pi j / T``."""

    j: np.ndarray
    matrices: np.ndarray
    T: int
    estimator: str

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * self.j / self.T

    @property
    def m(self) -> int:
        return len(self.j)

    @property
    def l(self) -> int:
        return self.matrices.shape[1]

    def to_records(self):
        """Long-format rows ``(j, lambda, p, q, re, im)``."""
        lam = self.frequencies
        rows = []
        for k, jj in enumerate(self.j):
            for p in range(self.l):
                for q in range(self.l):
                    z = self.matrices[k, p, q]
                    rows.append((int(jj), float(lam[k]), p, q, float(z.real), float(z.imag)))
        return rows


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("expected a T x l matrix")
    if X.shape[0] < 2:
        raise ValueError("need at least T = 2 observations")
    if not np.all(np.isfinite(X)):
        raise ValueError("series contains non-finite values")
    return X


def _freq_index(freqs, T: int) -> np.ndarray:
    if freqs is None:
        return np.arange(1, T // 2 + 1)
    if np.isscalar(freqs):
        freqs = np.arange(1, int(freqs) + 1)
    j = np.asarray(freqs, dtype=int)
    if j.size == 0 or j.min() < 1 or j.max() > T // 2:
        raise ValueError(f"frequency indices must lie in 1..{T // 2}")
    return j


def _dft(X: np.ndarray) -> np.ndarray:
    # w(lambda_j) = sum_t X_t exp(i t lambda_j) is the conjugate of numpy's forward FFT
    return np.conj(np.fft.fft(X, axis=0))


def _cross(w: np.ndarray, scale: float) -> np.ndarray:
    return scale * w[:, :, None] * np.conj(w[:, None, :])


def full_periodogram(X) -> np.ndarray:
    """Periodogram matrices at every ``j = 0 .. T-1`` (columns mean-centred)."""
    X = _as_matrix(X)
    T = X.shape[0]
    w = _dft(X - X.mean(axis=0))
    return _cross(w, 1.0 / (2.0 * np.pi * T))


def periodogram(X, freqs=None) -> SpectralMatrixSeries:
    """``I_T(lambda_j) = w(lambda_j) w(lambda_j)^H / (2 pi T)``.

    ``freqs`` is an index list (``1 <= j <= T // 2``), an integer ``m`` meaning
    ``1..m``, or ``None`` for the whole half grid.
    """
    X = _as_matrix(X)
    T = X.shape[0]
    j = _freq_index(freqs, T)
    w = _dft(X - X.mean(axis=0))[j]
    return SpectralMatrixSeries(j, _cross(w, 1.0 / (2.0 * np.pi * T)), T, "periodogram")


def hanning_taper(T: int) -> np.ndarray:
    """Cosine-Hanning weights ``[1 - cos(2 pi t / T)] / 2`` for ``t = 1..T``.

    The formula is symmetric about ``T/2``, so the mirrored branch for
    ``t > T/2`` coincides with it.
    """
    t = np.arange(1, T + 1)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / T))


def tapered_periodogram(X, freqs=None) -> SpectralMatrixSeries:
    """Periodogram of ``q_t * X_t`` with ``q_t`` the unit-energy Hanning taper."""
    X = _as_matrix(X)
    T = X.shape[0]
    j = _freq_index(freqs, T)
    h = hanning_taper(T)
    q = h / np.sqrt(np.sum(h * h))
    # DFT phase convention uses t = 1..T; the common factor cancels in w w^H
    w = _dft((X - X.mean(axis=0)) * q[:, None])[j]
    return SpectralMatrixSeries(j, _cross(w, 1.0 / (2.0 * np.pi)), T, "tapered")


# -- wavelet machinery ---------------------------------------------------------


@dataclass
class WaveletCoeffSet:
    """Orthonormal periodized DWT of a length-``n`` signal.

    ``details[i]`` holds the ``2**i`` detail coefficients at scale ``i``
    (coarse to fine, shifts ``kappa = 0 .. 2**i - 1``) on a padded length
    ``N = 2**J``. ``thresholds`` mirrors ``details`` once computed.
    """

    family: str
    n: int
    approx: np.ndarray
    details: list
    thresholds: list | None = None
    C: float = 1.0
    delta: float = 0.01
    T: int | None = None
    index_set_size: int = 0
    admissible: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.approx) * 2 ** len(self.details)

    @property
    def coarsest_scale(self) -> int:
        return int(np.log2(len(self.approx)))

    def scale(self, k: int) -> int:
        return self.coarsest_scale + k

    def entries(self) -> dict:
        """``{(scale, shift): (coefficient, threshold)}`` over the admissible set."""
        out = {}
        for k, det in enumerate(self.details):
            if self.admissible and not self.admissible[k]:
                continue
            rho = self.thresholds[k] if self.thresholds is not None else np.zeros_like(det)
            i = self.scale(k)
            for kappa, (a, r) in enumerate(zip(det, rho)):
                out[(i, kappa)] = (float(a), float(r))
        return out

    def energy(self) -> float:
        return float(np.sum(self.approx**2) + sum(np.sum(d**2) for d in self.details))


def _pywt_name(family: str) -> str:
    try:
        return WAVELETS[family]
    except KeyError:
        raise ValueError(f"unknown wavelet family {family!r}; choose from {sorted(WAVELETS)}") from None


def _pad_pow2(x: np.ndarray) -> np.ndarray:
    n = len(x)
    N = 1 << max(int(np.ceil(np.log2(n))), 0)
    if N == n:
        return x
    return np.pad(x, (0, N - n), mode="symmetric")


def _levels(N: int, family: str) -> int:
    w = pywt.Wavelet(_pywt_name(family))
    return max(pywt.dwt_max_level(N, w.dec_len), 0) if N > 1 else 0


def dwt_forward(signal, family: str = "db4") -> WaveletCoeffSet:
    """Orthonormal pyramid transform with periodic boundaries.

    Lengths that are not powers of two are padded by symmetric reflection.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    xp = _pad_pow2(x)
    J = _levels(len(xp), family)
    if J == 0:
        return WaveletCoeffSet(family, len(x), xp.copy(), [])
    coeffs = pywt.wavedec(xp, _pywt_name(family), mode="periodization", level=J)
    return WaveletCoeffSet(family, len(x), coeffs[0], list(coeffs[1:]))


def dwt_inverse(coeffs: WaveletCoeffSet) -> np.ndarray:
    if not coeffs.details:
        return coeffs.approx[: coeffs.n].copy()
    x = pywt.waverec([coeffs.approx, *coeffs.details], _pywt_name(coeffs.family), mode="periodization")
    return x[: coeffs.n]


def _approximations(x: np.ndarray, family: str, levels: int) -> list:
    # scaling-band coefficients at every level, fine to coarse
    w = _pywt_name(family)
    out = []
    a = x
    for _ in range(levels):
        a, _ = pywt.dwt(a, w, mode="periodization")
        out.append(a)
    return out


def admissible_set(coeffs: WaveletCoeffSet, T: int, C: float = 1.0, delta: float = 0.01):
    """Flag scales with ``2**i <= C * T**(1 - delta)`` and count the member pairs."""
    if C <= 0 or delta <= 0:
        raise ValueError("C and delta must be positive")
    bound = C * T ** (1.0 - delta)
    flags = [2.0 ** coeffs.scale(k) <= bound for k in range(len(coeffs.details))]
    size = sum(len(d) for d, ok in zip(coeffs.details, flags) if ok)
    coeffs.admissible, coeffs.index_set_size = flags, size
    coeffs.C, coeffs.delta, coeffs.T = C, delta, T
    return coeffs


def local_levels(level_signal, coeffs: WaveletCoeffSet) -> list:
    """Local weighted averages of ``level_signal`` aligned with ``coeffs.details``.

    At scale ``i`` the scaling coefficient ``a_{i,kappa}`` covers ``N / 2**i``
    samples with weights ``sqrt(2**i / N)``, so ``|a_{i,kappa}| sqrt(2**i / N)``
    is a weighted mean of the signal around shift ``kappa``.
    """
    x = _pad_pow2(np.asarray(level_signal, dtype=float))
    N = len(x)
    approx = _approximations(x, coeffs.family, len(coeffs.details))
    out = []
    for k in range(len(coeffs.details)):
        a = approx[len(coeffs.details) - 1 - k]
        out.append(np.abs(a) * np.sqrt(len(a) / N))
    return out


def compute_thresholds(coeffs: WaveletCoeffSet, level_signal, C_scale: float = 1.0, T: int | None = None):
    """Attach thresholds ``rho_{i,kappa}`` to ``coeffs``.

    ``rho = C_scale * T**-0.5 * ell_{i,kappa} * sqrt(2 log |J_T|)`` where ``ell``
    is the local weighted average of ``level_signal`` (see :func:`local_levels`).
    Coefficients live on the grid ``dlambda = 2 pi / T``; the threshold is
    converted to those units by ``1 / sqrt(dlambda)``.
    """
    T = T if T is not None else (coeffs.T or coeffs.N)
    if not coeffs.admissible:
        admissible_set(coeffs, T, coeffs.C, coeffs.delta)
    size = coeffs.index_set_size
    factor = np.sqrt(2.0 * np.log(size)) if size > 1 else 0.0
    dlam = 2.0 * np.pi / T
    scale = C_scale * T**-0.5 * factor / np.sqrt(dlam)
    coeffs.thresholds = [scale * ell for ell in local_levels(level_signal, coeffs)]
    return coeffs


def threshold(alpha, rho, rule: str = "soft"):
    """Soft ``sign(a) max(|a| - rho, 0)`` or hard ``a 1{|a| > rho}`` shrinkage."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("threshold must be non-negative")
    a = np.asarray(alpha, dtype=float)
    if rule == "soft":
        out = np.sign(a) * np.maximum(np.abs(a) - rho, 0.0)
    elif rule == "hard":
        out = np.where(np.abs(a) > rho, a, 0.0)
    else:
        raise ValueError(f"unknown threshold rule {rule!r}")
    return out[()] if out.ndim == 0 else out


def apply_thresholds(coeffs: WaveletCoeffSet, rule: str = "soft") -> WaveletCoeffSet:
    """Shrink admissible details; details outside the admissible set are dropped."""
    thr = coeffs.thresholds or [np.zeros_like(d) for d in coeffs.details]
    flags = coeffs.admissible or [True] * len(coeffs.details)
    details = [
        threshold(d, r, rule) if ok else np.zeros_like(d)
        for d, r, ok in zip(coeffs.details, thr, flags)
    ]
    return WaveletCoeffSet(
        coeffs.family, coeffs.n, coeffs.approx.copy(), details, coeffs.thresholds,
        coeffs.C, coeffs.delta, coeffs.T, coeffs.index_set_size, list(flags),
    )


def wavelet_smooth(signal, level_signal, T: int, C: float = 1.0, delta: float = 0.01,
                   rule: str = "hard", family: str = "haar", C_scale: float = 1.0) -> np.ndarray:
    """Denoise one real sequence by thresholding its wavelet details."""
    coeffs = admissible_set(dwt_forward(signal, family), T, C, delta)
    compute_thresholds(coeffs, level_signal, C_scale, T)
    return dwt_inverse(apply_thresholds(coeffs, rule))


def hermitian_psd(M: np.ndarray, floor: float = PSD_FLOOR) -> np.ndarray:
    """Symmetrize ``(M + M^H) / 2`` and zero eigenvalues below ``floor``."""
    H = 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))
    if H.shape[-1] == 1:
        r = H.real
        return np.where(r < floor, 0.0, r).astype(complex)
    w, V = np.linalg.eigh(H)
    w = np.where(w < floor, 0.0, w)
    out = (V * w[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def wavelet_spectrum(X, freqs=None, C: float = 1.0, delta: float = 0.01, rule: str = "hard",
                     family: str = "haar", C_scale: float = 1.0, repair: bool = True) -> SpectralMatrixSeries:
    """Wavelet-thresholded periodogram at the requested Fourier frequencies.

    Each entry ``(p, q)`` of the periodogram is laid out over the full circle
    ``j = 0 .. T-1`` (a genuinely periodic sequence, which suits the periodized
    transform), and its real and imaginary parts are denoised separately. The
    zero frequency, annihilated by mean-centring, is filled with ``I(lambda_1)``.
    Thresholds for entry ``(p, q)`` scale with ``sqrt(ell_pp * ell_qq)``, the
    local levels of the two auto-spectra.
    """
    X = _as_matrix(X)
    T, l = X.shape
    if C <= 0 or delta <= 0:
        raise ValueError("C and delta must be positive")
    j = _freq_index(freqs, T)
    I = full_periodogram(X)
    I[0] = I[1].real
    J = np.zeros((T, l, l), dtype=complex)

    proto = admissible_set(dwt_forward(I[:, 0, 0].real, family), T, C, delta)
    levels = [local_levels(I[:, p, p].real, proto) for p in range(l)]
    size = proto.index_set_size
    factor = np.sqrt(2.0 * np.log(size)) if size > 1 else 0.0
    scale = C_scale * T**-0.5 * factor / np.sqrt(2.0 * np.pi / T)
    for p in range(l):
        for q in range(p, l):
            thr = [scale * np.sqrt(a * b) for a, b in zip(levels[p], levels[q])]
            parts = [I[:, p, q].real] + ([I[:, p, q].imag] if p != q else [])
            smoothed = []
            for sig in parts:
                c = dwt_forward(sig, family)
                c.admissible, c.index_set_size = proto.admissible, size
                c.C, c.delta, c.T = C, delta, T
                c.thresholds = thr
                smoothed.append(dwt_inverse(apply_thresholds(c, rule)))
            val = smoothed[0] + (1j * smoothed[1] if p != q else 0.0)
            J[:, p, q] = val
            J[:, q, p] = np.conj(val)
    out = J[j]
    if repair:
        out = hermitian_psd(out)
    return SpectralMatrixSeries(j, out, T, "wavelet")


def spectrum(X, freqs=None, backend: str = "wavelet", **kwargs) -> SpectralMatrixSeries:
    """Dispatch to one of the three estimators by name."""
    if backend == "wavelet":
        return wavelet_spectrum(X, freqs, **kwargs)
    if backend == "periodogram":
        return periodogram(X, freqs)
    if backend == "tapered":
        return tapered_periodogram(X, freqs)
    raise ValueError(f"unknown spectral backend {backend!r}")


def arfima_spectrum(lam, d: float, sigma2: float = 1.0) -> np.ndarray:
    """True spectral density ``sigma2 |1 - e^{i lambda}|^{-2d} / (2 pi)``."""
    lam = np.asarray(lam, dtype=float)
    return sigma2 * np.abs(2.0 * np.sin(lam / 2.0)) ** (-2.0 * d) / (2.0 * np.pi)
