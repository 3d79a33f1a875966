"""Fractional differencing coefficients and the low-frequency phase operator.

The backshift polynomial ``(1 - B)^d`` is expanded by the binomial series

    (1 - B)^d = sum_j c_j B^j,   c_0 = 1,   c_j = c_{j-1} * (j - 1 - d) / j

and its inverse ``(1 - B)^{-d}`` by the Gamma-ratio series

    c_j = Gamma(d + j) / (Gamma(d) j!) = c_{j-1} * (d + j - 1) / j.

Both are evaluated with the ratio recursion so that large lags never touch
the Gamma function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Direction(str, Enum):
    DIFFERENCE = "difference"
    INVERSE = "inverse"


@dataclass(frozen=True)
class FracCoeffs:
    """Truncated expansion ``c_0 .. c_M`` of ``(1 - B)^{+-d}``."""

    d: float
    coeffs: np.ndarray
    direction: Direction

    @property
    def lag(self) -> int:
        return len(self.coeffs) - 1


def frac_coeffs(d: float, M: int, direction: Direction | str = Direction.DIFFERENCE) -> FracCoeffs:
    """Return the first ``M + 1`` coefficients of ``(1 - B)^d`` or ``(1 - B)^{-d}``.

    Parameters
    ----------
    d : float
        Memory parameter.
    M : int
        Truncation lag (inclusive).
    direction : {"difference", "inverse"}
        ``difference`` expands ``(1 - B)^d``; ``inverse`` expands ``(1 - B)^{-d}``.

    Examples
    --------
    >>> frac_coeffs(0.4, 4).coeffs.round(4).tolist()
    [1.0, -0.4, -0.12, -0.064, -0.0416]
    """
    if M < 0:
        raise ValueError("truncation lag M must be non-negative")
    if not np.isfinite(d):
        raise ValueError("d must be finite")
    direction = Direction(direction)
    j = np.arange(1, M + 1, dtype=float)
    if direction is Direction.DIFFERENCE:
        ratios = (j - 1.0 - d) / j
    else:
        ratios = (d + j - 1.0) / j
    coeffs = np.empty(M + 1)
    coeffs[0] = 1.0
    # cumulative product is the recursion written out; identical rounding to a loop
    coeffs[1:] = np.cumprod(ratios)
    return FracCoeffs(float(d), coeffs, direction)


def apply_fracdiff(series, coeffs: FracCoeffs | np.ndarray) -> np.ndarray:
    """Causal filter ``y_t = sum_{j <= min(t, M)} c_j x_{t-j}``.

    Values before the first observation are taken as zero. A 2-D input is
    filtered column by column with the same coefficients.
    """
    x = np.asarray(series, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("cannot filter an empty series")
    c = coeffs.coeffs if isinstance(coeffs, FracCoeffs) else np.asarray(coeffs, dtype=float)
    T = x.shape[0]
    c = c[:T]
    if x.ndim == 1:
        return _causal_convolve(x, c)
    return np.column_stack([_causal_convolve(x[:, i], c) for i in range(x.shape[1])])


def _causal_convolve(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    T = len(x)
    if len(c) <= 64:
        return np.convolve(x, c)[:T]
    n = 1 << int(np.ceil(np.log2(T + len(c) - 1)))
    out = np.fft.irfft(np.fft.rfft(x, n) * np.fft.rfft(c, n), n)
    return out[:T]


def phase_operator(d, lam):
    """``lambda^{-d} * exp(i (pi - lambda) d / 2)``, broadcasting over inputs.

    This is the leading term of ``(1 - exp(i lambda))^{-d}`` near the origin;
    the diagonal matrix ``Psi_j(d)`` is assembled from it componentwise.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("frequency must be strictly positive")
    d = np.asarray(d, dtype=float)
    out = lam ** (-d) * np.exp(0.5j * (np.pi - lam) * d)
    return out[()] if out.ndim == 0 else out
