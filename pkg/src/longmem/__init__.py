"""Multivariate long-memory estimation with wavelet-smoothed spectra.

Fractional filters, synthetic generators, spectral estimators, local
Whittle-type memory estimators (ASE, GSE, TSE), averaged-memory tests and a
long-dependent state-space forecaster.
"""

from .estimators import EstimationError, EstimatorConfig, MemoryEstimate, asymptotic_sigma, estimate
from .fracdiff import Direction, FracCoeffs, apply_fracdiff, frac_coeffs, phase_operator
from .hypothesis import TestReport, averaged_memory, test_efficiency, test_memorability
from .io import read_csv, write_csv, write_json
from .ldss import (ForecastDistribution, LdssFitError, LdssModel, coverage_percentage, ldss_fit,
                   ldss_forecast, ldss_simulate)
from .montecarlo import ExperimentPlan, run_calibration, run_table1
from .simulate import ArmaSpec, SourceSpec, gen_arfima, gen_arise, gen_arise_arma, gen_lorenz, gen_source
from .spectral import (SpectralMatrixSeries, periodogram, spectrum, tapered_periodogram,
                       wavelet_spectrum)

__version__ = "0.1.0"

__all__ = [
    "ArmaSpec", "Direction", "EstimationError", "EstimatorConfig", "ExperimentPlan",
    "ForecastDistribution", "FracCoeffs", "LdssFitError", "LdssModel", "MemoryEstimate",
    "SourceSpec", "SpectralMatrixSeries", "TestReport", "apply_fracdiff", "asymptotic_sigma",
    "averaged_memory", "coverage_percentage", "estimate", "frac_coeffs", "gen_arfima",
    "gen_arise", "gen_arise_arma", "gen_lorenz", "gen_source", "ldss_fit", "ldss_forecast",
    "ldss_simulate", "periodogram", "phase_operator", "read_csv", "run_calibration",
    "run_table1", "spectrum", "tapered_periodogram", "test_efficiency", "test_memorability",
    "wavelet_spectrum", "write_csv", "write_json",
]
