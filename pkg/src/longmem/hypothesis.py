"""One-sided tests on the averaged memory statistic ``mean(d_hat)``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .estimators import EstimatorConfig, MemoryEstimate, estimate


@dataclass
class TestReport:
    statistic: float
    std_error: float
    z: float
    p_value: float
    level: float
    verdict: str
    hypothesis: str
    dbar: float
    reference_dbar: float = 0.0

    __test__ = False  # keep pytest from collecting this class

    @property
    def rejected(self) -> bool:
        return self.verdict == "reject"

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        if self.hypothesis == "efficiency":
            if self.rejected:
                tail = "long memory detected: market consistent with efficiency"
            else:
                tail = "no evidence of long memory"
        else:
            tail = ("transformed series under-represents the reference memory"
                    if self.rejected else "no memory deficit detected")
        return (f"{self.hypothesis}: statistic={self.statistic:.6g} se={self.std_error:.4g} "
                f"p={self.p_value:.4g} -> {self.verdict} at level {self.level:g} ({tail})")


def averaged_memory(est: MemoryEstimate) -> tuple[float, float]:
    """``dbar = 1'd/l`` and its standard error ``sqrt(1' Sigma^{-1} 1) / (l sqrt(m))``."""
    l = est.l
    one = np.ones(l)
    try:
        v = float(one @ np.linalg.solve(est.information, one))
    except np.linalg.LinAlgError as exc:
        raise ValueError("information matrix is singular") from exc
    if v <= 0:
        raise ValueError("information matrix is not positive definite along 1")
    return float(est.d_hat.mean()), float(np.sqrt(v) / (l * np.sqrt(est.m)))


def _report(stat, se, tail, level, hypothesis, dbar, ref) -> TestReport:
    z = stat / se
    p = float(norm.sf(z) if tail == "upper" else norm.cdf(z))
    return TestReport(
        statistic=float(stat), std_error=float(se), z=float(z), p_value=p, level=level,
        verdict="reject" if p < level else "fail_to_reject", hypothesis=hypothesis,
        dbar=float(dbar), reference_dbar=float(ref),
    )


def test_efficiency(X, config: EstimatorConfig | None = None, level: float = 0.05,
                    method: str = "ASE") -> TestReport:
    """H0: ``dbar = 0`` against the long-memory alternative ``dbar > 0``."""
    dbar, se = averaged_memory(estimate(X, config, method))
    return _report(dbar, se, "upper", level, "efficiency", dbar, 0.0)


def test_memorability(transformed, reference_dbar: float, config: EstimatorConfig | None = None,
                      level: float = 0.05, method: str = "ASE") -> TestReport:
    """H0: ``dbar - dbar* = 0`` against ``dbar - dbar* < 0`` on a model's output series."""
    if not np.isfinite(reference_dbar):
        raise ValueError("reference dbar must be finite")
    dbar, se = averaged_memory(estimate(transformed, config, method))
    return _report(dbar - reference_dbar, se, "lower", level, "memorability", dbar, reference_dbar)


test_efficiency.__test__ = False
test_memorability.__test__ = False
