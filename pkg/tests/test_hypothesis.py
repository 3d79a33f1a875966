import numpy as np
import pytest

from longmem.estimators import MemoryEstimate, asymptotic_sigma, estimate
from longmem.hypothesis import averaged_memory, test_efficiency as efficiency, test_memorability as memorability
from longmem.simulate import gen_arfima


def _est(d, info, m):
    d = np.asarray(d, float)
    info = np.atleast_2d(info)
    return MemoryEstimate(d, np.eye(len(d)), info, np.linalg.inv(info) / m, 0.0, "ASE", m, 4 * m)


def test_averaged_memory_examples():
    dbar, _ = averaged_memory(_est([0.1, 0.3], asymptotic_sigma(np.eye(2)), 100))
    assert dbar == pytest.approx(0.2)
    _, se = averaged_memory(_est([0.2], [[4.0]], 100))
    assert se == pytest.approx(0.05)
    S = asymptotic_sigma(np.eye(2))
    _, se = averaged_memory(_est([0.1, 0.3], S, 400))
    one = np.ones(2)
    assert se > 0
    assert se == pytest.approx(np.sqrt(one @ np.linalg.solve(S, one)) / (2 * 20))


def test_singular_information_rejected():
    e = _est([0.1, 0.2], np.eye(2), 100)
    e.information = np.ones((2, 2))
    with pytest.raises(ValueError):
        averaged_memory(e)


def test_white_noise_size():
    fails = sum(not efficiency(np.random.default_rng(s).standard_normal(2**16)).rejected for s in range(200))
    assert fails >= 180


def test_arfima_power():
    hits = sum(efficiency(gen_arfima(0.2, 2**12, seed=s)).rejected for s in range(200))
    assert hits >= 180


def test_moderate_memory_detected():
    assert efficiency(gen_arfima(0.142, 2**14, seed=3)).rejected


def test_report_invariants():
    rep = efficiency(gen_arfima(0.05, 1024, seed=4))
    assert 0 <= rep.p_value <= 1
    assert rep.rejected == (rep.p_value < rep.level)
    assert rep.hypothesis == "efficiency"
    assert "efficiency" in rep.summary()
    assert set(rep.to_dict()) >= {"statistic", "std_error", "p_value", "level", "verdict"}


def test_p_value_decreases_with_z():
    reps = [efficiency(gen_arfima(d, 2048, seed=5)) for d in (-0.1, 0.0, 0.1, 0.2, 0.3)]
    z = [r.z for r in reps]
    p = [r.p_value for r in reps]
    order = np.argsort(z)
    assert np.all(np.diff(np.asarray(p)[order]) <= 0)


def test_verdict_invariant_to_rescaling():
    X = gen_arfima([0.1, 0.2], 2048, seed=6)
    a, b = efficiency(X), efficiency(1e3 * X)
    assert a.verdict == b.verdict
    assert a.statistic == pytest.approx(b.statistic, abs=1e-6)


def test_memorability_self_comparison():
    X = gen_arfima([0.2, 0.3], 4096, seed=7)
    ref = estimate(X).d_hat.mean()
    rep = memorability(X, ref)
    assert rep.statistic == pytest.approx(0.0, abs=1e-12)
    assert not rep.rejected


def test_memorability_detects_lost_memory():
    rep = memorability(np.random.default_rng(8).standard_normal(4096), 0.3)
    assert rep.rejected and rep.statistic < -0.2


def test_memorability_null_calibration():
    keep = sum(not memorability(gen_arfima(0.3, 4096, seed=s), 0.3).rejected for s in range(100))
    assert keep >= 85


def test_memorability_rejects_nonfinite_reference():
    with pytest.raises(ValueError):
        memorability(gen_arfima(0.3, 256, seed=9), np.nan)


def test_standard_error_matches_monte_carlo_spread():
    draws = [estimate(gen_arfima(0.2, 4096, seed=s)) for s in range(100)]
    mc_sd = np.std([e.d_hat[0] for e in draws], ddof=1)
    se = averaged_memory(draws[0])[1]
    assert 0.5 < mc_sd / se < 2
