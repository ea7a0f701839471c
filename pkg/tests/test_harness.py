import numpy as np
import pytest
from scipy.special import ndtri

from clusterclt.functionals import ExceedanceCount, ExtremogramFunctional
from clusterclt.harness import (ConfigurationError, DegenerateSampleError, EstimatorConfig, fidis_check,
                                normality_diagnostics, path_sweep, report_summary, run_clt_experiment)
from clusterclt.relevance import NormExceedance
from clusterclt.simulate import GeneratorSpec

A = NormExceedance(1.0)
IID = GeneratorSpec("iid-pareto", (24, 24, 40))


def test_constant_sample_is_degenerate():
    with pytest.raises(DegenerateSampleError):
        normality_diagnostics(np.full(20, 3.0))
    with pytest.raises(ValueError):
        normality_diagnostics(np.arange(5.0))


def test_two_point_moments():
    nd = normality_diagnostics(np.tile([-1.0, 1.0], 50))
    assert nd.skewness == pytest.approx(0.0, abs=1e-12)
    assert nd.excess_kurtosis == pytest.approx(-2.0)
    assert nd.variance == pytest.approx(100 / 99)


def test_exact_quantiles_ks():
    n = 1000
    x = ndtri((np.arange(1, n + 1) - 0.5) / n)
    assert normality_diagnostics(x).ks_distance < 0.01


def test_self_test_iid_normal():
    nd = normality_diagnostics(np.random.default_rng(500).standard_normal(500))
    assert nd.passes(0.3, 0.6, 0.08)


def test_ks_in_unit_interval():
    nd = normality_diagnostics(np.random.default_rng(1).pareto(0.5, 200))
    assert 0.0 <= nd.ks_distance <= 1.0
    assert not nd.passes(0.3, 0.6, 0.08)


SMALL = GeneratorSpec("iid-pareto", (12, 12, 20))
SMALL_CFG = EstimatorConfig((4, 4, 5), 1, 2, 10.0, mc_pairs=20_000)


def test_report_is_deterministic():
    a = run_clt_experiment(SMALL, SMALL_CFG, 30, seed=7)
    b = run_clt_experiment(SMALL, SMALL_CFG, 30, seed=7, threads=1)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert report_summary(a) == report_summary(b)
    c = run_clt_experiment(SMALL, SMALL_CFG, 30, seed=8)
    assert c.samples.tobytes() != a.samples.tobytes()


def test_report_fields():
    rep = run_clt_experiment(SMALL, SMALL_CFG, 30, seed=1)
    assert rep.samples.shape == (30, 6)
    assert rep.moments[0] is None                    # (0,0) with B = A is pinned at 1
    assert rep.sigma is not None and rep.sigma.matrix.shape == (6, 6)
    echo = rep.condition_echo
    assert echo["r_n_v_n"] == pytest.approx(80 * 0.1)
    assert echo["rates_ordered"] is True


def test_too_many_drops():
    cfg = EstimatorConfig((4, 4, 5), 0, 1, 10.0, A=NormExceedance(50.0), B=A, mc_pairs=100_000)
    with pytest.raises(ConfigurationError):
        run_clt_experiment(SMALL.with_shape((4, 4, 5)), cfg, 20, seed=0)


def test_iid_desk_scale_centering():
    """Per-lag means against the centering oracle plus the estimator's edge term.

    The numerator runs over ``n3 - h_t`` times and the denominator over ``n3``, so for iid
    fields ``E rho_hat`` is close to ``rho (n3 - h_t) / n3``.  At ``h_t = 0`` that is the
    oracle itself.
    """
    rep = run_clt_experiment(IID, EstimatorConfig((6, 6, 8), 2, 4, 10.0), 300, seed=17)
    n3 = IID.shape[2]
    for j, (hs, ht) in enumerate(rep.lags):
        if (hs, ht) == (0, 0):
            continue
        m = rep.moments[j]
        se = np.sqrt(m.variance / m.n)
        predicted = rep.factor * (-rep.centering[j] * ht / n3)
        assert abs(m.mean - predicted) < 3 * se, (hs, ht)


def test_fidis_covariance():
    fs = [ExtremogramFunctional(A, A, 0, 0), ExceedanceCount(A)]
    fc = fidis_check(SMALL, (4, 4, 5), fs, 10.0, A, 400, seed=2)
    assert fc.sample_cov.shape == (2, 2)
    slack = 3 * np.hypot(fc.sample_cov_stderr, fc.predicted_stderr)
    assert np.all(np.abs(fc.sample_cov - fc.predicted) < slack)


def test_path_sweep():
    out = path_sweep(SMALL, [((12, 12, 20), (4, 4, 5)), ((16, 16, 24), (4, 4, 6))],
                     EstimatorConfig((4, 4, 5), 1, 1, 10.0, mc_pairs=20_000), 20, seed=3)
    assert [s["shape"] for s in out] == [[12, 12, 20], [16, 16, 24]]
    assert all(len(s["lags"]) == 4 for s in out)
