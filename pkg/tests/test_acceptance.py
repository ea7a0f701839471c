"""Acceptance criteria, one test per criterion, each at its stated tolerance and budget.

Every test records a one-line verdict; ``conftest.py`` prints them at the end of the run.
Seeds are fixed constants chosen before the runs; nothing here is tuned to an outcome.
"""
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from clusterclt import cli
from clusterclt.diagnostics import draw_w, estimate_delta_n, estimate_T, field_source, moment_sums
from clusterclt.empirical import empirical_process, w_vectors
from clusterclt.extremogram import NoExceedanceError, estimate_direct, estimate_via_blocks
from clusterclt.functionals import BlockSum, ExceedanceCount, ExtremogramFunctional, check_cluster_property
from clusterclt.harness import EstimatorConfig, normality_diagnostics, run_clt_experiment
from clusterclt.lattice import BlockGrid, Field, LatticeShape
from clusterclt.relevance import NormExceedance, normalize_field
from clusterclt.simulate import GeneratorSpec

A = NormExceedance(1.0)
DATA = Path(__file__).parent / "data"
VERDICTS = {}


def record(n, ok, text):
    line = f"[criterion {n:>2}] {'PASS' if ok else 'FAIL'}  {text}"
    VERDICTS[n] = line
    print(line)
    return ok


def random_normalized_fields(count, shape, seed, k_n=10.0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield normalize_field(Field.scalar(rng.pareto(1.0, shape) + 1.0), k_n)


def test_criterion_01_rewrite_identity():
    t0 = time.perf_counter()
    shape, r = (12, 12, 20), (4, 4, 5)
    grid = BlockGrid(LatticeShape(shape), r)
    worst, undefined = 0.0, 0
    for nf in random_normalized_fields(100, shape, seed=101):
        try:
            d = estimate_direct(nf, grid, A, A, 1, 4)
        except NoExceedanceError:
            undefined += 1
            with pytest.raises(NoExceedanceError):
                estimate_via_blocks(nf, grid, A, A, 1, 4)
            continue
        b = estimate_via_blocks(nf, grid, A, A, 1, 4)
        worst = max(worst, float(np.abs(d.values - b.values).max()), float(np.abs(d.numerator - b.numerator).max()))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-12 and secs < 60
    assert record(1, ok, f"rewrite identity: max |direct - blocks| = {worst:.3g} over 100 fields "
                         f"({undefined} undefined), {secs:.1f}s")


def random_block(rng, shape):
    clutter = rng.uniform(-0.95, 0.95, shape)
    hit = rng.random(shape) < rng.uniform(0.02, 0.3)
    return np.where(hit, np.sign(rng.standard_normal(shape)) * (1.0 + rng.pareto(1.0, shape)), clutter)


def test_criterion_02_cluster_property():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    B2 = NormExceedance(2.0)
    shipped = [ExtremogramFunctional(A, B, h1, h2) for B in (A, B2) for h1 in (0, 1, 2) for h2 in (0, 1, 3)]
    shipped.append(ExceedanceCount(A))
    failures = 0
    for f in shipped:
        for _ in range(1000):
            y = random_block(rng, (5, 5, 4, 1))
            failures += not check_cluster_property(f, y, f.support)
    planted = [not check_cluster_property(BlockSum(), random_block(rng, (5, 5, 4, 1)), A) for _ in range(1000)]
    secs = time.perf_counter() - t0
    ok = failures == 0 and any(planted) and secs < 30
    assert record(2, ok, f"cluster property: {len(shipped)} shipped functionals x 1000 blocks, "
                         f"{failures} violations; planted non-cluster fails on {sum(planted)}/1000, {secs:.1f}s")


def test_criterion_03_trivial_pin():
    t0 = time.perf_counter()
    shape = (12, 12, 20)
    grid = BlockGrid(LatticeShape(shape), (4, 4, 5))
    checked = bad = 0
    for nf in random_normalized_fields(500, shape, seed=303):
        try:
            est = estimate_direct(nf, grid, A, A, 0, 0)
        except NoExceedanceError:
            continue
        checked += 1
        bad += est.values[0, 0] != 1.0
    secs = time.perf_counter() - t0
    ok = bad == 0 and checked > 0 and secs < 30
    assert record(3, ok, f"rho_hat(0,0) = 1 on {checked - bad}/{checked} defined fields of 500, {secs:.1f}s")


@pytest.fixture(scope="module")
def iid_run():
    t0 = time.perf_counter()
    rep = run_clt_experiment(GeneratorSpec("iid-pareto", (24, 24, 40), alpha=1.0),
                             EstimatorConfig((6, 6, 8), 2, 4, k_n=10.0), 200, seed=4)
    return rep, time.perf_counter() - t0


def test_criterion_04_iid_oracle(iid_run):
    rep, secs = iid_run
    assert rep.scale.method == "analytic" and rep.scale.u_n == pytest.approx(10.0)
    assert rep.scale.v_n == pytest.approx(0.1)
    mean = rep.raw.mean(axis=0)
    se = rep.raw.std(axis=0, ddof=1) / np.sqrt(rep.raw.shape[0])
    misses = []
    for j, (hs, ht) in enumerate(rep.lags):
        target = 1.0 if (hs, ht) == (0, 0) else 0.1
        if (hs, ht) != (0, 0) and ht == 0:
            continue                                   # criterion grid is [0:2] x [1:4] plus (0,0)
        z = (mean[j] - target) / se[j] if se[j] > 0 else (0.0 if mean[j] == target else np.inf)
        if abs(z) > 3:
            misses.append(f"({hs},{ht}) z={z:+.1f}")
    ok = not misses and secs < 300
    assert record(4, ok, f"iid oracle match, 200 replicates: {13 - len(misses)}/13 lags within 3 stderr"
                         + (f"; outside: {', '.join(misses)}" if misses else "") + f", {secs:.1f}s")


@pytest.fixture(scope="module")
def independent_draws():
    t0 = time.perf_counter()
    spec = GeneratorSpec("iid-pareto", (12, 12, 20), alpha=1.0)
    src = field_source(spec, (4, 4, 5), [ExtremogramFunctional(A, A, 0, 0)], 10.0, A, pilot_seed=5)
    w = draw_w(src, 2000, seed=505)
    return w, moment_sums(w, 1.0), time.perf_counter() - t0


def test_criterion_05_gap_bound(independent_draws):
    w, s, secs = independent_draws
    t0 = time.perf_counter()
    parts, ok = [], True
    zero = estimate_delta_n(w, [0.0], seed=50)
    ok &= zero.value == 0.0
    for i, t in enumerate((0.5, 1.0, 2.0)):
        d = estimate_delta_n(w, [t], seed=51 + i)
        bound = 6 * t ** 3 * s.A_n
        slack = 3 * np.hypot(d.stderr, 6 * t ** 3 * s.A_n_stderr)
        ok &= d.value <= bound + slack
        parts.append(f"t={t}: {d.value:.4f} <= {bound:.4f}+{slack:.4f}")
    secs += time.perf_counter() - t0
    ok &= secs < 120
    assert record(5, ok, f"moment bound on the Gaussian gap (independent blocks, 2000 replicates): Delta(0)={zero.value}; "
                         + "; ".join(parts) + f", {secs:.1f}s")


def test_criterion_06_covariance_bound(independent_draws):
    w, s, secs = independent_draws
    t0 = time.perf_counter()
    parts, ok = [], True
    for i, t in enumerate((0.5, 1.0, 2.0)):
        T = estimate_T(w, [t])
        d = estimate_delta_n(w, [t], seed=51 + i)
        ok &= T.value <= 3 * T.stderr
        bound = T.value + 6 * t ** 3 * s.A_n
        slack = 3 * np.sqrt(d.stderr ** 2 + T.stderr ** 2 + (6 * t ** 3 * s.A_n_stderr) ** 2)
        ok &= d.value <= bound + slack
        parts.append(f"t={t}: T={T.value:.4f} (3se {3 * T.stderr:.4f}), Delta {d.value:.4f} <= {bound:.4f}+{slack:.4f}")
    secs += time.perf_counter() - t0
    ok &= secs < 120
    assert record(6, ok, "covariance bound and T under independence: " + "; ".join(parts) + f", {secs:.1f}s")


def test_criterion_07_summation_identity():
    t0 = time.perf_counter()
    shape = (12, 12, 20)
    grid = BlockGrid(LatticeShape(shape), (4, 4, 5))
    fs = [ExtremogramFunctional(A, A, 0, 0), ExtremogramFunctional(A, A, 1, 1), ExceedanceCount(A)]
    means = [0.5, 0.04, 8.0]                         # exact block means for iid fields with v = 0.1
    worst = 0.0
    for nf in random_normalized_fields(100, shape, seed=707):
        total = np.sum([w.components for w in w_vectors(nf, grid, fs, 0.1, mean=means)], axis=0)
        z = [empirical_process(nf, grid, f, 0.1, mean=mu).value for f, mu in zip(fs, means)]
        worst = max(worst, float(np.abs(total - z).max()))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-12 and secs < 30
    assert record(7, ok, f"summation identity, k=3, 100 fields: max |sum W - Z| = {worst:.3g}, {secs:.1f}s")


def test_criterion_08_desk_clt():
    t0 = time.perf_counter()
    spec = GeneratorSpec("max-moving-maxima", (24, 24, 60), weights=[[[1.0, 1.0]]])
    rep = run_clt_experiment(spec, EstimatorConfig((6, 6, 10), 0, 1, k_n=10.0), 300, seed=8)
    m = rep.moments[rep.lag_index(0, 1)]
    selftest = normality_diagnostics(np.random.default_rng(808).standard_normal(500))
    secs = time.perf_counter() - t0
    ok = m.passes(0.4, 0.8, 0.10) and selftest.passes(0.3, 0.6, 0.08) and secs < 600
    assert record(8, ok, f"desk CLT at lag (0,1), {m.n} replicates: skew {m.skewness:+.3f}, "
                         f"ex.kurt {m.excess_kurtosis:+.3f}, KS {m.ks_distance:.3f}; self-test skew "
                         f"{selftest.skewness:+.3f}, ex.kurt {selftest.excess_kurtosis:+.3f}, "
                         f"KS {selftest.ks_distance:.3f}, {secs:.1f}s")


def test_criterion_09_sigma_crosscheck(iid_run):
    rep, _ = iid_run
    bad, lo, hi = [], np.inf, -np.inf
    for j, lag in enumerate(rep.lags):
        if lag == (0, 0):
            continue                                   # variance and Sigma both vanish: 0/0
        q = rep.sigma_ratio[j]
        lo, hi = min(lo, q), max(hi, q)
        if not 0.5 <= q <= 2.0:
            bad.append(f"{lag} ratio {q:.3f}")
    ok = not bad
    assert record(9, ok, f"variance / Sigma diagonal over 14 lags in [{lo:.3f}, {hi:.3f}]"
                         + (f"; outside [0.5, 2]: {', '.join(bad)}" if bad else ""))


REPRO = [
    ("simulate", "simulate_fixture.json", ["field.bin", "simulate.json"]),
    ("estimate", "estimate_fixture.json", ["extremogram.csv", "estimate.json"]),
    ("diagnose", "diagnose_fixture.json", ["diagnostics.json"]),
]


def test_criterion_10_reproducibility(tmp_path):
    t0 = time.perf_counter()
    mismatched = []
    for sub, cfg, outputs in REPRO:
        for run in ("a", "b"):
            work = tmp_path / f"{sub}_{run}"
            work.mkdir()
            src = json.loads((DATA / cfg).read_text())
            if "field" in src:
                src["field"] = str(DATA / src["field"])
            (work / "cfg.json").write_text(json.dumps(src))
            assert cli.main([sub, "--config", str(work / "cfg.json"), "--out", str(work / "out")]) == 0
        for o in outputs:
            if (tmp_path / f"{sub}_a" / "out" / o).read_bytes() != (tmp_path / f"{sub}_b" / "out" / o).read_bytes():
                mismatched.append(f"{sub}/{o}")
    golden = (tmp_path / "estimate_a" / "out" / "extremogram.csv").read_bytes() == \
        (DATA / "estimate_golden.csv").read_bytes()
    secs = time.perf_counter() - t0
    ok = not mismatched and golden and secs < 60
    assert record(10, ok, f"reproducibility on 3 fixture configs: {len(mismatched)} mismatched outputs, "
                          f"golden CSV {'identical' if golden else 'differs'}, {secs:.1f}s")
