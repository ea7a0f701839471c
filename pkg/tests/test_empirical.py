import numpy as np
import pytest
from hypothesis import given, strategies as st

from clusterclt.empirical import (DegenerateNormalizationError, SampleSizeError, block_values,
                                  covariance_from_values, empirical_cluster_covariance, empirical_process,
                                  w_vectors)
from clusterclt.functionals import ExceedanceCount, ExtremogramFunctional
from clusterclt.lattice import BlockGrid, Field, LatticeShape
from clusterclt.relevance import NormExceedance, scale_field

A = NormExceedance(1.0)


def first_entry(block):
    return float(np.asarray(block)[(0,) * (block.ndim - 1)][0])


def grid_for(x, r):
    return BlockGrid(LatticeShape(x.shape[:-1]), r)


def test_zero_field():
    nf = scale_field(Field.scalar(np.zeros((6, 6, 4))), 1.0)
    z = empirical_process(nf, grid_for(nf.values, (3, 3, 2)), ExceedanceCount(A), 0.1)
    assert z.value == 0.0
    assert all(np.all(w.components == 0) for w in w_vectors(nf, grid_for(nf.values, (3, 3, 2)),
                                                              [ExceedanceCount(A)], 0.1))


def test_single_block_analytic_mean():
    nf = scale_field(Field.scalar(np.full((2, 2), 3.0)), 1.0)
    z = empirical_process(nf, grid_for(nf.values, (2, 2)), ExceedanceCount(A), 0.5, mean=4.0)
    assert z.value == 0.0 and z.centering == "analytic"


def test_thirty_six_blocks_by_hand():
    vals = np.random.default_rng(4).integers(0, 6, 36).astype(float)
    nf = scale_field(Field.scalar(vals), 1.0)
    g = grid_for(nf.values, (1,))
    v_n = 100 / 36                      # n_n v_n = 100
    z = empirical_process(nf, g, first_entry, v_n, mean=2.0)
    by_hand = sum(v - 2.0 for v in vals) / 10.0
    assert z.value == pytest.approx(by_hand, abs=1e-12)
    assert z.block_count == 36


def test_plugin_centering_is_centered_sum():
    rng = np.random.default_rng(5)
    nf = scale_field(Field.scalar(rng.pareto(1.0, (8, 8, 6))), 3.0)
    z = empirical_process(nf, grid_for(nf.values, (4, 4, 3)), ExceedanceCount(A), 0.3)
    assert z.centering == "plugin"
    assert abs(z.value) < 1e-12


def test_zero_v_n():
    nf = scale_field(Field.scalar(np.ones((4, 4))), 1.0)
    with pytest.raises(DegenerateNormalizationError):
        empirical_process(nf, grid_for(nf.values, (2, 2)), ExceedanceCount(A), 0.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_summation_identity(seed, k):
    rng = np.random.default_rng(seed)
    nf = scale_field(Field.scalar(rng.pareto(1.0, (9, 9, 8))), 4.0)
    g = grid_for(nf.values, (3, 3, 4))
    fs = [ExtremogramFunctional(A, A, 0, 0), ExtremogramFunctional(A, A, 1, 1), ExceedanceCount(A)][:k]
    means = rng.uniform(0, 1, k)
    ws = w_vectors(nf, g, fs, 0.1, mean=means)
    total = np.sum([w.components for w in ws], axis=0)
    zs = [empirical_process(nf, g, f, 0.1, mean=mu).value for f, mu in zip(fs, means)]
    np.testing.assert_allclose(total, zs, rtol=0, atol=1e-12)
    assert [w.index for w in ws] == list(g.indices())


def test_linearity():
    rng = np.random.default_rng(8)
    nf = scale_field(Field.scalar(rng.pareto(1.0, (6, 6, 4))), 2.0)
    g = grid_for(nf.values, (3, 3, 2))
    f = ExceedanceCount(A)
    z1 = empirical_process(nf, g, f, 0.2, mean=1.5).value
    z3 = empirical_process(nf, g, lambda b: 3 * f(b), 0.2, mean=4.5).value
    assert z3 == pytest.approx(3 * z1, abs=1e-12)


def test_block_values_columns():
    rng = np.random.default_rng(1)
    nf = scale_field(Field.scalar(rng.pareto(1.0, (6, 6, 4))), 2.0)
    g = grid_for(nf.values, (3, 3, 2))
    bv = block_values(nf, g, [ExceedanceCount(A), first_entry])
    assert bv.shape == (8, 2)


def constant(block):
    return 1.0


def test_cluster_covariance_examples():
    blocks = np.zeros((5, 2, 2, 1))
    assert empirical_cluster_covariance(blocks, constant, constant, 4, 0.1).value == 0.0
    two = np.zeros((2, 1, 1))
    two[1] = 1.0
    c = empirical_cluster_covariance(two, first_entry, first_entry, 2, 0.25)
    assert c.value == pytest.approx(0.5 / 0.5)
    with pytest.raises(SampleSizeError):
        empirical_cluster_covariance(two[:1], first_entry, first_entry, 2, 0.25)


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=30))
def test_covariance_symmetric_and_psd(pairs):
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    assert covariance_from_values(x, y) == covariance_from_values(y, x)
    assert covariance_from_values(x, x) >= 0
