"""Empirical process of cluster functionals over complete blocks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .functionals import evaluate_blocks, functional_name
from .lattice import BlockGrid, block_array


class DegenerateNormalizationError(ValueError):
    pass


class SampleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalProcessValue:
    value: float
    n_n: int
    v_n: float
    block_count: int
    functional: str
    centering: str        # "plugin" or "analytic"
    mean: float


@dataclass(frozen=True)
class WVector:
    components: np.ndarray
    index: tuple[int, ...]


@dataclass(frozen=True)
class ClusterCovariance:
    value: float
    r_n: int
    v_n: float
    replicates: int


def block_values(fld, grid: BlockGrid, fs: Sequence) -> np.ndarray:
    """``f_s(Y_j)`` for every block (rows, lexicographic) and functional (columns)."""
    if tuple(fld.values.shape[:-1]) != grid.shape.dims:
        raise ValueError("grid does not match field shape")
    blocks = block_array(fld.values, grid)
    return np.column_stack([evaluate_blocks(f, blocks) for f in fs])


def _centering(vals: np.ndarray, mean) -> tuple[np.ndarray, str]:
    if mean is None or (isinstance(mean, str) and mean == "plugin"):
        return vals.mean(axis=0), "plugin"
    return np.broadcast_to(np.asarray(mean, dtype=float), vals.shape[1:]).copy(), "analytic"


def _scale(n_n, v_n):
    if not v_n > 0:
        raise DegenerateNormalizationError("v_n must be positive")
    return 1.0 / np.sqrt(n_n * v_n)


def w_matrix(fld, grid: BlockGrid, fs: Sequence, v_n: float, mean=None) -> tuple[np.ndarray, np.ndarray, str]:
    """Per-block standardized vectors as an ``(M, k)`` array, with the centering used."""
    vals = block_values(fld, grid, fs)
    mu, mode = _centering(vals, mean)
    return (vals - mu) * _scale(grid.shape.size, v_n), mu, mode


def w_vectors(fld, grid: BlockGrid, fs: Sequence, v_n: float, mean=None) -> list[WVector]:
    w, _, _ = w_matrix(fld, grid, fs, v_n, mean)
    return [WVector(row, idx) for row, idx in zip(w, grid.indices())]


def empirical_process(fld, grid: BlockGrid, f, v_n: float, mean=None) -> EmpiricalProcessValue:
    """``Z_n(f) = (n_n v_n)^{-1/2} sum_j (f(Y_j) - E f(Y_j))``.

    ``mean`` is the exact block mean ``E f(Y)`` when known; ``None`` or ``"plugin"``
    centers by the average over the observed blocks.
    """
    w, mu, mode = w_matrix(fld, grid, [f], v_n, mean)
    return EmpiricalProcessValue(float(w[:, 0].sum()), grid.shape.size, float(v_n),
                                 grid.n_blocks, functional_name(f), mode, float(mu[0]))


def empirical_cluster_covariance(block_samples, f, g, r_n: int, v_n: float) -> ClusterCovariance:
    """Unbiased sample covariance of ``f(Y), g(Y)`` over independent block draws, over ``r_n v_n``."""
    blocks = np.asarray(block_samples, dtype=float)
    if len(blocks) < 2:
        raise SampleSizeError("need at least two block samples")
    if not r_n * v_n > 0:
        raise DegenerateNormalizationError("r_n v_n must be positive")
    fv = evaluate_blocks(f, blocks)
    gv = fv if g is f else evaluate_blocks(g, blocks)
    return ClusterCovariance(covariance_from_values(fv, gv) / (r_n * v_n), int(r_n), float(v_n), len(blocks))


def covariance_from_values(x: np.ndarray, y: np.ndarray) -> float:
    # symmetric in (x, y) bit-for-bit: the elementwise product commutes
    dx, dy = x - x.mean(), y - y.mean()
    return float(np.sum(dx * dy) / (len(x) - 1))
