"""Lindeberg and block-dependence diagnostics for the empirical process.

Everything here works on replicated draws of the per-block standardized vectors
``W_j = (f(Y_j) - E f(Y_j)) / sqrt(n_n v_n)``, stored as an array of shape
``(replicates, blocks, k)`` with blocks in lexicographic order.  Characteristic-function
quantities use ``h(w) = exp(i <t, w>)``, for which the sup-norms of the second and
third derivatives are ``||t||^2`` and ``||t||^3`` (Euclidean norm).
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .empirical import DegenerateNormalizationError, SampleSizeError
from .functionals import evaluate_blocks
from .lattice import BlockGrid, LatticeShape, block_array
from .relevance import RelevanceSet, scale_field
from .simulate import GeneratorSpec, generate_field, marginal_scale, replicate_seeds


class ParameterError(ValueError):
    pass


# ------------------------------------------------------------------ W draws

@dataclass
class BlockValueSource:
    """Replicable source of raw block values ``f_s(Y_j)``, one ``(M, k)`` array per draw."""

    draw: Callable[[np.random.Generator], np.ndarray]
    m: tuple
    n_n: int
    r_n: int
    v_n: float
    means: np.ndarray | None = None


@dataclass
class WDraws:
    w: np.ndarray           # (R, M, k)
    m: tuple
    n_n: int
    r_n: int
    v_n: float
    means: np.ndarray
    centering: str

    @property
    def replicates(self) -> int:
        return self.w.shape[0]


def _rng(seed_seq) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq))


def draw_w(source: BlockValueSource, replicates: int, seed: int, threads: int | None = None) -> WDraws:
    """Draw replicates and standardize.

    Without known ``source.means`` the centering is the pooled mean over all replicates
    and blocks, which all share one law by stationarity.
    """
    if replicates < 2:
        raise SampleSizeError("need at least two replicates")
    if not source.n_n * source.v_n > 0:
        raise DegenerateNormalizationError("n_n v_n must be positive")
    seqs = replicate_seeds(seed, replicates)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        vals = np.stack(list(ex.map(lambda s: np.asarray(source.draw(_rng(s)), dtype=float), seqs)))
    if source.means is None:
        means, mode = vals.mean(axis=(0, 1)), "pooled"
    else:
        means, mode = np.asarray(source.means, dtype=float), "analytic"
    w = (vals - means) / np.sqrt(source.n_n * source.v_n)
    return WDraws(w, tuple(source.m), source.n_n, source.r_n, source.v_n, means, mode)


def field_source(spec: GeneratorSpec, r: Sequence[int], fs: Sequence, k_n: float, A: RelevanceSet,
                 means=None, pilot_seed: int = 0) -> BlockValueSource:
    """Block values of ``fs`` on fields from ``spec``, normalized by the marginal ``u_n``."""
    ms = marginal_scale(spec, k_n, A, seed=pilot_seed)
    grid = BlockGrid(LatticeShape(spec.shape), tuple(r))

    def draw(rng):
        fld = scale_field(generate_field(spec, rng), ms.u_n, k_n)
        blocks = block_array(fld.values, grid)
        return np.column_stack([evaluate_blocks(f, blocks) for f in fs])

    return BlockValueSource(draw, grid.m, grid.shape.size, grid.r_n, ms.v_n, means)


# ------------------------------------------------------------------ Lindeberg

def lindeberg_from_values(values, r_n: int, v_n: float, n_n: int, eps: float, mean=None) -> float:
    """``(r_n v_n)^{-1} E[(f - Ef)^2 1{|f - Ef| > eps sqrt(n_n v_n)}]`` from sampled ``f(Y)``."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise SampleSizeError("empty sample")
    if not r_n * v_n > 0:
        raise DegenerateNormalizationError("r_n v_n must be positive")
    dev = x - (x.mean() if mean is None else mean)
    big = np.abs(dev) > eps * np.sqrt(n_n * v_n)
    return float(np.mean(dev * dev * big) / (r_n * v_n))


def lindeberg_statistic(block_samples, f, r_n, v_n, n_n, eps, mean=None) -> float:
    blocks = np.asarray(block_samples, dtype=float)
    if len(blocks) == 0:
        raise SampleSizeError("empty sample")
    return lindeberg_from_values(evaluate_blocks(f, blocks), r_n, v_n, n_n, eps, mean)


# ------------------------------------------------------------------ moments

@dataclass
class MomentSummary:
    A_n: float
    a_n: float
    B_n: dict
    delta: float
    A_n_stderr: float = 0.0
    a_n_stderr: float = 0.0
    blocks: int = 0
    replicates: int = 0


def _w_array(w) -> np.ndarray:
    arr = np.asarray(getattr(w, "w", w), dtype=float)
    if arr.ndim != 3:
        raise ValueError("W draws must have shape (replicates, blocks, k)")
    return arr


def moment_sums(w, delta: float = 1.0, eps_list: Sequence[float] = ()) -> MomentSummary:
    """Block sums of ``E||W||^{2+delta}``, ``E||W||^2`` and ``E[||W||^2 1{||W|| > eps}]``.

    Expectations are replicate averages per block, then summed over blocks.  Standard
    errors come from the spread of the per-replicate block sums.
    """
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    arr = _w_array(w)
    R, M, _ = arr.shape
    nrm = np.sqrt((arr * arr).sum(axis=-1))      # (R, M)
    sq = nrm ** 2
    pw = nrm ** (2 + delta)
    A_n = float(pw.mean(axis=0).sum())
    a_n = float(sq.mean(axis=0).sum())
    B = {float(e): float((sq * (nrm > e)).mean(axis=0).sum()) for e in eps_list}
    se = lambda x: float(x.sum(axis=1).std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0  # noqa: E731
    return MomentSummary(A_n, a_n, B, float(delta), se(pw), se(sq), M, R)


# ------------------------------------------------------------------ Delta_n

@dataclass
class DeltaEstimate:
    value: float
    stderr: float
    t: np.ndarray
    replicates: int
    clipped: bool = False
    block_cov: np.ndarray | None = None


def _phase(t, x):
    return np.exp(1j * (x @ t))


def estimate_delta_n(w, t, seed: int = 0) -> DeltaEstimate:
    """Characteristic-function gap between ``sum_j W_j`` and its Gaussian surrogate.

    The surrogate sums independent ``N(0, C)`` vectors, one per block, with ``C`` the
    pooled sample covariance of ``W_j`` (negative eigenvalues clipped to zero).  Both
    expectations are Monte Carlo means over the same number of replicates; the
    standard error is that of the complex difference of the two means, which bounds
    the delta-method error of its modulus.
    """
    arr = _w_array(w)
    R, M, k = arr.shape
    if R < 2:
        raise SampleSizeError("need at least two replicates")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (k,):
        raise ValueError(f"t must have {k} entries")
    cov = np.atleast_2d(np.cov(arr.reshape(-1, k), rowvar=False, ddof=1))
    evals, evecs = np.linalg.eigh(cov)
    clipped = bool(np.any(evals < 0))
    root = evecs * np.sqrt(np.clip(evals, 0, None))
    rng = _rng(np.random.SeedSequence(seed))
    surrogate = rng.standard_normal((R, k)) @ root.T * np.sqrt(M)

    hw = _phase(t, arr.sum(axis=1))
    hg = _phase(t, surrogate)
    diff = hw.mean() - hg.mean()
    var = lambda h: float(np.mean(np.abs(h - h.mean()) ** 2) * R / (R - 1) / R)  # noqa: E731
    return DeltaEstimate(float(abs(diff)), float(np.sqrt(var(hw) + var(hg))), t, R, clipped, cov)


# ------------------------------------------------------------------ T_n

def complement_sets(m: Sequence[int]) -> list[set]:
    """For each block (lexicographic order) the index set over which ``V`` sums.

    Built from the row sets ``L`` (``d = 2``) or the slab/row sets ``S, L`` (``d = 3``)
    exactly as removed from ``D_{n,d}``; with empty conventions at index zero.
    """
    m = tuple(int(x) for x in m)
    D = list(itertools.product(*(range(1, x + 1) for x in m)))
    full = set(D)
    out = []
    if len(m) == 2:
        m1, m2 = m

        def L(i, j):
            return set() if i == 0 or j == 0 else {(i, v) for v in range(1, j + 1)}

        for j1, j2 in D:
            removed = set().union(*(L(l, m2) for l in range(0, j1))) | L(j1, j2)
            out.append(full - removed)
    elif len(m) == 3:
        m1, m2, m3 = m

        def S(i):
            return {(u, v, w) for u in range(1, i + 1) for v in range(1, m2 + 1) for w in range(1, m3 + 1)}

        def L(i, j, k):
            return set() if 0 in (i, j, k) else {(i, j, w) for w in range(1, k + 1)}

        for j1, j2, j3 in D:
            removed = S(j1 - 1) | set().union(*(L(j1, l, m3) for l in range(0, j2))) | L(j1, j2, j3)
            out.append(full - removed)
    else:
        raise ValueError("dependence coefficient defined for d = 2 or d = 3 block grids")
    return out


def complement_mask(m) -> np.ndarray:
    D = list(itertools.product(*(range(1, x + 1) for x in m)))
    pos = {idx: i for i, idx in enumerate(D)}
    mask = np.zeros((len(D), len(D)))
    for j, s in enumerate(complement_sets(m)):
        for idx in s:
            mask[j, pos[idx]] = 1.0
    return mask


@dataclass
class TEstimate:
    value: float
    stderr: float
    t: np.ndarray
    d: int
    replicates: int
    terms: np.ndarray = field(default=None)


def estimate_T(w, t, m: Sequence[int] | None = None) -> TEstimate:
    """Sum over blocks of ``|Cov(exp(i<t, V_j>), exp(i<t, W_j>))|`` across replicates.

    ``m`` is the block grid (taken from a :class:`WDraws` when omitted).  The standard
    error is the sum of the per-term standard errors; it is also the scale of the
    upward bias of a sum of moduli when every true covariance is zero.
    """
    arr = _w_array(w)
    m = tuple(getattr(w, "m", None) or m)
    R, M, k = arr.shape
    if R < 2:
        raise SampleSizeError("a single realization cannot estimate block covariances")
    if int(np.prod(m)) != M:
        raise ValueError("grid does not match number of blocks")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    mask = complement_mask(m)
    V = np.einsum("ij,rjk->rik", mask, arr)
    X = _phase(t, V)
    Y = _phase(t, arr)
    prod = (X - X.mean(axis=0)) * (Y - Y.mean(axis=0))
    cov = prod.sum(axis=0) / (R - 1)
    se = np.sqrt(np.mean(np.abs(prod - prod.mean(axis=0)) ** 2, axis=0) / R)
    return TEstimate(float(np.abs(cov).sum()), float(se.sum()), t, len(m), R, cov)


# ------------------------------------------------------------------ bounds

@dataclass
class BoundReport:
    lemma1: float
    remark1: dict
    remark1_via_moments: dict
    lemma2: float | None


def lemma_bounds(summary: MomentSummary, t, eps: float | Sequence[float], T_hat=None) -> BoundReport:
    """Evaluate the independence bound, the classical-Lindeberg bound and the dependent bound.

    ``remark1`` uses ``B_n(eps)`` from ``summary`` (eps must be among its keys);
    ``remark1_via_moments`` replaces ``B_n(eps)`` by ``eps^{-delta} A_n``.
    """
    tn = float(np.linalg.norm(np.atleast_1d(t)))
    d = summary.delta
    h2, h3 = tn ** 2, tn ** 3
    lemma1 = 6.0 * h2 ** (1 - d) * h3 ** d * summary.A_n
    eps_list = [eps] if np.isscalar(eps) else list(eps)
    remark1, chain = {}, {}
    for e in eps_list:
        e = float(e)
        if e in summary.B_n:
            B = summary.B_n[e]
            remark1[e] = 2 * h2 * B + h3 * summary.a_n * (4 * e / 3 + np.sqrt(B))
        chain[e] = 2 * h2 * e ** -d * summary.A_n + h3 * summary.a_n * (4 * e / 3 + e ** (-d / 2) * np.sqrt(summary.A_n))
    lemma2 = None
    if T_hat is not None:
        lemma2 = float(getattr(T_hat, "value", T_hat)) + 6.0 * tn ** (2 + d) * summary.A_n
    return BoundReport(float(lemma1), remark1, chain, lemma2)
