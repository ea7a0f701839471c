"""Sample iso-extremogram for space-time fields (two spatial axes, time last).

Two evaluations of the same estimator are provided.  :func:`estimate_direct` sums
indicators over block centers, spheres and time; :func:`estimate_via_blocks` rewrites
the numerator and denominator as sums of the cluster functional over complete 3-d
blocks plus the boundary terms ``delta`` (time pairs straddling two time blocks) and
``R`` (times past the last complete time block).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .empirical import SampleSizeError
from .functionals import ExtremogramFunctional, evaluate_blocks
from .lattice import BlockGrid, LagError, block_array, block_center, max_spatial_lag, ring_counts, sphere
from .relevance import RelevanceSet


class NoExceedanceError(ValueError):
    """No block center exceeds; the estimate is undefined."""

    def __init__(self, msg="no center exceedance: the iso-extremogram is undefined", count=0):
        super().__init__(msg)
        self.count = count


@dataclass
class ExtremogramEstimate:
    values: np.ndarray                 # (L_s + 1, L_t + 1)
    denominator_count: int
    numerator: np.ndarray
    block_sum: np.ndarray | None = None
    delta_term: np.ndarray | None = None
    R_numerator: np.ndarray | None = None
    R_denominator: float | None = None
    form: str = "direct"

    @property
    def lags(self):
        return list(itertools.product(range(self.values.shape[0]), range(self.values.shape[1])))


@dataclass
class StandardizedEstimate:
    values: np.ndarray
    centering: np.ndarray
    factor: float


@dataclass
class SigmaMatrix:
    lags: list
    matrix: np.ndarray
    sigma_ab: np.ndarray
    sigma_prime: np.ndarray
    sigma_prime_aa0: float
    rho: np.ndarray
    diag_stderr: np.ndarray = field(default=None)
    samples: int = 0


def _spatial_r(grid: BlockGrid):
    if grid.shape.d not in (2, 3):
        raise ValueError("iso-extremogram grids have two spatial axes (optionally plus time)")
    return grid.r[0], grid.r[1], grid.m[0], grid.m[1]


def _check_lags(r1, r2, n3, L_s, L_t):
    cap = max_spatial_lag(r1, r2)
    if not 0 <= L_s <= cap:
        raise LagError(f"L_s={L_s} violates the lag cap L_s <= ceil(min(r1,r2)/2)-1 = {cap}")
    if not 0 <= L_t <= n3 - 1:
        raise LagError(f"L_t={L_t} must lie in [0, n3-1] = [0, {n3 - 1}]")


class _CenterData:
    """Center-column exceedances and ring counts shared by both estimator forms."""

    def __init__(self, values, A, B, r1, r2, m1, m2, L_s):
        n1, n2, n3 = values.shape[:3]
        self.n3 = n3
        amask = A.mask(values)
        bmask = B.mask(values)
        self.centers = [block_center(j1, j2, r1, r2)
                        for j1 in range(1, m1 + 1) for j2 in range(1, m2 + 1)]
        self.a = np.array([amask[cx - 1, cy - 1, :] for cx, cy in self.centers], dtype=np.int64)
        self.rings = []
        self.n_sphere = []
        for hs in range(L_s + 1):
            self.rings.append(np.array([ring_counts(bmask, cx - 1, cy - 1, hs)
                                        for cx, cy in self.centers]))
            self.n_sphere.append([len(sphere(c, hs, (n1, n2))) for c in self.centers])

    def pair_sum(self, hs, ht, t_ranges):
        """Sum over centers of ``sum_{t in range} a[t] ring[t+ht] / #S`` (1-based inclusive ranges).

        ``t_ranges`` is a list of ``(lo, hi)`` pairs applied to every center.
        """
        total = 0.0
        for j in range(len(self.centers)):
            a, ring = self.a[j], self.rings[hs][j]
            hits = 0
            for lo, hi in t_ranges:
                if hi >= lo:
                    hits += int(np.dot(a[lo - 1:hi], ring[lo - 1 + ht:hi + ht]))
            total += hits / self.n_sphere[hs][j]
        return total


def estimate_direct(fld, grid: BlockGrid, A: RelevanceSet, B: RelevanceSet,
                    L_s: int, L_t: int) -> ExtremogramEstimate:
    """Sample iso-extremogram on the lag grid ``[0:L_s] x [0:L_t]``.

    Parameters
    ----------
    fld : NormalizedField
        Values of shape ``(n1, n2, n3, k)``, already divided by ``u_n``.
    grid : BlockGrid
        Spatial block grid (``d = 2``) or a space-time grid whose first two sides are used.
    """
    vals = fld.values
    r1, r2, m1, m2 = _spatial_r(grid)
    n3 = vals.shape[2]
    _check_lags(r1, r2, n3, L_s, L_t)
    cd = _CenterData(vals, A, B, r1, r2, m1, m2, L_s)
    den = int(cd.a.sum())
    if den == 0:
        raise NoExceedanceError()
    num = np.zeros((L_s + 1, L_t + 1))
    for hs, ht in itertools.product(range(L_s + 1), range(L_t + 1)):
        num[hs, ht] = cd.pair_sum(hs, ht, [(1, n3 - ht)])
    return ExtremogramEstimate(num / den, den, num, form="direct")


def estimate_via_blocks(fld, grid3: BlockGrid, A: RelevanceSet, B: RelevanceSet,
                        L_s: int, L_t: int) -> ExtremogramEstimate:
    """Same estimator assembled from block functionals and boundary terms.

    Time pairs ``(t, t + h_t)`` with ``t + h_t > n3`` are excluded from ``delta``, and
    for ``h_t >= r3`` the block functional contributes nothing while ``delta`` spans the
    whole time block, so the total agrees with :func:`estimate_direct` for every valid lag.
    """
    if grid3.shape.d != 3:
        raise ValueError("need a 3-d (space, space, time) block grid")
    vals = fld.values
    r1, r2, m1, m2 = _spatial_r(grid3)
    r3, m3 = grid3.r[2], grid3.m[2]
    n3 = vals.shape[2]
    _check_lags(r1, r2, n3, L_s, L_t)
    blocks = block_array(vals, grid3)
    cd = _CenterData(vals, A, B, r1, r2, m1, m2, L_s)

    block_sum = np.zeros((L_s + 1, L_t + 1))
    delta = np.zeros_like(block_sum)
    r_num = np.zeros_like(block_sum)
    for hs, ht in itertools.product(range(L_s + 1), range(L_t + 1)):
        if ht < r3:
            block_sum[hs, ht] = evaluate_blocks(ExtremogramFunctional(A, B, hs, ht), blocks).sum()
        ranges = [(max((j3 - 1) * r3 + 1, j3 * r3 - ht + 1), min(j3 * r3, n3 - ht))
                  for j3 in range(1, m3 + 1)]
        delta[hs, ht] = cd.pair_sum(hs, ht, ranges)
        r_num[hs, ht] = cd.pair_sum(hs, ht, [(m3 * r3 + 1, n3 - ht)])

    f_den = evaluate_blocks(ExtremogramFunctional(A, A, 0, 0), blocks).sum()
    r_den = float(cd.a[:, m3 * r3:].sum())
    den = f_den + r_den
    if den == 0:
        raise NoExceedanceError()
    num = block_sum + delta + r_num
    return ExtremogramEstimate(num / den, int(round(den)), num, block_sum, delta, r_num, r_den,
                               form="blocks")


def standardization_factor(n: int, v_n: float, r1: int, r2: int) -> float:
    return float(np.sqrt(n * v_n) / (r1 * r2))


def standardize(est: ExtremogramEstimate, centering, n: int, v_n: float, r1: int, r2: int
                ) -> StandardizedEstimate:
    """``sqrt(n v_n) / (r1 r2) * (rho_hat - rho_n)`` elementwise."""
    c = np.asarray(getattr(centering, "value", centering), dtype=float)
    if c.shape != est.values.shape:
        raise ValueError(f"centering shape {c.shape} does not match lag grid {est.values.shape}")
    k = standardization_factor(n, v_n, r1, r2)
    return StandardizedEstimate(k * (est.values - c), c, k)


def assemble_sigma(sigma_ab, sigma_prime, sigma_prime_aa0, rho) -> np.ndarray:
    """``sigma_{h,h'} = s(h,h') - rho(h') s'(h) - rho(h) s'(h') + rho(h) rho(h') s'_AA(0)``."""
    sigma_ab = np.asarray(sigma_ab, dtype=float)
    sp = np.broadcast_to(np.asarray(sigma_prime, dtype=float), sigma_ab.shape[:1])
    rho = np.broadcast_to(np.asarray(rho, dtype=float), sigma_ab.shape[:1])
    return sigma_ab - np.outer(sp, rho) - np.outer(rho, sp) + sigma_prime_aa0 * np.outer(rho, rho)


def sigma_matrix(block_samples, A: RelevanceSet, B: RelevanceSet, L_s: int, L_t: int,
                 r: tuple, v_n: float, rho_star) -> SigmaMatrix:
    """Asymptotic covariance of the standardized estimator over the lag grid.

    Joint probabilities in the covariance conditions are replaced by frequencies over
    the supplied generic blocks ``(N, r1, r2, r3, k)``.  The quadruple sums there equal
    ``E[f_h(Y) f_h'(Y)]`` for the block functionals, which is what gets averaged.
    Lags are flattened lag-major: ``(h_s, h_t)`` in ``itertools.product`` order.
    """
    blocks = np.asarray(block_samples, dtype=float)
    if len(blocks) < 2:
        raise SampleSizeError("need at least two block samples")
    r1, r2, r3 = (int(x) for x in r)
    if blocks.shape[1:4] != (r1, r2, r3):
        raise ValueError("block samples do not match r")
    F, f0 = sigma_inputs(blocks, A, B, L_s, L_t)
    return sigma_from_values(F, f0, (r1, r2, r3), v_n, rho_star)


def sigma_inputs(blocks, A, B, L_s, L_t):
    """Functional values ``f_{A,B,h}(Y)`` (columns lag-major) and ``f_{A,A,0,0}(Y)`` per block."""
    lags = itertools.product(range(L_s + 1), range(L_t + 1))
    F = np.column_stack([evaluate_blocks(ExtremogramFunctional(A, B, hs, ht), blocks) for hs, ht in lags])
    return F, evaluate_blocks(ExtremogramFunctional(A, A, 0, 0), blocks)


def sigma_from_values(F, f0, r, v_n, rho_star) -> SigmaMatrix:
    F = np.asarray(F, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    n_lags = F.shape[1]
    L_t = None
    rho = np.asarray(getattr(rho_star, "value", rho_star), dtype=float)
    if rho.ndim == 2:
        L_t = rho.shape[1] - 1
    rho = rho.reshape(-1)
    if rho.shape[0] != n_lags:
        raise ValueError("rho_star does not match lag grid")
    lags = (list(itertools.product(range(n_lags // (L_t + 1)), range(L_t + 1)))
            if L_t is not None else list(range(n_lags)))
    rv = float(np.prod(r)) * v_n
    N = len(f0)
    s_ab = F.T @ F / (N * rv)
    s_p = F.T @ f0 / (N * rv)
    s_aa0 = float(f0 @ f0 / (N * rv))
    mat = assemble_sigma(s_ab, s_p, s_aa0, rho)
    mat = (mat + mat.T) / 2
    g2 = (F - rho * f0[:, None]) ** 2 / rv
    diag_se = g2.std(axis=0, ddof=1) / np.sqrt(N)
    return SigmaMatrix(lags, mat, s_ab, s_p, s_aa0, rho, diag_se, N)
