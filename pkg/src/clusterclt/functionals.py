"""Cluster functionals on blocks, including the space-time extremogram functional.

A cluster functional is any callable taking a block array of shape ``(l_1, ..., l_d, k)``
and returning a float, with ``f(y) = f(C(y))`` and ``f(0) = 0``.  Functionals may also
provide ``evaluate_blocks(blocks)`` for a stacked ``(M, l_1, ..., l_d, k)`` array; the
module-level :func:`evaluate_blocks` falls back to a loop otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LagError, local_center, max_spatial_lag, ring_counts, sphere
from .relevance import RelevanceSet, core


def evaluate_blocks(f, blocks: np.ndarray) -> np.ndarray:
    vec = getattr(f, "evaluate_blocks", None)
    if vec is not None:
        return np.asarray(vec(blocks), dtype=float)
    return np.array([float(f(b)) for b in blocks], dtype=float)


def functional_name(f) -> str:
    return getattr(f, "name", None) or getattr(f, "__name__", type(f).__name__)


@dataclass(frozen=True)
class ExtremogramFunctional:
    """Space-time extremogram functional ``f_{A,B,h1,h2}`` on 3-d blocks.

    For a block of extent ``l1 x l2 x l3`` with center column ``c``::

        f(y) = sum_{i in S_h1(c)} sum_{t=1}^{l3-h2} 1{y[c,t] in A, y[i,t+h2] in B} / #S_h1(c)
    """

    A: RelevanceSet
    B: RelevanceSet
    h1: int
    h2: int

    @property
    def name(self) -> str:
        return f"extremogram(h_s={self.h1},h_t={self.h2})"

    @property
    def support(self) -> RelevanceSet:
        """Set outside of which the functional ignores values; cores are taken w.r.t. it."""
        return self.A | self.B

    def _check(self, l1, l2, l3):
        if self.h1 < 0 or self.h2 < 0:
            raise LagError("lags must be nonnegative")
        if self.h1 > max_spatial_lag(l1, l2):
            raise LagError(f"spatial lag {self.h1} exceeds ceil(min(l1,l2)/2)-1 for block {l1}x{l2}")
        if self.h2 >= l3:
            raise LagError(f"temporal lag {self.h2} must be < block length {l3}")

    def evaluate_blocks(self, blocks: np.ndarray) -> np.ndarray:
        _, l1, l2, l3, _ = blocks.shape
        self._check(l1, l2, l3)
        c1, c2 = local_center(l1, l2)
        n_sphere = len(sphere((c1, c2), self.h1, (l1, l2)))
        a = self.A.mask(blocks[:, c1 - 1, c2 - 1, :, :])            # (M, l3)
        b = ring_counts(self.B.mask(blocks), c1 - 1, c2 - 1, self.h1)  # (M, l3)
        span = l3 - self.h2
        hits = (a[:, :span] * b[:, self.h2:self.h2 + span]).sum(axis=1)
        return hits / n_sphere

    def __call__(self, block) -> float:
        block = np.asarray(getattr(block, "values", block), dtype=float)
        return float(self.evaluate_blocks(block[None])[0])

    def to_dict(self) -> dict:
        return {"A": self.A.to_dict(), "B": self.B.to_dict(), "h_s": self.h1, "h_t": self.h2}


@dataclass(frozen=True)
class ExceedanceCount:
    """Number of points of the block lying in ``A``; any dimension ``d``."""

    A: RelevanceSet

    name = "exceedance_count"
    support = property(lambda self: self.A)

    def evaluate_blocks(self, blocks):
        m = self.A.mask(blocks)
        return m.reshape(len(blocks), -1).sum(axis=1).astype(float)

    def __call__(self, block) -> float:
        block = np.asarray(getattr(block, "values", block), dtype=float)
        return float(self.A.mask(block).sum())


class BlockSum:
    """Sum of all block entries.  Not a cluster functional; kept as a negative control."""

    name = "block_sum"

    def evaluate_blocks(self, blocks):
        return blocks.reshape(len(blocks), -1).sum(axis=1)

    def __call__(self, block) -> float:
        return float(np.sum(getattr(block, "values", block)))


def check_cluster_property(f, block, A: RelevanceSet) -> bool:
    """True iff ``f(block) == f(C(block))`` and ``f(0) == 0``, both exactly.

    The core is re-embedded at its original offsets into a zero block of the same
    extent, since block geometry (e.g. the center column) enters some functionals.
    """
    y = np.asarray(getattr(block, "values", block), dtype=float)
    c = core(y, A)
    zero = np.zeros_like(y)
    return f(y) == f(c.embedded(y.shape)) and f(zero) == 0
