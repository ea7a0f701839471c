"""Lattice shapes, complete-block partitions, block centers and L-infinity spheres.

Coordinates in the public API are 1-based, matching the usual lattice notation
``[n] = {1, ..., n}``.  Array indexing inside the package is 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


class ShapeError(ValueError):
    """Block sizes incompatible with the lattice."""


class LagError(ValueError):
    """A lag whose sphere does not fit inside the block."""


@dataclass(frozen=True)
class LatticeShape:
    dims: tuple[int, ...]
    value_dim: int = 1

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 1 or any(n < 1 for n in dims):
            raise ShapeError(f"lattice dims must be positive, got {self.dims}")
        if int(self.value_dim) < 1:
            raise ShapeError(f"value_dim must be >= 1, got {self.value_dim}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "value_dim", int(self.value_dim))

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))


@dataclass(frozen=True)
class Field:
    """An ``R^k``-valued lattice field stored as an array of shape ``(*dims, k)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 2:
            raise ShapeError("field values need at least one lattice axis plus the value axis")
        object.__setattr__(self, "values", v)

    @classmethod
    def scalar(cls, arr) -> "Field":
        """Wrap a real-valued array (no trailing value axis) as a field with k = 1."""
        return cls(np.asarray(arr, dtype=float)[..., None])

    @property
    def shape(self) -> LatticeShape:
        return LatticeShape(self.values.shape[:-1], self.values.shape[-1])


@dataclass(frozen=True)
class BlockGrid:
    shape: LatticeShape
    r: tuple[int, ...]
    m: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        r = tuple(int(x) for x in self.r)
        if len(r) != self.shape.d:
            raise ShapeError(f"need {self.shape.d} block sides, got {len(r)}")
        for ri, ni in zip(r, self.shape.dims):
            if not 1 <= ri <= ni:
                raise ShapeError(f"block side {ri} outside [1, {ni}]")
        object.__setattr__(self, "r", r)
        # floor rule: only complete blocks are indexed
        object.__setattr__(self, "m", tuple(ni // ri for ri, ni in zip(r, self.shape.dims)))

    @property
    def r_n(self) -> int:
        return int(np.prod(self.r))

    @property
    def n_blocks(self) -> int:
        return int(np.prod(self.m))

    def indices(self) -> Iterator[tuple[int, ...]]:
        """Block indices of ``D_{n,d}`` in lexicographic order (last axis fastest), 1-based."""
        return itertools.product(*(range(1, mi + 1) for mi in self.m))

    def origin(self, index: Sequence[int]) -> tuple[int, ...]:
        self._check_index(index)
        return tuple((j - 1) * ri + 1 for j, ri in zip(index, self.r))

    def _check_index(self, index):
        if len(index) != self.shape.d or any(not 1 <= j <= mi for j, mi in zip(index, self.m)):
            raise IndexError(f"block index {tuple(index)} outside {self.m}")


@dataclass(frozen=True)
class Block:
    values: np.ndarray
    origin: tuple[int, ...]


def make_block_grid(shape: LatticeShape, r: Sequence[int]) -> BlockGrid:
    return BlockGrid(shape, tuple(r))


def extract_block(fld: Field, grid: BlockGrid, index: Sequence[int]) -> Block:
    origin = grid.origin(index)
    sl = tuple(slice(o - 1, o - 1 + ri) for o, ri in zip(origin, grid.r))
    return Block(fld.values[sl], origin)


def block_array(values: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """All complete blocks stacked lexicographically.

    Parameters
    ----------
    values : ndarray of shape ``(*dims, k)``
    grid : BlockGrid

    Returns
    -------
    ndarray of shape ``(m_1 * ... * m_d, r_1, ..., r_d, k)``, a view when possible.
    """
    d = grid.shape.d
    crop = values[tuple(slice(0, mi * ri) for mi, ri in zip(grid.m, grid.r))]
    split = []
    for mi, ri in zip(grid.m, grid.r):
        split += [mi, ri]
    k = values.shape[-1]
    arr = crop.reshape(*split, k)
    order = [2 * i for i in range(d)] + [2 * i + 1 for i in range(d)] + [2 * d]
    return arr.transpose(order).reshape(grid.n_blocks, *grid.r, k)


def block_center(i: int, j: int, r1: int, r2: int) -> tuple[int, int]:
    """1-based lattice center of spatial block ``(i, j)`` for side lengths ``(r1, r2)``."""
    return (-(-((2 * i - 1) * r1 + 1) // 2), -(-((2 * j - 1) * r2 + 1) // 2))


def local_center(l1: int, l2: int) -> tuple[int, int]:
    """1-based center of an ``l1 x l2`` block, i.e. ``block_center(1, 1, l1, l2)``."""
    return block_center(1, 1, l1, l2)


def max_spatial_lag(r1: int, r2: int) -> int:
    """Largest spatial lag whose sphere around the block center stays inside the block."""
    return -(-min(r1, r2) // 2) - 1


def sphere(center: Sequence[int], h: int, bounds: Sequence[int]) -> list[tuple[int, int]]:
    """Lattice points of ``[bounds[0]] x [bounds[1]]`` at L-infinity distance ``h`` from ``center``.

    Points come back sorted; ``len`` of the result is the cardinality.
    """
    u, v = center
    n1, n2 = bounds
    if h < 0:
        raise ValueError("sphere radius must be nonnegative")
    pts = []
    for i in range(max(1, u - h), min(n1, u + h) + 1):
        for j in range(max(1, v - h), min(n2, v + h) + 1):
            if max(abs(i - u), abs(j - v)) == h:
                pts.append((i, j))
    return pts


def ring_counts(mask: np.ndarray, cx: int, cy: int, h: int) -> np.ndarray:
    """Number of ``True`` entries on the L-infinity ring of radius ``h`` around ``(cx, cy)``.

    ``mask`` has the two spatial axes at positions ``-3`` and ``-2`` (0-based ``cx, cy``)
    and time last; leading axes are batch axes.  The ring must lie inside the mask.
    """
    if h == 0:
        return mask[..., cx, cy, :].astype(np.int64)
    outer = mask[..., cx - h:cx + h + 1, cy - h:cy + h + 1, :].sum(axis=(-3, -2), dtype=np.int64)
    inner = mask[..., cx - h + 1:cx + h, cy - h + 1:cy + h, :].sum(axis=(-3, -2), dtype=np.int64)
    return outer - inner
