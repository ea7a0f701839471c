"""Relevance sets, quantile normalization, block cores and the exceedance probability v_n."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lattice import Field, LatticeShape


class DegenerateScaleError(ValueError):
    pass


def pointwise_norm(values: np.ndarray, norm: str = "linf") -> np.ndarray:
    """Norm over the trailing value axis."""
    if norm == "linf":
        return np.abs(values).max(axis=-1)
    if norm == "l2":
        return np.sqrt((values * values).sum(axis=-1))
    raise ValueError(f"unknown norm {norm!r}")


class RelevanceSet:
    """A subset of ``R^k`` bounded away from zero.

    Subclasses implement :meth:`mask`, which maps an array of shape ``(..., k)``
    to a boolean array of shape ``(...)``.
    """

    def mask(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return bool(self.mask(np.atleast_1d(np.asarray(x, dtype=float))))

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} has no config representation")

    def __or__(self, other: "RelevanceSet") -> "RelevanceSet":
        if other == self:
            return self
        return Union(self, other)


@dataclass(frozen=True)
class NormExceedance(RelevanceSet):
    """``{x : ||x|| > theta}``."""

    theta: float
    norm: str = "linf"

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("norm-exceedance threshold must be positive")
        pointwise_norm(np.zeros((1, 1)), self.norm)

    def mask(self, values):
        return pointwise_norm(values, self.norm) > self.theta

    def to_dict(self):
        return {"kind": "norm-exceedance", "norm": self.norm, "theta": self.theta}


@dataclass(frozen=True)
class BallComplement(RelevanceSet):
    """Complement of the open ball, ``{x : ||x|| >= radius}``."""

    radius: float
    norm: str = "linf"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        pointwise_norm(np.zeros((1, 1)), self.norm)

    def mask(self, values):
        return pointwise_norm(values, self.norm) >= self.radius

    def to_dict(self):
        return {"kind": "ball-complement", "norm": self.norm, "radius": self.radius}


@dataclass(frozen=True)
class Box(RelevanceSet):
    """Per-coordinate interval product; ``None`` bounds are infinite.

    The box must not contain the origin.
    """

    lower: tuple
    upper: tuple
    lower_closed: bool = True
    upper_closed: bool = True

    def __post_init__(self):
        lo = tuple(-np.inf if b is None else float(b) for b in self.lower)
        hi = tuple(np.inf if b is None else float(b) for b in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must have equal, positive length")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.contains(np.zeros(len(lo))):
            raise ValueError("box contains the origin; relevance sets must be bounded away from zero")

    def mask(self, values):
        lo, hi = np.array(self.lower), np.array(self.upper)
        above = values >= lo if self.lower_closed else values > lo
        below = values <= hi if self.upper_closed else values < hi
        return np.all(above & below, axis=-1)

    def to_dict(self):
        enc = lambda b: None if np.isinf(b) else b  # noqa: E731
        return {"kind": "box", "lower": [enc(b) for b in self.lower],
                "upper": [enc(b) for b in self.upper],
                "lower_closed": self.lower_closed, "upper_closed": self.upper_closed}


@dataclass(frozen=True)
class Union(RelevanceSet):
    first: RelevanceSet
    second: RelevanceSet

    def mask(self, values):
        return self.first.mask(values) | self.second.mask(values)


@dataclass(frozen=True)
class Predicate(RelevanceSet):
    """User predicate acting on single points; library use only."""

    func: Callable[[np.ndarray], bool]

    def mask(self, values):
        values = np.asarray(values, dtype=float)
        flat = values.reshape(-1, values.shape[-1])
        out = np.fromiter((bool(self.func(x)) and np.any(x != 0) for x in flat), bool, len(flat))
        return out.reshape(values.shape[:-1])


def relevance_from_dict(cfg: dict) -> RelevanceSet:
    kind = cfg["kind"]
    if kind == "norm-exceedance":
        return NormExceedance(float(cfg["theta"]), cfg.get("norm", "linf"))
    if kind == "ball-complement":
        return BallComplement(float(cfg["radius"]), cfg.get("norm", "linf"))
    if kind == "box":
        return Box(tuple(cfg["lower"]), tuple(cfg["upper"]),
                   bool(cfg.get("lower_closed", True)), bool(cfg.get("upper_closed", True)))
    raise ValueError(f"unknown relevance kind {kind!r}")


def is_relevant(value, A: RelevanceSet) -> bool:
    return A.contains(value)


@dataclass(frozen=True)
class NormalizedField:
    """Field values divided by the scaling quantile ``u_n``."""

    values: np.ndarray
    u_n: float
    k_n: float | None = None

    @property
    def shape(self) -> LatticeShape:
        return LatticeShape(self.values.shape[:-1], self.values.shape[-1])


def empirical_quantile(x: np.ndarray, p: float) -> float:
    """Nearest-rank (inverse empirical CDF) quantile."""
    return float(np.quantile(np.ravel(x), p, method="inverted_cdf"))


def normalize_field(fld: Field, k_n: float, norm: str = "linf") -> NormalizedField:
    """Scale by the empirical ``(1 - 1/k_n)``-quantile of the pointwise norms."""
    if not k_n > 1:
        raise ValueError("k_n must exceed 1")
    if fld.values.size == 0:
        raise ValueError("empty field")
    u_n = empirical_quantile(pointwise_norm(fld.values, norm), 1.0 - 1.0 / k_n)
    if not u_n > 0:
        raise DegenerateScaleError("scaling quantile is zero; field is (almost) all zero")
    return NormalizedField(fld.values / u_n, u_n, k_n)


def scale_field(fld: Field, u_n: float, k_n: float | None = None) -> NormalizedField:
    """Normalize by a known scale, e.g. an analytic quantile."""
    if not u_n > 0:
        raise DegenerateScaleError("scale must be positive")
    return NormalizedField(fld.values / u_n, float(u_n), k_n)


def estimate_v_n(fld, A: RelevanceSet, exact: float | None = None) -> float:
    """Frequency of relevant points, or ``exact`` when the marginal law is known."""
    if exact is not None:
        if not 0.0 <= exact <= 1.0:
            raise ValueError("exact v_n must be a probability")
        return float(exact)
    m = A.mask(fld.values)
    return float(m.sum()) / m.size


@dataclass(frozen=True)
class Core:
    """Minimal sub-block holding all relevant points; ``lower is None`` marks the zero core.

    ``lower``/``upper`` are inclusive 0-based bounds within the parent block.
    """

    values: np.ndarray | None
    lower: tuple[int, ...] | None
    upper: tuple[int, ...] | None

    @property
    def is_zero(self) -> bool:
        return self.lower is None

    def embedded(self, shape: Sequence[int]) -> np.ndarray:
        """Core placed back at its original offsets inside a zero array of ``shape``."""
        out = np.zeros(tuple(shape))
        if not self.is_zero:
            out[tuple(slice(lo, hi + 1) for lo, hi in zip(self.lower, self.upper))] = self.values
        return out


def core(block, A: RelevanceSet) -> Core:
    values = getattr(block, "values", block)
    mask = A.mask(values)
    if not mask.any():
        return Core(None, None, None)
    lower, upper = [], []
    for axis in range(mask.ndim):
        other = tuple(a for a in range(mask.ndim) if a != axis)
        hit = np.flatnonzero(mask.any(axis=other))
        lower.append(int(hit[0]))
        upper.append(int(hit[-1]))
    sl = tuple(slice(lo, hi + 1) for lo, hi in zip(lower, upper))
    return Core(values[sl], tuple(lower), tuple(upper))
