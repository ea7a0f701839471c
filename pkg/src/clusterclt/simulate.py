"""Stationary space-time field generators and brute-force extremogram oracles.

Generators (time is the last lattice axis):

* ``iid-pareto``: iid unit Pareto(alpha), ``P(X > x) = x^{-alpha}`` for ``x >= 1``.
* ``gaussian-iid``: iid standard normal.
* ``max-moving-maxima``: ``X(s) = max_w a_w Z(s + w)`` with iid unit-Frechet ``Z``.
* ``m-dependent-average``: ``X(s) = sum_w a_w Z(s + w)`` with iid Pareto(alpha) ``Z``.

Window offsets ``w`` range over ``[0, w_1) x ... x [0, w_d)`` where ``weights`` has shape
``(w_1, ..., w_d)``.  All random draws use numpy's PCG64 seeded through ``SeedSequence``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .lattice import Field
from .relevance import BallComplement, NormExceedance, RelevanceSet

KINDS = ("iid-pareto", "gaussian-iid", "max-moving-maxima", "m-dependent-average")
RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence"


class SpecError(ValueError):
    pass


class OracleDegenerateError(ValueError):
    pass


def _freeze(w):
    if isinstance(w, (list, tuple, np.ndarray)):
        return tuple(_freeze(x) for x in w)
    return float(w)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    shape: tuple[int, ...]
    seed: int = 0
    alpha: float = 1.0
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        shape = tuple(int(n) for n in self.shape)
        if not shape or any(n < 1 for n in shape):
            raise SpecError(f"bad shape {self.shape}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "seed", int(self.seed))
        if self.kind in ("iid-pareto", "m-dependent-average") and not self.alpha > 0:
            raise SpecError("tail index alpha must be positive")
        if self.kind in ("max-moving-maxima", "m-dependent-average"):
            if self.weights is None:
                raise SpecError(f"{self.kind} needs a weights array")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != len(shape):
                raise SpecError(f"weights must have {len(shape)} axes, got {w.ndim}")
            if not np.all(np.isfinite(w)) or np.any(w < 0) or not np.any(w > 0):
                raise SpecError("weights must be finite, nonnegative, with a positive entry")
            object.__setattr__(self, "weights", _freeze(w))
        else:
            object.__setattr__(self, "weights", None)

    @property
    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.ones((1,) * len(self.shape))
        return np.asarray(self.weights, dtype=float)

    @property
    def is_isotropic(self) -> bool:
        """Whether the isotropy condition holds by construction.

        True for iid kinds and for windows of spatial extent one; a spatially extended
        window gives overlaps that depend on the lag direction, not only its L-inf norm.
        """
        return all(n == 1 for n in self.weight_array.shape[:-1])

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "shape": list(self.shape), "seed": self.seed}
        if self.kind in ("iid-pareto", "m-dependent-average"):
            out["alpha"] = self.alpha
        if self.weights is not None:
            out["weights"] = self.weight_array.tolist()
        return out

    def with_shape(self, shape) -> "GeneratorSpec":
        return GeneratorSpec(self.kind, tuple(shape), self.seed, self.alpha, self.weights)

    def with_seed(self, seed) -> "GeneratorSpec":
        return GeneratorSpec(self.kind, self.shape, seed, self.alpha, self.weights)


def spec_from_dict(cfg: dict) -> GeneratorSpec:
    return GeneratorSpec(cfg["kind"], tuple(cfg["shape"]), int(cfg.get("seed", 0)),
                         float(cfg.get("alpha", 1.0)), cfg.get("weights"))


def replicate_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(n)


def _innovations(spec: GeneratorSpec, shape, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "iid-pareto" or spec.kind == "m-dependent-average":
        return rng.pareto(spec.alpha, size=shape) + 1.0
    if spec.kind == "gaussian-iid":
        return rng.standard_normal(size=shape)
    return 1.0 / rng.standard_exponential(size=shape)


def _window_combine(spec: GeneratorSpec, z: np.ndarray, out_shape) -> np.ndarray:
    """Moving max/sum of innovations ``z`` over the weight window; leading batch axes allowed."""
    a = spec.weight_array
    out = None
    for off in itertools.product(*(range(n) for n in a.shape)):
        if a[off] == 0:
            continue
        sl = (Ellipsis,) + tuple(slice(o, o + n) for o, n in zip(off, out_shape))
        term = a[off] * z[sl]
        if out is None:
            out = term.copy()
        elif spec.kind == "max-moving-maxima":
            np.maximum(out, term, out=out)
        else:
            out += term
    return out


def generate_field(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> Field:
    """Draw one field; with ``rng=None`` the stream is seeded by ``spec.seed``."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    if spec.kind in ("iid-pareto", "gaussian-iid"):
        return Field.scalar(_innovations(spec, spec.shape, rng))
    a = spec.weight_array
    z = _innovations(spec, tuple(n + w - 1 for n, w in zip(spec.shape, a.shape)), rng)
    return Field.scalar(_window_combine(spec, z, spec.shape))


# ---------------------------------------------------------------- marginal laws

def _frechet_scale(spec):
    return float(spec.weight_array.sum())


def has_analytic_marginal(spec: GeneratorSpec) -> bool:
    return spec.kind != "m-dependent-average"


def norm_sf(spec: GeneratorSpec, x) -> np.ndarray:
    """``P(|X| > x)`` for the one-dimensional marginal."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "iid-pareto":
        return np.where(x < 1.0, 1.0, np.power(np.maximum(x, 1.0), -spec.alpha))
    if spec.kind == "gaussian-iid":
        return np.where(x < 0, 1.0, 2.0 * stats.norm.sf(np.maximum(x, 0.0)))
    if spec.kind == "max-moving-maxima":
        s = _frechet_scale(spec)
        with np.errstate(divide="ignore"):
            return np.where(x <= 0, 1.0, -np.expm1(-s / np.maximum(x, 1e-300)))
    raise NotImplementedError(f"no closed-form marginal for {spec.kind}")


def norm_quantile(spec: GeneratorSpec, p: float) -> float:
    """``p``-quantile of ``|X|``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if spec.kind == "iid-pareto":
        return float((1.0 - p) ** (-1.0 / spec.alpha))
    if spec.kind == "gaussian-iid":
        return float(stats.norm.ppf((1.0 + p) / 2.0))
    if spec.kind == "max-moving-maxima":
        return float(-_frechet_scale(spec) / np.log(p))
    raise NotImplementedError(f"no closed-form marginal for {spec.kind}")


def _threshold(S: RelevanceSet):
    if isinstance(S, NormExceedance):
        return S.theta
    if isinstance(S, BallComplement):
        return S.radius
    return None


def exceedance_probability(spec: GeneratorSpec, A: RelevanceSet, u_n: float) -> float | None:
    """``P(X / u_n in A)`` in closed form, or ``None`` if unavailable.

    Marginals are continuous and one-dimensional, so ``>`` and ``>=`` thresholds agree.
    """
    th = _threshold(A)
    if th is None or not has_analytic_marginal(spec):
        return None
    return float(norm_sf(spec, th * u_n))


def analytic_scale(spec: GeneratorSpec, k_n: float) -> float:
    """``u_n`` as the exact ``(1 - 1/k_n)``-quantile of ``|X|``."""
    return norm_quantile(spec, 1.0 - 1.0 / k_n)


# ---------------------------------------------------------------- pair sampling

def sample_pairs(spec: GeneratorSpec, lag: Sequence[int], n: int, rng: np.random.Generator):
    """``n`` iid draws of ``(X(0), X(lag))`` from the exact joint law, shape ``(n,)`` each.

    ``lag`` is a full lattice offset with time last and nonnegative entries.
    """
    lag = tuple(int(x) for x in lag)
    if len(lag) != len(spec.shape) or any(x < 0 for x in lag):
        raise ValueError("lag must be a nonnegative offset with one entry per lattice axis")
    if spec.kind in ("iid-pareto", "gaussian-iid"):
        x0 = _innovations(spec, (n,), rng)
        xh = x0 if not any(lag) else _innovations(spec, (n,), rng)
        return x0, xh
    a = spec.weight_array
    box = tuple(w + h for w, h in zip(a.shape, lag))
    z = _innovations(spec, (n,) + box, rng)
    x0 = _window_combine(spec, z, (1,) * len(lag)).reshape(n)
    zh = z[(slice(None),) + tuple(slice(h, None) for h in lag)]
    xh = _window_combine(spec, zh, (1,) * len(lag)).reshape(n)
    return x0, xh


def joint_exceedance_frequency(spec, lag, u_n, n, rng, A: RelevanceSet, B: RelevanceSet):
    """Monte Carlo ``P(X(0)/u in A, X(lag)/u in B)`` with binomial standard error."""
    x0, xh = sample_pairs(spec, lag, n, rng)
    hit = A.mask(x0[:, None] / u_n) & B.mask(xh[:, None] / u_n)
    p = hit.mean()
    return float(p), float(np.sqrt(p * (1 - p) / n))


@dataclass(frozen=True)
class OracleValue:
    value: float
    stderr: float
    method: str
    events: int | None = None


def _mmm_joint_cdf(spec, lag, x, y):
    """``P(X(0) <= x, X(lag) <= y)`` for the moving-maxima field."""
    a = spec.weight_array
    box = tuple(w + h for w, h in zip(a.shape, lag))
    w0 = np.zeros(box)
    wh = np.zeros(box)
    w0[tuple(slice(0, w) for w in a.shape)] = a
    wh[tuple(slice(h, h + w) for h, w in zip(lag, a.shape))] = a
    return float(np.exp(-np.maximum(w0 / x, wh / y).sum()))


def _analytic_oracle(spec, A, B, lag, u_n):
    ta, tb = _threshold(A), _threshold(B)
    if ta is None or tb is None or not has_analytic_marginal(spec):
        return None
    pa = float(norm_sf(spec, ta * u_n))
    if pa == 0:
        raise OracleDegenerateError("conditioning event has probability zero")
    if not any(lag):
        return float(norm_sf(spec, max(ta, tb) * u_n)) / pa
    if spec.kind in ("iid-pareto", "gaussian-iid"):
        return float(norm_sf(spec, tb * u_n))
    if spec.kind == "max-moving-maxima":
        xa, xb = ta * u_n, tb * u_n
        joint = 1.0 - _mmm_joint_cdf(spec, lag, xa, np.inf) - _mmm_joint_cdf(spec, lag, np.inf, xb) \
            + _mmm_joint_cdf(spec, lag, xa, xb)
        return joint / pa
    return None


def _spatial_lag(spec, h_s, h_t):
    d = len(spec.shape)
    lag = [0] * d
    if d >= 2:
        lag[0] = h_s
    elif h_s:
        raise ValueError("spatial lag needs at least one spatial axis")
    lag[-1] += h_t
    return tuple(lag)


def oracle_extremogram(spec: GeneratorSpec, A: RelevanceSet, B: RelevanceSet, h_s: int, h_t: int,
                       k_n: float | None = None, u_n: float | None = None,
                       mc_pairs: int = 400_000, seed: int = 0, method: str = "auto") -> OracleValue:
    """Pre-asymptotic ``P(X(h_s e_1, h_t)/u_n in B | X(0)/u_n in A)``.

    ``u_n`` defaults to the exact ``(1 - 1/k_n)``-quantile of ``|X|``, or to a large-sample
    empirical quantile when the marginal has no closed form.  ``method`` is ``"auto"``
    (closed form if available), ``"analytic"`` or ``"monte-carlo"``.
    """
    lag = _spatial_lag(spec, h_s, h_t)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if u_n is None:
        if k_n is None:
            raise ValueError("need u_n or k_n")
        if has_analytic_marginal(spec):
            u_n = analytic_scale(spec, k_n)
        else:
            x0, _ = sample_pairs(spec, (0,) * len(lag), mc_pairs, rng)
            u_n = float(np.quantile(np.abs(x0), 1 - 1 / k_n, method="inverted_cdf"))
    if method in ("auto", "analytic"):
        val = _analytic_oracle(spec, A, B, lag, u_n)
        if val is not None:
            return OracleValue(float(val), 0.0, "analytic")
        if method == "analytic":
            raise ValueError("no closed form for this generator / relevance-set combination")
    pa = exceedance_probability(spec, A, u_n)
    if pa is not None and mc_pairs * pa < 100:
        raise ValueError(f"mc_pairs={mc_pairs} gives fewer than 100 expected conditioning events")
    n_a = n_ab = 0
    chunk = 100_000
    done = 0
    while done < mc_pairs:
        n = min(chunk, mc_pairs - done)
        x0, xh = sample_pairs(spec, lag, n, rng)
        in_a = A.mask(x0[:, None] / u_n)
        n_a += int(in_a.sum())
        n_ab += int((in_a & B.mask(xh[:, None] / u_n)).sum())
        done += n
    if n_a == 0:
        raise OracleDegenerateError("no conditioning events in the Monte Carlo sample")
    p = n_ab / n_a
    return OracleValue(p, float(np.sqrt(p * (1 - p) / n_a)), "monte-carlo", n_a)


@dataclass
class OracleMatrix:
    value: np.ndarray
    stderr: np.ndarray
    method: list = field(default_factory=list)


def oracle_matrix(spec, A, B, L_s, L_t, k_n=None, u_n=None, mc_pairs=400_000, seed=0,
                  method="auto") -> OracleMatrix:
    val = np.zeros((L_s + 1, L_t + 1))
    err = np.zeros_like(val)
    methods = []
    seeds = replicate_seeds(seed, (L_s + 1) * (L_t + 1))
    for i, (hs, ht) in enumerate(itertools.product(range(L_s + 1), range(L_t + 1))):
        o = oracle_extremogram(spec, A, B, hs, ht, k_n, u_n, mc_pairs,
                               int(seeds[i].generate_state(1)[0]), method)
        val[hs, ht], err[hs, ht] = o.value, o.stderr
        methods.append(o.method)
    return OracleMatrix(val, err, methods)


@dataclass(frozen=True)
class MarginalScale:
    u_n: float
    v_n: float
    method: str


def marginal_scale(spec: GeneratorSpec, k_n: float, A: RelevanceSet,
                   pilot: int = 400_000, seed: int = 0) -> MarginalScale:
    """``u_n`` (the ``(1 - 1/k_n)``-quantile of ``|X|``) and ``v_n = P(X/u_n in A)``.

    Closed form when the marginal is known, otherwise from a pilot sample of ``pilot``
    marginal draws.
    """
    if has_analytic_marginal(spec):
        u_n = analytic_scale(spec, k_n)
        v_n = exceedance_probability(spec, A, u_n)
        if v_n is not None:
            return MarginalScale(u_n, v_n, "analytic")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    x0, _ = sample_pairs(spec, (0,) * len(spec.shape), pilot, rng)
    if not has_analytic_marginal(spec):
        u_n = float(np.quantile(np.abs(x0), 1 - 1 / k_n, method="inverted_cdf"))
    v_n = float(A.mask(x0[:, None] / u_n).mean())
    return MarginalScale(u_n, v_n, "pilot")
