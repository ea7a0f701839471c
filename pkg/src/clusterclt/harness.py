"""Monte Carlo replication of the standardized iso-extremogram and normality checks."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .empirical import block_values
from .extremogram import (NoExceedanceError, SigmaMatrix, estimate_direct, sigma_from_values,
                          sigma_inputs, standardization_factor)
from .lattice import BlockGrid, LatticeShape, block_array
from .relevance import NormExceedance, RelevanceSet, scale_field
from .simulate import (GeneratorSpec, MarginalScale, generate_field, marginal_scale, oracle_matrix,
                       replicate_seeds)


class DegenerateSampleError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass
class NormalityDiagnostics:
    n: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float

    def passes(self, skew: float, kurt: float, ks: float) -> bool:
        return abs(self.skewness) < skew and abs(self.excess_kurtosis) < kurt and self.ks_distance < ks


def normality_diagnostics(samples) -> NormalityDiagnostics:
    """Moments and the Kolmogorov-Smirnov distance to a fitted normal.

    Skewness ``m3 / m2^{3/2}`` and excess kurtosis ``m4 / m2^2 - 3`` use the biased
    central moments ``m_j``; the variance reported and used for the fitted normal
    is the unbiased one.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 8:
        raise ValueError("need at least 8 samples")
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev ** 2)
    if m2 == 0 or not np.isfinite(m2):
        raise DegenerateSampleError("sample has zero variance")
    var = m2 * n / (n - 1)
    skew = np.mean(dev ** 3) / m2 ** 1.5
    kurt = np.mean(dev ** 4) / m2 ** 2 - 3.0
    cdf = ndtr(dev / np.sqrt(var))
    i = np.arange(1, n + 1)
    ks = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    return NormalityDiagnostics(n, float(mean), float(var), float(skew), float(kurt), float(ks))


@dataclass
class EstimatorConfig:
    r: tuple                    # (r1, r2, r3)
    L_s: int
    L_t: int
    k_n: float = 10.0
    A: RelevanceSet = field(default_factory=lambda: NormExceedance(1.0))
    B: RelevanceSet | None = None
    mc_pairs: int = 400_000

    @property
    def B_set(self) -> RelevanceSet:
        return self.A if self.B is None else self.B


@dataclass
class CltReport:
    lags: list
    samples: np.ndarray             # (replicates, n_lags) standardized values
    raw: np.ndarray                 # (replicates, n_lags) estimates
    centering: np.ndarray           # (n_lags,)
    centering_stderr: np.ndarray
    moments: list                   # NormalityDiagnostics or None per lag
    sigma: SigmaMatrix | None
    sigma_ratio: np.ndarray         # sample variance / Sigma diagonal
    condition_echo: dict
    dropped: int
    replicates: int
    scale: MarginalScale
    factor: float

    def lag_index(self, hs, ht) -> int:
        return self.lags.index((hs, ht))


def _replicate(spec, cfg, grid3, ms, seq, with_sigma):
    rng = np.random.Generator(np.random.PCG64(seq))
    fld = scale_field(generate_field(spec, rng), ms.u_n, cfg.k_n)
    try:
        est = estimate_direct(fld, grid3, cfg.A, cfg.B_set, cfg.L_s, cfg.L_t)
    except NoExceedanceError:
        return None
    if not with_sigma:
        return est, None
    return est, sigma_inputs(block_array(fld.values, grid3), cfg.A, cfg.B_set, cfg.L_s, cfg.L_t)


def run_clt_experiment(spec: GeneratorSpec, cfg: EstimatorConfig, replicates: int, seed: int,
                       threads: int | None = None, with_sigma: bool = True) -> CltReport:
    """Replicate fields, estimate, center with the pre-asymptotic oracle and standardize.

    Replicates without any center exceedance are dropped; more than 10% drops is a
    configuration error.  Output is a deterministic function of ``seed``.
    """
    if replicates < 2:
        raise ValueError("need at least two replicates")
    grid3 = BlockGrid(LatticeShape(spec.shape), tuple(cfg.r))
    r1, r2, r3 = grid3.r
    with_sigma = with_sigma and cfg.L_t < r3
    oracle_seed, pilot_seed, rep_seed = (int(s.generate_state(1)[0]) for s in replicate_seeds(seed, 3))
    ms = marginal_scale(spec, cfg.k_n, cfg.A, seed=pilot_seed)
    oracle = oracle_matrix(spec, cfg.A, cfg.B_set, cfg.L_s, cfg.L_t, u_n=ms.u_n,
                           mc_pairs=cfg.mc_pairs, seed=oracle_seed)
    lags = list(itertools.product(range(cfg.L_s + 1), range(cfg.L_t + 1)))
    center = oracle.value.reshape(-1)

    seqs = replicate_seeds(rep_seed, replicates)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        results = list(ex.map(lambda s: _replicate(spec, cfg, grid3, ms, s, with_sigma), seqs))
    kept = [x for x in results if x is not None]
    dropped = replicates - len(kept)
    if dropped > 0.1 * replicates:
        raise ConfigurationError(f"{dropped} of {replicates} replicates had no center exceedance")

    n = grid3.shape.size
    factor = standardization_factor(n, ms.v_n, r1, r2)
    raw = np.array([est.values.reshape(-1) for est, _ in kept])
    samples = factor * (raw - center)
    moments = []
    for col in samples.T:
        try:
            moments.append(normality_diagnostics(col))
        except (DegenerateSampleError, ValueError):
            moments.append(None)

    sigma = None
    ratio = np.full(len(lags), np.nan)
    if with_sigma:
        F = np.concatenate([sv[0] for _, sv in kept])
        f0 = np.concatenate([sv[1] for _, sv in kept])
        sigma = sigma_from_values(F, f0, grid3.r, ms.v_n, oracle.value)
        diag = np.diag(sigma.matrix)
        var = samples.var(axis=0, ddof=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(diag > 0, var / diag, np.nan)

    echo = condition_echo(grid3, ms.v_n, [est for est, _ in kept])
    return CltReport(lags, samples, raw, center, oracle.stderr.reshape(-1), moments, sigma, ratio,
                     echo, dropped, replicates, ms, factor)


def condition_echo(grid3: BlockGrid, v_n: float, estimates: Sequence) -> dict:
    """Numeric proxies of the rate conditions; nothing here certifies an asymptotic statement."""
    n = grid3.shape.size
    r = grid3.r_n
    n3 = grid3.shape.dims[2]
    r3 = grid3.r[2]
    # the (C) double sum over center pairs equals E[(center exceedance count)^2]
    dens = np.array([e.denominator_count for e in estimates], dtype=float)
    return {
        "r_n_v_n": r * v_n,
        "n_v_n": n * v_n,
        "r": r,
        "sqrt_n_v_n": float(np.sqrt(n * v_n)),
        "n_v_n_r3": n * v_n * r3,
        "v_inverse_over_n": 1.0 / (v_n * n),
        "C_double_sum": float(np.mean(dens ** 2)) if len(dens) else float("nan"),
        "rates_ordered": bool(np.sqrt(n * v_n) < r < n * v_n * r3),
        "n3": n3,
    }


# ------------------------------------------------------------------ fidis check

@dataclass
class FidisCheck:
    sample_cov: np.ndarray
    sample_cov_stderr: np.ndarray
    predicted: np.ndarray
    predicted_stderr: np.ndarray
    replicates: int


def fidis_check(spec: GeneratorSpec, r: Sequence[int], fs: Sequence, k_n: float, A: RelevanceSet,
                replicates: int, seed: int, threads: int | None = None) -> FidisCheck:
    """Joint behaviour of ``(Z_n(f_1), ..., Z_n(f_k))`` against the cluster covariance.

    Centering uses the pooled block mean over all replicates.  The prediction is the
    sample covariance of ``f(Y)`` over all blocks of all replicates divided by ``r_n v_n``.
    """
    grid = BlockGrid(LatticeShape(spec.shape), tuple(r))
    pilot_seed, rep_seed = (int(s.generate_state(1)[0]) for s in replicate_seeds(seed, 2))
    ms = marginal_scale(spec, k_n, A, seed=pilot_seed)

    def one(seq):
        fld = scale_field(generate_field(spec, np.random.Generator(np.random.PCG64(seq))), ms.u_n, k_n)
        return block_values(fld, grid, fs)

    with ThreadPoolExecutor(max_workers=threads) as ex:
        vals = np.stack(list(ex.map(one, replicate_seeds(rep_seed, replicates))))  # (R, M, k)
    R, M, k = vals.shape
    mu = vals.mean(axis=(0, 1))
    z = (vals - mu).sum(axis=1) / np.sqrt(grid.shape.size * ms.v_n)            # (R, k)
    scov = np.cov(z, rowvar=False, ddof=1).reshape(k, k)
    zc = z - z.mean(axis=0)
    prod = zc[:, :, None] * zc[:, None, :]
    scov_se = prod.std(axis=0, ddof=1) / np.sqrt(R)

    flat = vals.reshape(-1, k)
    fc = flat - flat.mean(axis=0)
    pred = (fc.T @ fc) / (len(flat) - 1) / (grid.r_n * ms.v_n)
    pprod = fc[:, :, None] * fc[:, None, :] / (grid.r_n * ms.v_n)
    pred_se = pprod.std(axis=0, ddof=1) / np.sqrt(len(flat))
    return FidisCheck(scov, scov_se, pred, pred_se, R)


# ------------------------------------------------------------------ monotone path

def path_sweep(spec: GeneratorSpec, path: Sequence[tuple], cfg: EstimatorConfig, replicates: int,
               seed: int, threads: int | None = None) -> list[dict]:
    """Run the experiment along growing ``(shape, r)`` pairs and collect lag-wise summaries."""
    out = []
    for i, (shape, r) in enumerate(path):
        step_cfg = EstimatorConfig(tuple(r), cfg.L_s, cfg.L_t, cfg.k_n, cfg.A, cfg.B, cfg.mc_pairs)
        rep = run_clt_experiment(spec.with_shape(shape), step_cfg, replicates, seed + i, threads)
        out.append(report_summary(rep) | {"shape": list(shape), "r": list(r)})
    return out


def report_summary(rep: CltReport) -> dict:
    lags = []
    for j, (hs, ht) in enumerate(rep.lags):
        m = rep.moments[j]
        lags.append({
            "h_s": hs, "h_t": ht,
            "centering": float(rep.centering[j]),
            "centering_stderr": float(rep.centering_stderr[j]),
            "mean": None if m is None else m.mean,
            "mean_stderr": None if m is None else float(np.sqrt(m.variance / m.n)),
            "variance": None if m is None else m.variance,
            "skewness": None if m is None else m.skewness,
            "excess_kurtosis": None if m is None else m.excess_kurtosis,
            "ks_distance": None if m is None else m.ks_distance,
            "sigma_diag": None if rep.sigma is None else float(rep.sigma.matrix[j, j]),
            "variance_to_sigma": None if not np.isfinite(rep.sigma_ratio[j]) else float(rep.sigma_ratio[j]),
        })
    return {
        "replicates": rep.replicates,
        "dropped": rep.dropped,
        "u_n": rep.scale.u_n,
        "v_n": rep.scale.v_n,
        "scale_method": rep.scale.method,
        "standardization_factor": rep.factor,
        "condition_echo": rep.condition_echo,
        "lags": lags,
    }
