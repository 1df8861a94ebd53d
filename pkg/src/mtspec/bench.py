"""Monte Carlo risk experiments for the multi-taper estimator.

Samples come from the circulant model with order ceil(diam), restricted to
the domain. Each replicate owns a generator split from the experiment seed
(``numpy.random.SeedSequence.spawn``), and replicates are reduced in index
order, so a given seed and configuration always give bit-identical reports.
"""
from __future__ import annotations

import json
import math
import platform
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy
from scipy import stats

from .domain import AcquisitionDomain
from .estimator import LagKernel, bias_bound, estimate_on_grid, expected_estimate, mse_bound
from .process import (
    SpectralDensity,
    autocovariance,
    build_circulant_model,
    c2_norm,
    replicate_generators,
    sample_on_domain,
)
from .slepian import TaperConfig, compute_tapers

__all__ = [
    "RiskReport",
    "TailReport",
    "RateFit",
    "run_mse_experiment",
    "fit_rate_slope",
    "tail_check",
    "fit_tail_constant",
    "describe_domain",
    "write_risk_csv",
    "write_metadata",
]

# samples estimated together in one FFT batch
_BATCH = 16


def describe_domain(domain: AcquisitionDomain) -> str:
    return f"d{domain.dimension}_N{domain.cardinality}_box{'x'.join(map(str, domain.box_shape))}"


def _grid_estimator(tapers, R, workers):
    # both routes give the same values to rounding; pick the cheaper one
    if LagKernel.preferred(tapers, R):
        kernel = LagKernel(tapers)
        return lambda xs: kernel.on_grid(xs, R, workers)
    return lambda xs: estimate_on_grid(xs, tapers, R, workers)


def _c2_resolution(d: int) -> int:
    return {1: 4096, 2: 256}.get(d, 32)


@dataclass
class RiskReport:
    """Empirical sup-norm risk of one (domain, density, K) configuration.

    ``mse`` is the mean over replicates of max_grid |S_mt - S|^2. ``bias_sup``
    is max_grid |mean S_mt - S| and ``max_variance`` the largest per-frequency
    sample variance. The ``point_*`` fields decompose the pointwise MSE at the
    frequency where bias^2 + variance is largest.
    """

    domain: str
    N: int
    diameter: float
    perimeter: int
    density: str
    c2: float
    K: int
    W: float
    replicates: int
    seed: int
    grid_resolution: int
    mse: float
    mse_se: float
    bias_sup: float
    max_variance: float
    mse_bound: float
    bias_bound: float
    point_mse: float
    point_bias_sq: float
    point_variance: float
    point_se: float
    mean_estimate: np.ndarray = field(repr=False, default=None)
    variance: np.ndarray = field(repr=False, default=None)

    def row(self) -> dict:
        out = asdict(self)
        out.pop("mean_estimate")
        out.pop("variance")
        return out


def run_mse_experiment(density: SpectralDensity, domain: AcquisitionDomain, K: int,
                       grid_oversample: int = 4, replicates: int = 100, seed: int = 0,
                       workers=None, keep_fields: bool = False) -> RiskReport:
    """Empirical sup-norm MSE of the K-taper estimator.

    The bandwidth is set to W = (K / N)^(1/d) so that K stays the only knob.
    """
    N = domain.cardinality
    d = domain.dimension
    if not 1 <= K <= N:
        raise ValueError(f"K must lie in [1, {N}], got {K}")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    if density.dimension != d:
        raise ValueError("density and domain dimensions differ")
    if grid_oversample < 4:
        raise ValueError("grid_oversample must be >= 4")
    c2 = c2_norm(density, _c2_resolution(d))
    if c2 > 1.0:
        warnings.warn(f"density {density.describe()} has C2 norm {c2:.3f} > 1")
    W = min(1.0, (K / N) ** (1.0 / d))
    tapers = compute_tapers(domain, TaperConfig(W, int(K)))
    omega = max(domain.degree, 1)
    model = build_circulant_model(density, omega)
    R = grid_oversample * omega
    target = density.on_grid(R)
    estimate = _grid_estimator(tapers, R, workers)

    gens = replicate_generators(seed, replicates)
    sup_sq = np.empty(replicates)
    count = 0
    mean = np.zeros(target.shape)
    m2 = np.zeros(target.shape)
    err2 = np.zeros(target.shape)
    err4 = np.zeros(target.shape)
    for start in range(0, replicates, _BATCH):
        batch = gens[start:start + _BATCH]
        xs = np.stack([sample_on_domain(model, domain, g) for g in batch])
        est = estimate(xs)
        diff = est - target
        axes = tuple(range(1, diff.ndim))
        sup_sq[start:start + len(batch)] = np.abs(diff).max(axis=axes) ** 2
        # Chan et al. pairwise update of mean and sum of squared deviations
        b = len(batch)
        bmean = est.mean(axis=0)
        bm2 = ((est - bmean) ** 2).sum(axis=0)
        delta = bmean - mean
        tot = count + b
        mean = mean + delta * (b / tot)
        m2 = m2 + bm2 + delta**2 * (count * b / tot)
        count = tot
        err2 += (diff**2).sum(axis=0)
        err4 += (diff**4).sum(axis=0)

    variance = m2 / (replicates - 1)
    bias = mean - target
    pointwise = bias**2 + variance
    star = np.unravel_index(int(np.argmax(pointwise)), pointwise.shape)
    p_mse = err2[star] / replicates
    p_sq = err4[star] / replicates
    p_se = math.sqrt(max(p_sq - p_mse**2, 0.0) / replicates)
    report = RiskReport(
        domain=describe_domain(domain),
        N=N,
        diameter=domain.diameter,
        perimeter=domain.perimeter,
        density=density.describe(),
        c2=c2,
        K=int(K),
        W=W,
        replicates=int(replicates),
        seed=int(seed),
        grid_resolution=int(R),
        mse=float(sup_sq.mean()),
        mse_se=float(sup_sq.std(ddof=1) / math.sqrt(replicates)),
        bias_sup=float(np.abs(bias).max()),
        max_variance=float(variance.max()),
        mse_bound=float(mse_bound(domain, K).value) if N >= 3 else float("nan"),
        bias_bound=bias_bound(domain, K, c2),
        point_mse=float(p_mse),
        point_bias_sq=float(bias[star] ** 2),
        point_variance=float(variance[star]),
        point_se=float(p_se),
    )
    if keep_fields:
        report.mean_estimate = mean
        report.variance = variance
    return report


@dataclass(frozen=True)
class RateFit:
    slope: float
    half_width: float
    intercept: float
    points: int


def fit_rate_slope(x, y, confidence: float = 0.95) -> RateFit:
    """Least-squares slope of log y against log x.

    ``half_width`` is the two-sided Student-t confidence half-width of the
    slope computed from the residuals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 points to fit a slope")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("rate fits need positive inputs")
    fit = stats.linregress(np.log(x), np.log(y))
    t = stats.t.ppf(0.5 + confidence / 2, x.size - 2)
    return RateFit(float(fit.slope), float(t * fit.stderr), float(fit.intercept), int(x.size))


@dataclass
class TailReport:
    """Empirical tail of max_l |S_mt(xi_l) - E S_mt(xi_l)| over the 4w-grid.

    ``bound`` is 2 w^d exp(-min(K t^2 / s^2, K t / s) / C) with s = sup S and
    C the smallest constant that keeps it above every empirical point.
    """

    thresholds: np.ndarray
    exceedance: np.ndarray
    bound: np.ndarray
    C: float
    K: int
    omega: int
    sup_density: float
    replicates: int
    seed: int
    maxima: np.ndarray = field(repr=False, default=None)

    @property
    def dominated(self) -> bool:
        return bool(np.all(self.bound >= self.exceedance))


def _tail_exponent(t, K, s):
    t = np.asarray(t, dtype=float)
    return np.minimum(K * t * t / s**2, K * t / s)


def fit_tail_constant(thresholds, exceedance, K: int, omega: int, d: int, sup_density: float) -> float:
    """Smallest C with 2 w^d exp(-m(t)/C) >= p(t) at every threshold."""
    m = _tail_exponent(thresholds, K, sup_density)
    p = np.asarray(exceedance, dtype=float)
    prefactor = 2.0 * omega**d
    use = (p > 0) & (m > 0)
    if not np.any(use):
        return 0.0
    return float(np.max(m[use] / np.log(prefactor / p[use])))


def tail_check(density: SpectralDensity, domain: AcquisitionDomain, K: int, thresholds,
               replicates: int = 1000, seed: int = 0, workers=None) -> TailReport:
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds < 0) or np.any(np.diff(thresholds) <= 0):
        raise ValueError("thresholds must be nonnegative and strictly increasing")
    N = domain.cardinality
    d = domain.dimension
    W = min(1.0, (K / N) ** (1.0 / d))
    tapers = compute_tapers(domain, TaperConfig(W, int(K)))
    omega = max(domain.degree, 1)
    model = build_circulant_model(density, omega)
    R = 4 * omega
    max_lag = max(domain.box_shape) - 1
    mean = expected_estimate(tapers, autocovariance(density, max(max_lag, 1)), R)
    estimate = _grid_estimator(tapers, R, workers)
    gens = replicate_generators(seed, replicates)
    maxima = np.empty(replicates)
    for start in range(0, replicates, _BATCH):
        batch = gens[start:start + _BATCH]
        xs = np.stack([sample_on_domain(model, domain, g) for g in batch])
        z = estimate(xs) - mean
        maxima[start:start + len(batch)] = np.abs(z).reshape(len(batch), -1).max(axis=1)
    exceed = np.array([np.mean(maxima >= t) for t in thresholds])
    s = density.sup_norm(_c2_resolution(d))
    C = fit_tail_constant(thresholds, exceed, K, omega, d, s)
    # relative slack absorbs rounding at the threshold where the fit is tight
    C *= 1.0 + 1e-9
    m = _tail_exponent(thresholds, K, s)
    bound = 2.0 * omega**d * np.exp(-m / C) if C > 0 else np.full(m.shape, 2.0 * omega**d)
    return TailReport(thresholds, exceed, bound, C, int(K), omega, s, int(replicates), int(seed), maxima)


def write_risk_csv(reports, path, footer=()) -> None:
    """One CSV row per report; ``footer`` lines are appended as ``#`` comments."""
    rows = [r.row() for r in reports]
    if not rows:
        raise ValueError("no reports to write")
    cols = list(rows[0])
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")
        for line in footer:
            fh.write(f"# {line}\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metadata(path, **info) -> None:
    """JSON sidecar with library versions plus caller-supplied fields (seeds, config)."""
    from . import __version__

    meta = {
        "mtspec": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
    meta.update(info)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
