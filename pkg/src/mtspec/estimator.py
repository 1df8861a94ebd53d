"""Multi-taper spectral estimation on lattice domains, and the risk-bound shapes.

For a sample X on a domain and K orthonormal tapers v_k,

    S_mt(xi) = (1/K) sum_k | sum_n X_n v_k[n] exp(-2 pi i <xi, n>) |^2
             = sum_{l in Omega - Omega} s_l exp(-2 pi i <xi, l>),
    s_l      = sum_{n - m = l} X_n X_m (1/K) sum_k v_k[n] v_k[m].

Frequencies live on the torus [0, 1)^d. Grid evaluations use FFTs of length
R per axis; inputs longer than R are folded modulo R, which is exact at the
grid frequencies l / R.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .domain import AcquisitionDomain
from .process import Autocovariance, SpectralDensity
from .slepian import TaperSet

__all__ = [
    "ProcessSample",
    "FrequencyGrid",
    "MtEstimate",
    "MSEBound",
    "multitaper_estimate",
    "estimate_on_grid",
    "LagKernel",
    "expected_estimate",
    "taper_lag_weights",
    "quadratic_form_matrix",
    "sup_norm_distance",
    "bias_bound",
    "mse_bound",
    "corollary_taper_count",
    "corollary_rate",
    "write_estimate_csv",
    "write_lag_csv",
]

# complex entries held at once while batching FFTs
_FFT_BUDGET = 1 << 22


@dataclass(frozen=True, eq=False)
class ProcessSample:
    domain: AcquisitionDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.shape[0] != self.domain.cardinality:
            raise ValueError(
                f"sample has {vals.shape[0]} values for a domain of {self.domain.cardinality} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", vals)

    def on_box(self) -> np.ndarray:
        out = np.zeros(self.domain.box_shape)
        out[self.domain.box_indices()] = self.values
        return out


@dataclass(frozen=True)
class FrequencyGrid:
    """Points xi_l with coordinates (l_k - 1) / R, l_k = 1..R."""

    dimension: int
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("grid resolution must be >= 1")

    @property
    def shape(self) -> tuple:
        return (self.resolution,) * self.dimension

    @property
    def size(self) -> int:
        return self.resolution**self.dimension

    def points(self) -> np.ndarray:
        axes = np.meshgrid(*[np.arange(self.resolution) / self.resolution] * self.dimension, indexing="ij")
        return np.stack(axes, axis=-1)


@dataclass(frozen=True, eq=False)
class MtEstimate:
    """A multi-taper estimate as a trigonometric polynomial.

    Attributes
    ----------
    lags : ndarray of int, shape (L, d)
        The difference set of the domain, lexicographically sorted.
    coefficients : ndarray, shape (L,)
        Lag coefficients; ``coefficients[i]`` multiplies exp(-2 pi i <xi, lags[i]>).
    grid : FrequencyGrid
    grid_values : ndarray, shape grid.shape
    degree : int
        ceil(diam), the maximum component degree.
    """

    lags: np.ndarray
    coefficients: np.ndarray
    grid: FrequencyGrid
    grid_values: np.ndarray
    degree: int

    @property
    def dimension(self) -> int:
        return self.lags.shape[1]

    def lag_map(self) -> dict:
        return {tuple(int(c) for c in l): float(v) for l, v in zip(self.lags, self.coefficients)}

    def evaluate(self, xi) -> np.ndarray:
        """Direct evaluation at arbitrary frequencies, shape (..., d) -> (...)."""
        pts = np.asarray(xi, dtype=float)
        if self.dimension == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        # coefficients are even in the lag, so only the cosine part survives
        return np.cos(2 * np.pi * (pts @ self.lags.T)) @ self.coefficients

    def on_grid(self, resolution: int) -> np.ndarray:
        """Values at (l_1, ..., l_d) / resolution, exact up to rounding."""
        d = self.dimension
        buf = np.zeros((resolution,) * d)
        np.add.at(buf, tuple((self.lags % resolution).T), self.coefficients)
        return sp_fft.fftn(buf).real


def _fold(arr: np.ndarray, size: int, axes) -> np.ndarray:
    """Sum ``arr`` modulo ``size`` along ``axes`` (zero-padding shorter axes)."""
    for ax in axes:
        n = arr.shape[ax]
        if n == size:
            continue
        if n < size:
            pad = [(0, 0)] * arr.ndim
            pad[ax] = (0, size - n)
            arr = np.pad(arr, pad)
            continue
        blocks = -(-n // size)
        pad = [(0, 0)] * arr.ndim
        pad[ax] = (0, blocks * size - n)
        arr = np.pad(arr, pad)
        shape = arr.shape[:ax] + (blocks, size) + arr.shape[ax + 1:]
        arr = arr.reshape(shape).sum(axis=ax)
    return arr


def _power_average(tapered: np.ndarray, sizes: tuple, workers=None) -> np.ndarray:
    """mean over axis 1 of |FFT|^2 for an array of shape (B, K, *box)."""
    B, K = tapered.shape[:2]
    d = tapered.ndim - 2
    axes = tuple(range(2, 2 + d))
    out = np.zeros((B,) + tuple(sizes))
    per_taper = int(np.prod(sizes))
    chunk = max(1, _FFT_BUDGET // max(per_taper * B, 1))
    for start in range(0, K, chunk):
        block = tapered[:, start:start + chunk]
        spec = sp_fft.fftn(block, s=sizes, axes=axes, workers=workers)
        out += (spec.real**2 + spec.imag**2).sum(axis=1)
    return out / K


def estimate_on_grid(values, tapers: TaperSet, resolution: int, workers=None) -> np.ndarray:
    """Grid values of the estimator for one sample (shape (N,)) or a batch (B, N).

    Returns shape (resolution,)*d or (B,) + (resolution,)*d.
    """
    vals = np.asarray(values, dtype=float)
    single = vals.ndim == 1
    vals = np.atleast_2d(vals)
    dom = tapers.domain
    box = np.zeros((vals.shape[0],) + dom.box_shape)
    box[(slice(None),) + dom.box_indices()] = vals
    taper_box = tapers.on_box()
    d = dom.dimension
    sizes = (int(resolution),) * d
    out = np.empty((vals.shape[0],) + sizes)
    per_sample = tapers.K * int(np.prod(sizes))
    bchunk = max(1, _FFT_BUDGET // per_sample)
    for start in range(0, vals.shape[0], bchunk):
        tapered = box[start:start + bchunk, None] * taper_box[None]
        if any(s > resolution for s in dom.box_shape):
            tapered = _fold(tapered, resolution, tuple(range(2, 2 + d)))
        out[start:start + bchunk] = _power_average(tapered, sizes, workers)
    return out[0] if single else out


class LagKernel:
    """Precomputed pair-to-lag map for evaluating lag coefficients directly.

    For a domain with N points this stores the N(N+1)/2 upper-triangle pairs
    of the averaged taper kernel, so one sample costs O(N^2) work followed by
    a single grid FFT. This beats the K tapered FFTs of
    :func:`estimate_on_grid` when K * R^d is large compared with N^2.
    """

    def __init__(self, tapers: TaperSet):
        dom = tapers.domain
        self.tapers = tapers
        self.lags = dom.difference_set
        N = dom.cardinality
        pts = dom.points
        kernel = tapers.averaged_kernel()
        iu, ju = np.triu_indices(N, 1)
        box = np.asarray(dom.box_shape)
        span = 2 * box - 1
        code = np.ravel_multi_index(tuple((self.lags + box - 1).T), tuple(span))
        lookup = np.full(int(np.prod(span)), -1, dtype=np.int64)
        lookup[code] = np.arange(self.lags.shape[0])
        diff = pts[iu] - pts[ju]
        self._pair_lag = lookup[np.ravel_multi_index(tuple((diff + box - 1).T), tuple(span))]
        self._pair_weight = kernel[iu, ju]
        self._iu = iu.astype(np.intp)
        self._ju = ju.astype(np.intp)
        self._diag = np.diag(kernel).copy()
        self._zero = int(lookup[np.ravel_multi_index(tuple(box - 1), tuple(span))])
        neg = np.ravel_multi_index(tuple((-self.lags + box - 1).T), tuple(span))
        self._negate = lookup[neg]

    def coefficients(self, values) -> np.ndarray:
        """Lag coefficients on the difference set for a sample of shape (N,)."""
        x = np.asarray(values, dtype=float)
        half = np.bincount(self._pair_lag, weights=x[self._iu] * x[self._ju] * self._pair_weight,
                           minlength=self.lags.shape[0])
        coef = half + half[self._negate]
        coef[self._zero] = np.dot(x * x, self._diag)
        return coef

    def on_grid(self, values, resolution: int, workers=None) -> np.ndarray:
        """Estimator values on the (resolution,)*d grid for one sample or a batch."""
        vals = np.asarray(values, dtype=float)
        single = vals.ndim == 1
        vals = np.atleast_2d(vals)
        d = self.lags.shape[1]
        buf = np.zeros((vals.shape[0],) + (resolution,) * d)
        idx = tuple((self.lags % resolution).T)
        for b, x in enumerate(vals):
            np.add.at(buf[b], idx, self.coefficients(x))
        out = sp_fft.fftn(buf, axes=tuple(range(1, d + 1)), workers=workers).real
        return out[0] if single else out

    @staticmethod
    def preferred(tapers: TaperSet, resolution: int) -> bool:
        """True when the direct lag route is expected to be cheaper."""
        N = tapers.domain.cardinality
        R = resolution ** tapers.domain.dimension
        return N * N < 0.25 * tapers.K * R * max(math.log2(R), 1.0)


def _lag_sizes(domain: AcquisitionDomain) -> tuple:
    return tuple(2 * s - 1 for s in domain.box_shape)


def _gather_lags(corr: np.ndarray, lags: np.ndarray) -> np.ndarray:
    sizes = np.asarray(corr.shape)
    return corr[tuple((lags % sizes).T)]


def taper_lag_weights(tapers: TaperSet) -> np.ndarray:
    """c_l = (1/K) sum_k sum_{n - m = l} v_k[n] v_k[m] on the domain's difference set."""
    dom = tapers.domain
    sizes = _lag_sizes(dom)
    power = _power_average(tapers.on_box()[None], sizes)[0]
    corr = sp_fft.ifftn(power).real
    return _gather_lags(corr, dom.difference_set)


def multitaper_estimate(sample: ProcessSample, tapers: TaperSet, grid: FrequencyGrid,
                        workers=None) -> MtEstimate:
    """Multi-taper estimate of ``sample`` with ``tapers``, evaluated on ``grid``."""
    if sample.domain != tapers.domain:
        raise ValueError("sample and tapers are defined on different domains")
    dom = sample.domain
    if grid.dimension != dom.dimension:
        raise ValueError(f"grid dimension {grid.dimension} does not match domain dimension {dom.dimension}")
    sizes = _lag_sizes(dom)
    box = np.zeros(dom.box_shape)
    box[dom.box_indices()] = sample.values
    tapered = (box[None] * tapers.on_box())[None]
    power = _power_average(tapered, sizes, workers)[0]
    corr = sp_fft.ifftn(power).real
    lags = dom.difference_set
    coef = _gather_lags(corr, lags)
    values = estimate_on_grid(sample.values, tapers, grid.resolution, workers)
    return MtEstimate(lags=lags, coefficients=coef, grid=grid, grid_values=values, degree=dom.degree)


def expected_estimate(tapers: TaperSet, autocov: Autocovariance, resolution: int) -> np.ndarray:
    """E[S_mt] on the grid: sum_l sigma_l c_l exp(-2 pi i <xi, l>)."""
    dom = tapers.domain
    lags = dom.difference_set
    need = int(np.abs(lags).max(initial=0))
    if autocov.max_lag < need:
        raise ValueError(f"autocovariance known to lag {autocov.max_lag}, need {need}")
    sigma = autocov.values[tuple((lags + autocov.max_lag).T)]
    weights = taper_lag_weights(tapers) * sigma
    buf = np.zeros((resolution,) * dom.dimension)
    np.add.at(buf, tuple((lags % resolution).T), weights)
    return sp_fft.fftn(buf).real


def quadratic_form_matrix(tapers: TaperSet, xi) -> np.ndarray:
    """V(xi)[n, m] = exp(-2 pi i <xi, n - m>) (1/K) sum_k v_k[n] v_k[m].

    <V(xi) X, X> equals the estimator at xi for every sample X.
    """
    pts = tapers.domain.points
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    phase = np.exp(-2j * np.pi * (pts @ xi))
    return phase[:, None] * tapers.averaged_kernel() * phase.conj()[None, :]


def sup_norm_distance(S: SpectralDensity, est: MtEstimate, oversample: int = 4) -> float:
    """max |S - est| over a grid of (oversample * degree)^d points.

    This approximates the uniform norm from below; ``oversample`` >= 4.
    """
    if oversample < 4:
        raise ValueError("oversample must be >= 4")
    R = oversample * max(est.degree, 1)
    return float(np.abs(S.on_grid(R) - est.on_grid(R)).max())


def bias_bound(domain: AcquisitionDomain, K: int, c2_norm: float) -> float:
    """Shape of the pointwise bias bound, constants set to 1.

    c2 * [(K/N)^(2/d) + P / (N^(1-1/d) K^(1/d)) * (1 + log(N/P))], P the digital perimeter.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    N = domain.cardinality
    P = domain.perimeter
    d = domain.dimension
    term1 = (K / N) ** (2.0 / d)
    term2 = P / (N ** (1.0 - 1.0 / d) * K ** (1.0 / d)) * (1.0 + math.log(N / P))
    return float(c2_norm) * (term1 + term2)


@dataclass(frozen=True)
class MSEBound:
    """Three-term mean-squared-error bound shape, constants set to 1."""

    variance: float
    bias_volume: float
    bias_boundary: float
    perimeter_condition: bool

    @property
    def value(self) -> float:
        return self.variance + self.bias_volume + self.bias_boundary

    def __float__(self):
        return self.value


def mse_bound(domain: AcquisitionDomain, K: int) -> MSEBound:
    """max_{p=1,2} (log diam / K)^p + (K/N)^(4/d) + P^2 / (N^(2-2/d) K^(2/d)) (1 + log(N/P))^2.

    ``perimeter_condition`` reports whether P >= (N/K)^(1-1/d).
    """
    N = domain.cardinality
    if N < 3:
        raise ValueError("the bound needs at least 3 points")
    if K < 1:
        raise ValueError("K must be >= 1")
    d = domain.dimension
    P = domain.perimeter
    r = math.log(domain.diameter) / K
    variance = max(r, r * r)
    bias_volume = (K / N) ** (4.0 / d)
    bias_boundary = P**2 / (N ** (2.0 - 2.0 / d) * K ** (2.0 / d)) * (1.0 + math.log(N / P)) ** 2
    return MSEBound(variance, bias_volume, bias_boundary, P >= (N / K) ** (1.0 - 1.0 / d))


def corollary_taper_count(domain: AcquisitionDomain) -> int:
    """Rate-optimal taper count.

    d = 1: ceil((log diam * N^4)^(1/5)); d >= 2: ceil((log(diam)^d * N^2)^(1/3)).
    Clamped to [1, N] with a warning. A warning is also issued when
    diam > exp(N^(1/d)), outside the range where the rate holds.
    """
    diam = domain.diameter
    if diam <= 1.0:
        raise ValueError(f"diameter must exceed 1, got {diam}")
    N = domain.cardinality
    d = domain.dimension
    ld = math.log(diam)
    if ld > N ** (1.0 / d):
        warnings.warn(f"diam={diam:.4g} exceeds exp(N^(1/d)); rate guarantee does not apply")
    if d == 1:
        K = math.ceil((ld * N**4) ** 0.2)
    else:
        K = math.ceil((ld**d * N**2) ** (1.0 / 3.0))
    if K > N or K < 1:
        warnings.warn(f"balanced taper count {K} clamped to [1, {N}]")
        K = min(max(K, 1), N)
    return int(K)


def corollary_rate(domain: AcquisitionDomain) -> float:
    """(log diam / N)^(4/5) for d = 1, (log diam / N^(1/d))^(4/3) for d >= 2."""
    ld = math.log(domain.diameter)
    N = domain.cardinality
    if domain.dimension == 1:
        return (ld / N) ** 0.8
    return (ld / N ** (1.0 / domain.dimension)) ** (4.0 / 3.0)


def write_estimate_csv(est: MtEstimate, path) -> None:
    d = est.dimension
    pts = est.grid.points().reshape(-1, d)
    vals = est.grid_values.ravel()
    with open(path, "w") as fh:
        fh.write(",".join([f"xi_{j + 1}" for j in range(d)] + ["S_hat"]) + "\n")
        for p, v in zip(pts, vals):
            fh.write(",".join([repr(float(c)) for c in p] + [repr(float(v))]) + "\n")


def write_lag_csv(est: MtEstimate, path) -> None:
    d = est.dimension
    with open(path, "w") as fh:
        fh.write(",".join([f"lag_{j + 1}" for j in range(d)] + ["sigma_hat"]) + "\n")
        for l, v in zip(est.lags, est.coefficients):
            fh.write(",".join([str(int(c)) for c in l] + [repr(float(v))]) + "\n")
