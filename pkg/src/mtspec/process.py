"""Spectral densities, autocovariances and exact Gaussian simulation.

A spectral density ``S`` is a 1-periodic, even, nonnegative function on the
torus [0, 1)^d. Its autocovariance is

    sigma_n = int_{[0,1]^d} S(xi) exp(-2 pi i <xi, n>) dxi.

Samples are drawn from the circulant model on the window {-w..w}^d: the
covariance is circulant on a torus of side P = 2w + 1 and is diagonalised by
the unitary DFT, with eigenvalues F_w(S)(k / P) given by the partial Fourier
sum of S of order w. Restricted to {0..w}^d the circulant samples have
exactly the law of the stationary process.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

__all__ = [
    "SpectralDensity",
    "ConstantDensity",
    "CosineDensity",
    "TrigPolynomialDensity",
    "CallableDensity",
    "EvennessError",
    "NotSamplableError",
    "Autocovariance",
    "CirculantModel",
    "autocovariance",
    "c2_norm",
    "partial_fourier_sum",
    "partial_fourier_grid",
    "build_circulant_model",
    "sample_process",
    "sample_on_domain",
    "wrap_index",
    "replicate_generators",
    "density_from_spec",
    "write_sample_csv",
    "read_sample_csv",
    "DEFAULT_QUADRATURE",
]

# quadrature points per axis used for autocovariances, by dimension
DEFAULT_QUADRATURE = {1: 4096, 2: 512, 3: 128}

_IMAG_TOL = 1e-10
_NEG_EIG_TOL = 1e-10
_FD_STEP = 1e-4


class EvennessError(ValueError):
    """A density produced autocovariances with a non-negligible imaginary part."""


class NotSamplableError(ValueError):
    """The circulant embedding has a negative eigenvalue."""


def _as_points(xi, d: int) -> np.ndarray:
    arr = np.asarray(xi, dtype=float)
    if d == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != d:
        raise ValueError(f"expected frequencies with last axis {d}, got shape {arr.shape}")
    return arr


def grid_points(resolution: int, d: int) -> np.ndarray:
    """Points (l_1, ..., l_d) / resolution, l_k = 0..resolution-1, shape (R,)*d + (d,)."""
    axes = np.meshgrid(*[np.arange(resolution) / resolution] * d, indexing="ij")
    return np.stack(axes, axis=-1)


class SpectralDensity:
    """Base class for spectral densities on [0, 1)^d.

    Subclasses implement :meth:`value`; analytic families also override
    :meth:`gradient` and :meth:`hessian`. The base implementations of the
    derivatives use central finite differences with step 1e-4.
    """

    dimension = 1
    name = "density"
    has_derivatives = False

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        args = ",".join(f"{v:g}" if isinstance(v, float) else str(v) for v in self.params().values())
        return f"{self.name}({args})"

    def value(self, xi) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, xi):
        return self.value(xi)

    def gradient(self, xi) -> np.ndarray:
        pts = _as_points(xi, self.dimension)
        out = np.empty(pts.shape)
        for j in range(self.dimension):
            e = np.zeros(self.dimension)
            e[j] = _FD_STEP
            out[..., j] = (self.value(pts + e) - self.value(pts - e)) / (2 * _FD_STEP)
        return out

    def hessian(self, xi) -> np.ndarray:
        pts = _as_points(xi, self.dimension)
        d = self.dimension
        out = np.empty(pts.shape + (d,))
        h = _FD_STEP
        f0 = self.value(pts)
        for j in range(d):
            ej = np.zeros(d)
            ej[j] = h
            out[..., j, j] = (self.value(pts + ej) - 2 * f0 + self.value(pts - ej)) / h**2
            for k in range(j + 1, d):
                ek = np.zeros(d)
                ek[k] = h
                mixed = (
                    self.value(pts + ej + ek)
                    - self.value(pts + ej - ek)
                    - self.value(pts - ej + ek)
                    + self.value(pts - ej - ek)
                ) / (4 * h * h)
                out[..., j, k] = out[..., k, j] = mixed
        return out

    def on_grid(self, resolution: int) -> np.ndarray:
        """Values at (l_1, ..., l_d) / resolution, returned with shape (resolution,)*d."""
        return self.value(grid_points(resolution, self.dimension))

    def sup_norm(self, resolution: int = 1024) -> float:
        return float(np.abs(self.on_grid(resolution)).max())


class ConstantDensity(SpectralDensity):
    """S = c; the spectral density of white noise with variance c."""

    name = "constant"
    has_derivatives = True

    def __init__(self, c: float, d: int = 1):
        self.c = float(c)
        self.dimension = int(d)

    def params(self):
        return {"c": self.c}

    def value(self, xi):
        pts = _as_points(xi, self.dimension)
        return np.full(pts.shape[:-1], self.c)

    def gradient(self, xi):
        return np.zeros(_as_points(xi, self.dimension).shape)

    def hessian(self, xi):
        pts = _as_points(xi, self.dimension)
        return np.zeros(pts.shape + (self.dimension,))


class CosineDensity(SpectralDensity):
    """S(xi) = c + a * sum_j cos(2 pi xi_j).

    Its only nonzero autocovariances are sigma_0 = c and sigma_{+-e_j} = a / 2.
    """

    name = "cosine"
    has_derivatives = True

    def __init__(self, c: float, a: float, d: int = 1):
        self.c = float(c)
        self.a = float(a)
        self.dimension = int(d)

    def params(self):
        return {"c": self.c, "a": self.a}

    def value(self, xi):
        pts = _as_points(xi, self.dimension)
        return self.c + self.a * np.cos(2 * np.pi * pts).sum(axis=-1)

    def gradient(self, xi):
        pts = _as_points(xi, self.dimension)
        return -2 * np.pi * self.a * np.sin(2 * np.pi * pts)

    def hessian(self, xi):
        pts = _as_points(xi, self.dimension)
        diag = -4 * np.pi**2 * self.a * np.cos(2 * np.pi * pts)
        return diag[..., :, None] * np.eye(self.dimension)


class TrigPolynomialDensity(SpectralDensity):
    """S(xi) = sum_l c_l exp(2 pi i <xi, l>) for finitely many lags l.

    Coefficients must be even (c_{-l} = c_l) so that S is real.
    """

    name = "trigpoly"
    has_derivatives = True

    def __init__(self, lags, coefficients):
        lags = np.asarray(lags, dtype=np.int64)
        if lags.ndim == 1:
            lags = lags[:, None]
        self.lags = lags
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.dimension = lags.shape[1]

    def params(self):
        return {"terms": len(self.coefficients)}

    def _phase(self, pts):
        return 2 * np.pi * (pts @ self.lags.T)

    def value(self, xi):
        pts = _as_points(xi, self.dimension)
        return np.cos(self._phase(pts)) @ self.coefficients

    def gradient(self, xi):
        pts = _as_points(xi, self.dimension)
        s = -np.sin(self._phase(pts)) * self.coefficients
        return 2 * np.pi * (s @ self.lags)

    def hessian(self, xi):
        pts = _as_points(xi, self.dimension)
        c = -np.cos(self._phase(pts)) * self.coefficients
        outer = self.lags[:, :, None] * self.lags[:, None, :]
        return 4 * np.pi**2 * np.tensordot(c, outer, axes=([-1], [0]))


class CallableDensity(SpectralDensity):
    """Wrap a vectorised function ``f(points) -> values``; derivatives by finite differences."""

    name = "callable"

    def __init__(self, func, d: int = 1, label: str = "callable"):
        self._func = func
        self.dimension = int(d)
        self.name = label

    def value(self, xi):
        pts = _as_points(xi, self.dimension)
        return np.asarray(self._func(pts), dtype=float)


@dataclass(frozen=True)
class Autocovariance:
    """Autocovariances sigma_n for ||n||_inf <= max_lag.

    ``values`` has shape (2*max_lag + 1,)*d; entry ``values[n + max_lag]``
    holds sigma_n.
    """

    values: np.ndarray
    max_lag: int

    @property
    def dimension(self) -> int:
        return self.values.ndim

    def __getitem__(self, lag) -> float:
        lag = np.atleast_1d(np.asarray(lag, dtype=np.int64))
        if np.any(np.abs(lag) > self.max_lag):
            return 0.0
        return float(self.values[tuple(lag + self.max_lag)])

    def truncated(self, max_lag: int) -> "Autocovariance":
        if max_lag > self.max_lag:
            raise ValueError("cannot extend an autocovariance table")
        cut = self.max_lag - max_lag
        sl = tuple(slice(cut, cut + 2 * max_lag + 1) for _ in range(self.dimension))
        return Autocovariance(self.values[sl], max_lag)


def autocovariance(S: SpectralDensity, max_lag: int, resolution: int | None = None) -> Autocovariance:
    """Fourier coefficients of ``S`` by periodic trapezoidal quadrature.

    The default resolution per axis is ``max(DEFAULT_QUADRATURE[d], 8 * max_lag)``.
    Raises :class:`EvennessError` when the imaginary residue exceeds 1e-10.
    """
    d = S.dimension
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    base = DEFAULT_QUADRATURE.get(d, 64)
    G = int(resolution) if resolution is not None else max(base, 8 * max_lag)
    if G < 2 * max_lag + 1:
        raise ValueError(f"quadrature resolution {G} cannot resolve lag {max_lag}")
    coef = sp_fft.fftn(S.on_grid(G)) / G**d
    idx = np.r_[np.arange(0, max_lag + 1), np.arange(G - max_lag, G)]
    coef = coef[np.ix_(*[idx] * d)]
    coef = sp_fft.fftshift(coef)
    resid = np.abs(coef.imag).max()
    if resid > _IMAG_TOL:
        raise EvennessError(f"autocovariance imaginary residue {resid:.2e}; density is not even")
    return Autocovariance(np.ascontiguousarray(coef.real), max_lag)


def c2_norm(S: SpectralDensity, resolution: int = 1024) -> float:
    """max of |S|, |dS/dxi_j| and |d^2 S/dxi_j dxi_k| over a resolution^d grid."""
    pts = grid_points(resolution, S.dimension)
    return float(
        max(
            np.abs(S.value(pts)).max(),
            np.abs(S.gradient(pts)).max(),
            np.abs(S.hessian(pts)).max(),
        )
    )


def partial_fourier_sum(S, p: int, xi, autocov: Autocovariance | None = None) -> np.ndarray:
    """F_p(S)(xi) = sum over ||k||_inf <= p of sigma_k exp(2 pi i <xi, k>).

    ``S`` may be a density or, if ``autocov`` is given, ignored.
    """
    if autocov is None:
        autocov = autocovariance(S, p)
    ac = autocov.truncated(p)
    d = ac.dimension
    pts = _as_points(xi, d)
    axes = np.meshgrid(*[np.arange(-p, p + 1)] * d, indexing="ij")
    lags = np.stack([a.ravel() for a in axes], axis=1)
    vals = np.exp(2j * np.pi * (pts @ lags.T)) @ ac.values.ravel()
    resid = np.abs(vals.imag).max() if vals.size else 0.0
    if resid > _IMAG_TOL:
        raise EvennessError(f"partial Fourier sum has imaginary part {resid:.2e}")
    return vals.real


def partial_fourier_grid(autocov: Autocovariance, p: int, resolution: int) -> np.ndarray:
    """F_p(S) at (l_1, ..., l_d) / resolution via an FFT; shape (resolution,)*d.

    Wrapping lags modulo the grid size keeps the evaluation exact on the grid.
    """
    ac = autocov.truncated(p)
    d = ac.dimension
    buf = np.zeros((resolution,) * d)
    idx = np.arange(-p, p + 1) % resolution
    np.add.at(buf, np.ix_(*[idx] * d), ac.values)
    # sum_k c_k exp(+2 pi i j k / R) = R^d * ifft
    vals = sp_fft.ifftn(buf) * resolution**d
    resid = np.abs(vals.imag).max()
    if resid > _IMAG_TOL:
        raise EvennessError(f"partial Fourier sum has imaginary part {resid:.2e}")
    return vals.real


def wrap_index(diff, omega: int) -> np.ndarray:
    """Componentwise wrap u(n - m) onto {0..omega}: |n_j - m_j| or 2w+1 - |n_j - m_j|."""
    a = np.abs(np.asarray(diff, dtype=np.int64))
    if np.any(a > 2 * omega):
        raise ValueError("differences must satisfy |n_j - m_j| <= 2 * omega")
    return np.where(a <= omega, a, 2 * omega + 1 - a)


def _signed_wrap(diff, omega: int) -> np.ndarray:
    diff = np.asarray(diff, dtype=np.int64)
    P = 2 * omega + 1
    return (diff + omega) % P - omega


@dataclass(frozen=True, eq=False)
class CirculantModel:
    """Circulant Gaussian model on the window {-omega..omega}^d.

    ``eigenvalues`` has shape (P,)*d with P = 2*omega + 1; entry
    ``eigenvalues[k + omega]`` is F_omega(S)(k / P).
    """

    density: SpectralDensity
    omega: int
    autocov: Autocovariance
    eigenvalues: np.ndarray
    clamped: int = 0
    _sqrt_eig_fft: np.ndarray = field(repr=False, default=None)

    @property
    def dimension(self) -> int:
        return self.autocov.dimension

    @property
    def period(self) -> int:
        return 2 * self.omega + 1

    def window_points(self) -> np.ndarray:
        """Window points in lexicographic order, shape (P^d, d)."""
        axes = np.meshgrid(*[np.arange(-self.omega, self.omega + 1)] * self.dimension, indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)

    def covariance_matrix(self) -> np.ndarray:
        """Dense covariance of the window, entries sigma at the wrapped lag of n - m.

        The lag is wrapped with its sign kept, so the matrix is circulant for
        any even density. For densities whose autocovariance depends only on
        the componentwise magnitude of the lag (every built-in family) this
        equals sigma at :func:`wrap_index` (n - m).
        """
        pts = self.window_points()
        diff = _signed_wrap(pts[:, None, :] - pts[None, :, :], self.omega)
        idx = tuple(np.moveaxis(diff + self.omega, -1, 0))
        return self.autocov.values[idx]

    def fourier_matrix(self) -> np.ndarray:
        """Unitary U with U[n, m] = P^{-d/2} exp(2 pi i <n, m> / P) on window points."""
        pts = self.window_points()
        P = self.period
        return np.exp(2j * np.pi * (pts @ pts.T) / P) / P ** (self.dimension / 2)

    def sample(self, rng) -> np.ndarray:
        """One real sample on the window, shape (P,)*d, centred so index w is lag 0."""
        rng = np.random.default_rng(rng)
        return self._draw(rng, 1)[0]

    def sample_many(self, rng, count: int) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return self._draw(rng, count)

    def _draw(self, rng, count):
        d = self.dimension
        P = self.period
        shape = (count,) + (P,) * d
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
        # pair k with -k so that the coefficient vector is Hermitian
        axes = tuple(range(1, d + 1))
        g_neg = np.roll(np.flip(g, axis=axes), 1, axis=axes)
        eps = (g + g_neg.conj()) / math.sqrt(2)
        y = sp_fft.fftn(self._sqrt_eig_fft * eps, axes=axes) / P ** (d / 2)
        scale = max(1.0, float(np.abs(y.real).max()))
        resid = float(np.abs(y.imag).max())
        if resid > 1e-8 * scale:
            raise ArithmeticError(f"circulant sample has imaginary residue {resid:.2e}")
        return sp_fft.fftshift(y.real, axes=axes)


def build_circulant_model(S: SpectralDensity, omega: int, d: int | None = None,
                          autocov: Autocovariance | None = None) -> CirculantModel:
    """Circulant model of order ``omega`` for density ``S``.

    Eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative
    raises :class:`NotSamplableError` naming the frequency index k.
    """
    d = S.dimension if d is None else int(d)
    if d != S.dimension:
        raise ValueError(f"density has dimension {S.dimension}, model asked for {d}")
    omega = int(omega)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    ac = autocovariance(S, omega) if autocov is None else autocov.truncated(omega)
    P = 2 * omega + 1
    eig = sp_fft.fftn(sp_fft.ifftshift(ac.values)).real
    bad = eig < -_NEG_EIG_TOL
    if np.any(bad):
        i = np.unravel_index(np.argmin(eig), eig.shape)
        k = tuple(int(v) if v <= omega else int(v) - P for v in i)
        raise NotSamplableError(
            f"circulant eigenvalue {eig[i]:.3e} < 0 at k={k}; density is not samplable at omega={omega}"
        )
    clamped = int(np.count_nonzero(eig < 0))
    eig = np.maximum(eig, 0.0)
    centred = sp_fft.fftshift(eig)
    centred.setflags(write=False)
    return CirculantModel(S, omega, ac, centred, clamped, np.sqrt(eig))


def sample_process(model: CirculantModel, seed) -> np.ndarray:
    """Real sample on {-w..w}^d; deterministic given ``seed``."""
    return model.sample(seed)


def sample_on_domain(model: CirculantModel, domain, rng, count: int | None = None) -> np.ndarray:
    """Samples of the stationary process on ``domain``.

    The domain is translated so that its bounding box starts at the origin
    and must then fit in {0..w}^d. Returns shape (N,) or (count, N) in the
    domain's point order.
    """
    rel = domain.points - domain.origin
    if rel.max(initial=0) > model.omega:
        raise ValueError(
            f"domain bounding box {domain.box_shape} does not fit in the model window (omega={model.omega})"
        )
    idx = tuple((rel + model.omega).T)
    n = 1 if count is None else int(count)
    win = model.sample_many(rng, n)
    vals = win[(slice(None),) + idx]
    return vals[0] if count is None else vals


def replicate_generators(seed, count: int) -> list:
    """One independent generator per replicate, split from ``seed``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


_SPEC_RE = re.compile(r"^\s*([a-zA-Z_]+)\s*\((.*)\)\s*$")


def density_from_spec(text: str, d: int | None = None) -> SpectralDensity:
    """Build a density from ``constant(c)``, ``cosine(c,a)`` or ``fano(d,M,tau,n)``.

    ``d`` sets the dimension for the constant and cosine families (default 1).
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse density spec {text!r}")
    name = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",") if a.strip()]
    dim = 1 if d is None else int(d)
    try:
        if name == "constant" and len(args) == 1:
            return ConstantDensity(float(args[0]), dim)
        if name == "cosine" and len(args) == 2:
            return CosineDensity(float(args[0]), float(args[1]), dim)
        if name == "fano" and len(args) == 4:
            from .fano import fano_density

            return fano_density(int(args[0]), int(args[1]), float(args[2]), int(args[3]))
    except ValueError as exc:
        raise ValueError(f"bad parameters in density spec {text!r}: {exc}") from exc
    raise ValueError(f"unknown density spec {text!r}")


def write_sample_csv(points, values, path) -> None:
    points = np.asarray(points)
    d = points.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join([f"x{j + 1}" for j in range(d)] + ["value"]) + "\n")
        for p, v in zip(points, values):
            fh.write(",".join([str(int(c)) for c in p] + [repr(float(v))]) + "\n")


def read_sample_csv(path):
    """Returns ``(points, values)`` from a ``coords...,value`` table."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[-1] != "value" or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected columns x1..xd,value")
    return data[:, :-1].astype(np.int64), data[:, -1]
