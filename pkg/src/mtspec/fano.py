"""Finite families of well-separated spectral densities for minimax lower bounds.

Each member perturbs the constant density 1/2 by 2^d disjoint smooth bumps
placed at reflected copies of a lattice site:

    S_n(xi) = 1/2 + (tau / K^2) * sum_{e in {-1,1}^d} A(2 K xi - phi(n, e)),

with the bump A(x) = exp(-1 / (1 - 4 |x|^2)) on |x| < 1/2, K = ceil(M^(1/d)) + 1
and phi the componentwise reflection. The Gaussian experiments generated by
the members through the circulant model have diagonal covariances in the
Fourier basis, so their Kullback divergences reduce to sums over variance
ratios.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .process import (
    Autocovariance,
    ConstantDensity,
    SpectralDensity,
    _as_points,
    autocovariance,
    build_circulant_model,
    partial_fourier_grid,
)

__all__ = [
    "bump",
    "reflect",
    "bump_derivative_maxima",
    "admissible_tau",
    "FanoAdmissibilityError",
    "BumpDensity",
    "FanoClass",
    "build_fano_class",
    "fano_density",
    "kl_gaussian_diag",
    "KLReport",
    "kl_sum",
    "fano_class_size",
    "LowerBoundReport",
    "lower_bound_rate",
    "calibrate_tau",
    "certify_fano_class",
    "write_fano_report",
    "FANO_ALPHA",
]

FANO_ALPHA = 1.0 / 8.0


class FanoAdmissibilityError(ValueError):
    """tau is at or above the ceiling that keeps every member in the C^2 unit ball."""

    def __init__(self, message, epsilon, c2):
        super().__init__(message)
        self.epsilon = epsilon
        self.c2 = c2


def bump(x) -> np.ndarray:
    """A(x) = exp(-1 / (1 - 4 |x|^2)) for |x| < 1/2, else 0.

    ``x`` has shape (..., d); a scalar or 1-D array is read as d = 1 points.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None, None]
        squeeze = True
    else:
        squeeze = False
        if x.ndim == 1:
            x = x[:, None]
    r2 = (x * x).sum(axis=-1)
    h = 1.0 - 4.0 * r2
    inside = h > 0
    out = np.zeros(r2.shape)
    out[inside] = np.exp(-1.0 / h[inside])
    return out[0] if squeeze else out


def _bump_derivatives(x):
    """A, grad A and Hessian of A at points x of shape (..., d)."""
    r2 = (x * x).sum(axis=-1)
    h = 1.0 - 4.0 * r2
    inside = h > 0
    hs = np.where(inside, h, 1.0)
    A = np.where(inside, np.exp(-1.0 / hs), 0.0)
    g = -8.0 * x / hs[..., None] ** 2
    d = x.shape[-1]
    gg = -8.0 * np.eye(d) / hs[..., None, None] ** 2 - 128.0 * x[..., :, None] * x[..., None, :] / hs[..., None, None] ** 3
    grad = A[..., None] * g
    hess = A[..., None, None] * (g[..., :, None] * g[..., None, :] + gg)
    return A, grad, hess


def reflect(x, y) -> np.ndarray:
    """phi(x, y)_j = x_j if y_j >= 0 else -x_j."""
    x = np.asarray(x)
    y = np.asarray(y)
    return np.where(y >= 0, x, -x)


@lru_cache(maxsize=None)
def bump_derivative_maxima(d: int) -> tuple:
    """(max A, max |dA/dx_j|, max |d^2 A/dx_j dx_k|) over R^d."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    n = {1: 20001, 2: 801, 3: 121}.get(d, 41)
    g = np.linspace(-0.5, 0.5, n)
    pts = np.stack(np.meshgrid(*[g] * d, indexing="ij"), axis=-1).reshape(-1, d)

    def first(p):
        return np.abs(_bump_derivatives(np.atleast_2d(p))[1]).max()

    def second(p):
        return np.abs(_bump_derivatives(np.atleast_2d(p))[2]).max()

    maxima = []
    for fun in (first, second):
        _, grad, hess = _bump_derivatives(pts)
        field_ = np.abs(grad if fun is first else hess).reshape(pts.shape[0], -1).max(axis=1)
        start = pts[int(np.argmax(field_))]
        res = optimize.minimize(lambda p: -fun(p), start, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        maxima.append(max(float(field_.max()), float(-res.fun)))
    return math.exp(-1.0), maxima[0], maxima[1]


def _perturbation_scale(d: int, M: int) -> int:
    root = 1
    while root**d < M:
        root += 1
    return root + 1


def admissible_tau(d: int, M: int) -> float:
    """Supremum of tau for which every member satisfies ||S_n||_{C^2} <= 1."""
    K = _perturbation_scale(d, M)
    a0, a1, a2 = bump_derivative_maxima(d)
    return min(0.5 * K * K / a0, K / (2.0 * a1), 1.0 / (4.0 * a2))


def _member_c2(d: int, M: int, tau: float) -> float:
    K = _perturbation_scale(d, M)
    a0, a1, a2 = bump_derivative_maxima(d)
    return max(0.5 + tau * a0 / K**2, 2.0 * tau * a1 / K, 4.0 * tau * a2)


class BumpDensity(SpectralDensity):
    """The member S_n of a Fano class, 1-periodic with 2^d bumps on a constant floor."""

    name = "fano"
    has_derivatives = True

    def __init__(self, d: int, M: int, tau: float, index: int, site):
        self.dimension = int(d)
        self.M = int(M)
        self.tau = float(tau)
        self.index = int(index)
        self.site = np.asarray(site, dtype=np.int64)
        self.K = _perturbation_scale(d, M)
        signs = np.array(list(itertools.product([1, -1], repeat=d)))
        self.integer_centres = reflect(self.site[None, :], signs)
        self.centres = self.integer_centres / (2.0 * self.K)
        self.amplitude = self.tau / self.K**2
        self.floor = 0.5

    def params(self):
        return {"d": self.dimension, "M": self.M, "tau": self.tau, "n": self.index}

    def _local(self, xi):
        pts = _as_points(xi, self.dimension)
        pts = (pts + 0.5) % 1.0 - 0.5
        return 2.0 * self.K * (pts[..., None, :] - self.centres)

    def perturbation(self, xi):
        return self.amplitude * bump(self._local(xi)).sum(axis=-1)

    def value(self, xi):
        return self.floor + self.perturbation(xi)

    def gradient(self, xi):
        _, grad, _ = _bump_derivatives(self._local(xi))
        return self.amplitude * 2.0 * self.K * grad.sum(axis=-2)

    def hessian(self, xi):
        _, _, hess = _bump_derivatives(self._local(xi))
        return self.amplitude * 4.0 * self.K**2 * hess.sum(axis=-3)


@dataclass(frozen=True, eq=False)
class FanoClass:
    """S_0 = 1/2 together with M bump perturbations.

    ``sites`` are the lattice indices n in {1..K-1}^d of the M members, the
    first M in lexicographic order.
    """

    dimension: int
    M: int
    tau: float
    K: int
    sites: np.ndarray
    members: tuple
    epsilon: float
    c2: float
    base: SpectralDensity = field(default=None)

    @property
    def densities(self) -> list:
        return [self.base] + list(self.members)

    @property
    def admissible(self) -> bool:
        return self.tau < self.epsilon


def build_fano_class(d: int, M: int, tau: float, *, enforce_c2: bool = True) -> FanoClass:
    """Build the class {S_0, ..., S_M}.

    Raises :class:`FanoAdmissibilityError` when ``tau`` is not in (0, eps),
    eps being the largest tau with ||S_n||_{C^2} <= 1. Pass
    ``enforce_c2=False`` to use the members as test densities beyond that
    ceiling; :attr:`FanoClass.c2` records the resulting norm.
    """
    d = int(d)
    M = int(M)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if M < 1:
        raise ValueError("class size M must be >= 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    eps = admissible_tau(d, M)
    c2 = _member_c2(d, M, tau)
    if enforce_c2 and tau >= eps:
        raise FanoAdmissibilityError(
            f"tau={tau:g} gives ||S_n||_C2 = {c2:.4f} > 1; admissible tau < {eps:.6g}", eps, c2
        )
    K = _perturbation_scale(d, M)
    sites = np.array(list(itertools.product(range(1, K), repeat=d))[:M], dtype=np.int64)
    members = tuple(BumpDensity(d, M, tau, i + 1, s) for i, s in enumerate(sites))
    return FanoClass(d, M, float(tau), K, sites, members, eps, c2, ConstantDensity(0.5, d))


def fano_density(d: int, M: int, tau: float, n: int) -> BumpDensity:
    """Member ``n`` (1-based) of the class, without the C^2 admissibility check."""
    cls = build_fano_class(d, M, tau, enforce_c2=False)
    if not 1 <= n <= M:
        raise ValueError(f"member index must lie in 1..{M}, got {n}")
    return cls.members[n - 1]


def kl_gaussian_diag(v1, v2) -> float:
    """KL(N(0, diag v1) || N(0, diag v2)) = 1/2 sum [v1/v2 - 1 - log(v1/v2)]."""
    v1 = np.asarray(v1, dtype=float).ravel()
    v2 = np.asarray(v2, dtype=float).ravel()
    if v1.shape != v2.shape:
        raise ValueError(f"variance vectors differ in length: {v1.shape} vs {v2.shape}")
    if np.any(v1 <= 0) or np.any(v2 <= 0):
        raise ValueError("variances must be positive")
    r = v1 / v2
    return float(0.5 * np.sum(r - 1.0 - np.log(r)))


def _l2_sq_deviation(S: BumpDensity, resolution: int) -> float:
    from .process import grid_points

    dev = S.perturbation(grid_points(resolution, S.dimension))
    return float(np.mean(dev * dev))


def _quadrature_resolution(S: BumpDensity) -> int:
    # at least ~64 nodes across each bump diameter 1/(2K)
    base = {1: 4096, 2: 512}.get(S.dimension, 128)
    return max(base, 128 * S.K)


@dataclass
class KLReport:
    omega: int
    per_member: np.ndarray
    total: float
    l2_sq: np.ndarray
    parseval_bound: float
    rate_reference: float
    fano_threshold: float

    @property
    def parseval_ok(self) -> bool:
        return self.total <= self.parseval_bound + 1e-8

    @property
    def fano_ok(self) -> bool:
        return self.total <= self.fano_threshold


def kl_sum(fano: FanoClass, omega: int) -> KLReport:
    """Sum of KL(P_n || P_0) over the members for circulant order ``omega``.

    P_n is the centred Gaussian with variances F_w(S_n)(k / (2w+1)),
    ||k||_inf <= w; P_0 has all variances 1/2.
    """
    d = fano.dimension
    per = []
    l2 = []
    for S in fano.members:
        res = max(_quadrature_resolution(S), 8 * omega)
        model = build_circulant_model(S, omega, autocov=autocovariance(S, omega, resolution=res))
        per.append(kl_gaussian_diag(model.eigenvalues, np.full(model.eigenvalues.shape, 0.5)))
        l2.append(_l2_sq_deviation(S, res))
    per = np.array(per)
    l2 = np.array(l2)
    M = fano.M
    return KLReport(
        omega=int(omega),
        per_member=per,
        total=float(per.sum()),
        l2_sq=l2,
        parseval_bound=float(2.0 * (2 * omega + 1) ** d * l2.sum()),
        rate_reference=float(fano.tau**2 * M * omega**d / M ** (1.0 + 4.0 / d)),
        fano_threshold=float(FANO_ALPHA * M * math.log(M)),
    )


def fano_class_size(omega: int, d: int) -> int:
    """M = ceil((w / (log w)^(1/d))^(d^2 / (4 + d)))."""
    if omega < 2:
        raise ValueError("omega must be >= 2")
    return int(math.ceil((omega / math.log(omega) ** (1.0 / d)) ** (d * d / (4.0 + d))))


@dataclass(frozen=True)
class LowerBoundReport:
    rate: float
    rate_cardinality: float
    omega: int
    M: int


def lower_bound_rate(domain) -> LowerBoundReport:
    """Minimax lower-bound shape (log N / diam^d)^(4/(4+d)), constants set to 1.

    ``rate_cardinality`` is the (log N / N)^(4/(4+d)) form that applies when
    diam is of order N^(1/d).
    """
    N = domain.cardinality
    if N < 3:
        raise ValueError("lower bound needs at least 3 points")
    d = domain.dimension
    diam = domain.diameter
    expo = 4.0 / (4.0 + d)
    omega = int(math.ceil(diam))
    return LowerBoundReport(
        rate=(math.log(N) / diam**d) ** expo,
        rate_cardinality=(math.log(N) / N) ** expo,
        omega=omega,
        M=fano_class_size(omega, d),
    )


def calibrate_tau(d: int, M: int, omega: int, alpha: float = FANO_ALPHA, tau_max: float | None = None,
                  rtol: float = 1e-3) -> float:
    """Largest tau <= tau_max whose KL sum is at most alpha * M * log M.

    ``tau_max`` defaults to just below the admissible ceiling. Returns 0.0
    when M = 1 (the threshold is zero).
    """
    if M < 2:
        return 0.0
    hi = (1 - 1e-9) * admissible_tau(d, M) if tau_max is None else float(tau_max)
    target = alpha * M * math.log(M)

    def total(t):
        return kl_sum(build_fano_class(d, M, t, enforce_c2=False), omega).total

    if total(hi) <= target:
        return hi
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if total(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def certify_fano_class(fano: FanoClass, p_cap: int = 64, grid: int | None = None,
                       symmetry_lag: int = 32) -> dict:
    """Numerically check the class properties.

    Returns a dict of named checks; every value is a dict with ``value`` and
    ``ok``. Sup distances and L2 norms are reported as ratios to
    tau / M^(2/d) and tau^2 / M^(1+4/d); whether those ratios are within a
    constant band is judged across classes by the caller.
    """
    from .process import grid_points

    d = fano.dimension
    M = fano.M
    K = fano.K
    if grid is None:
        grid = 4096 if d == 1 else 512
    # peak grid must contain the bump centres, which sit on multiples of 1/(2K)
    peak_res = 2 * K * (64 if d == 1 else 16)
    pts = grid_points(peak_res, d)
    checks = {}

    s0 = fano.base.on_grid(64 if d == 1 else 16)
    checks["floor_is_half"] = {"value": float(np.abs(s0 - 0.5).max()), "ok": bool(np.all(s0 == 0.5))}

    perts = [S.perturbation(pts) for S in fano.members]
    sup0 = np.array([np.abs(p).max() for p in perts])
    pair = [np.abs(perts[i] - perts[j]).max() for i in range(M) for j in range(i + 1, M)]
    sup_ref = fano.tau / M ** (2.0 / d)
    peak = fano.tau * math.exp(-1.0) / K**2
    checks["sup_distance"] = {
        "value": float(sup0.max() / sup_ref),
        "min_pair": float(min(pair) / sup_ref) if pair else float("nan"),
        "max_pair": float(max(pair) / sup_ref) if pair else float("nan"),
        "ok": bool(np.allclose(sup0, peak, rtol=1e-12) and (not pair or np.allclose(pair, peak, rtol=1e-12))),
    }

    res = max(_quadrature_resolution(fano.members[0]), 2 * p_cap + 1)
    l2 = np.array([_l2_sq_deviation(S, res) for S in fano.members])
    l2_ref = fano.tau**2 / M ** (1.0 + 4.0 / d)
    checks["l2_distance"] = {"value": float(l2.mean() / l2_ref), "ok": bool(np.ptp(l2) <= 1e-12 * l2.max())}

    worst_dev = 0.0
    worst_min = np.inf
    worst_sym = 0.0
    for S in fano.members:
        ac = autocovariance(S, max(p_cap, symmetry_lag), resolution=res)
        for p in range(p_cap + 1):
            F = partial_fourier_grid(ac, p, grid)
            worst_dev = max(worst_dev, float(np.abs(F - 0.5).max()))
            worst_min = min(worst_min, float(F.min()))
        worst_sym = max(worst_sym, _symmetry_residual(ac, symmetry_lag))
    checks["partial_sum_deviation"] = {"value": worst_dev, "ok": worst_dev <= 0.25}
    checks["partial_sum_nonnegative"] = {"value": worst_min, "ok": worst_min >= -1e-10}
    checks["coefficient_symmetry"] = {"value": worst_sym, "ok": worst_sym < 1e-10}
    overlap = _supports_overlap(fano)
    checks["disjoint_supports"] = {"value": overlap, "ok": overlap == 0}
    checks["c2_admissible"] = {"value": fano.c2, "epsilon": fano.epsilon, "ok": fano.c2 <= 1.0}
    return checks


def _symmetry_residual(ac: Autocovariance, lag: int) -> float:
    vals = ac.truncated(lag).values
    d = vals.ndim
    worst = 0.0
    axes = np.meshgrid(*[np.arange(-lag, lag + 1)] * d, indexing="ij")
    m = np.stack([a.ravel() for a in axes], axis=1)
    a = vals[tuple((m + lag).T)]
    b = vals[tuple((np.abs(m) + lag).T)]
    worst = float(np.abs(a - b).max())
    return worst


def _supports_overlap(fano: FanoClass) -> int:
    """Count overlapping pairs among all 2^d * M bump supports, in exact integer arithmetic.

    Supports are open balls of radius 1/(4K) around c/(2K) for integer c; two
    are disjoint iff |c1 - c2|^2 >= 1. Each must also stay inside the open
    cube (-1/2, 1/2)^d so periodic copies do not meet: |c_j| + 1/2 <= K.
    """
    centres = np.concatenate([S.integer_centres for S in fano.members])
    n = centres.shape[0]
    diff = centres[:, None, :] - centres[None, :, :]
    dist2 = (diff * diff).sum(axis=-1)
    overlaps = int(np.count_nonzero(dist2[np.triu_indices(n, 1)] < 1))
    # 2|c_j| + 1 <= 2K  <=>  |c_j| + 1/2 <= K
    outside = int(np.count_nonzero(2 * np.abs(centres).max(axis=1) + 1 > 2 * fano.K))
    return overlaps + outside


def write_fano_report(fano: FanoClass, kl: KLReport, checks: dict, path) -> None:
    """Per-member table followed by aggregate lines as comments."""
    with open(path, "w") as fh:
        fh.write(f"# fano class d={fano.dimension} M={fano.M} tau={fano.tau!r} K={fano.K} "
                 f"epsilon={fano.epsilon!r} c2={fano.c2!r}\n")
        fh.write("member," + ",".join(f"site_{j + 1}" for j in range(fano.dimension))
                 + ",sup_distance,l2_sq_distance,kl\n")
        for S, l2v, klv in zip(fano.members, kl.l2_sq, kl.per_member):
            sup = fano.tau * math.exp(-1.0) / fano.K**2
            fh.write(",".join([str(S.index)] + [str(int(c)) for c in S.site]
                              + [repr(sup), repr(float(l2v)), repr(float(klv))]) + "\n")
        fh.write(f"# omega={kl.omega} kl_total={kl.total!r} parseval_bound={kl.parseval_bound!r} "
                 f"fano_threshold={kl.fano_threshold!r} alpha={FANO_ALPHA!r}\n")
        fh.write(f"# parseval_ok={kl.parseval_ok} fano_ok={kl.fano_ok}\n")
        for name, chk in checks.items():
            fh.write(f"# check {name}: value={chk['value']!r} {'PASS' if chk['ok'] else 'FAIL'}\n")
