"""Slepian tapers on a general lattice domain.

The tapers are the leading eigenvectors of the concentration matrix

    C[n, m] = W^d * prod_k sinc(W * (n_k - m_k)),   n, m in the domain,

with ``sinc(x) = sin(pi x) / (pi x)``. An eigenvalue is the fraction of a
taper's energy that falls inside the frequency band [-W/2, W/2]^d.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .domain import AcquisitionDomain

__all__ = [
    "TaperConfig",
    "TaperSet",
    "EigenSolverError",
    "concentration_matrix",
    "compute_tapers",
    "default_taper_count",
    "write_taper_csv",
    "read_taper_csv",
]

# eigenvalues closer than this are treated as one degenerate cluster
_CLUSTER_TOL = 1e-12


class EigenSolverError(RuntimeError):
    """The dense eigensolver failed to converge."""


@dataclass(frozen=True)
class TaperConfig:
    bandwidth: float
    taper_count: int

    def __post_init__(self):
        if not 0.0 < self.bandwidth <= 1.0:
            raise ValueError(f"bandwidth must lie in (0, 1], got {self.bandwidth}")
        if int(self.taper_count) != self.taper_count or self.taper_count < 1:
            raise ValueError(f"taper_count must be a positive integer, got {self.taper_count}")


@dataclass(frozen=True, eq=False)
class TaperSet:
    """K orthonormal Slepian tapers on a domain.

    Attributes
    ----------
    tapers : ndarray, shape (K, N)
        Row k is taper k, indexed by the domain's canonical point order.
    eigenvalues : ndarray, shape (K,)
        Concentration values, nonincreasing.
    """

    domain: AcquisitionDomain
    config: TaperConfig
    tapers: np.ndarray
    eigenvalues: np.ndarray

    @property
    def K(self) -> int:
        return self.tapers.shape[0]

    @property
    def W(self) -> float:
        return self.config.bandwidth

    def gram(self) -> np.ndarray:
        return self.tapers @ self.tapers.T

    def averaged_kernel(self) -> np.ndarray:
        """(1/K) sum_k v_k v_k^T, the real part of the quadratic-form matrix at 0."""
        return self.tapers.T @ self.tapers / self.K

    def on_box(self) -> np.ndarray:
        """Tapers scattered onto the domain's bounding box, shape (K, *box)."""
        out = np.zeros((self.K,) + self.domain.box_shape)
        out[(slice(None),) + self.domain.box_indices()] = self.tapers
        return out


def concentration_matrix(domain: AcquisitionDomain, W: float) -> np.ndarray:
    """Sinc-kernel concentration matrix of ``domain`` for bandwidth ``W``."""
    if not 0.0 < W <= 1.0:
        raise ValueError(f"bandwidth must lie in (0, 1], got {W}")
    pts = domain.points
    C = np.full((pts.shape[0], pts.shape[0]), float(W) ** domain.dimension)
    for k in range(domain.dimension):
        diff = pts[:, k, None] - pts[None, :, k]
        C *= np.sinc(W * diff)
    return C


def default_taper_count(domain: AcquisitionDomain, W: float) -> int:
    """Smallest integer >= N * W^d."""
    if not 0.0 < W <= 1.0:
        raise ValueError(f"bandwidth must lie in (0, 1], got {W}")
    target = domain.cardinality * float(W) ** domain.dimension
    K = int(math.ceil(target - 1e-9 * max(1.0, target)))
    K = max(K, 1)
    if K > domain.cardinality:
        warnings.warn(f"taper count {K} clamped to N={domain.cardinality}")
        K = domain.cardinality
    return K


def compute_tapers(domain: AcquisitionDomain, config: TaperConfig) -> TaperSet:
    """Leading ``config.taper_count`` eigenpairs of the concentration matrix.

    Eigenvalues come out in descending order. Each taper is signed so that
    its first entry of non-negligible magnitude is positive. Within a cluster
    of eigenvalues closer than 1e-12 the vectors are ordered by descending
    lexicographic comparison of their entries, which makes the output
    deterministic for a given eigensolver result. Only the vectors are
    permuted, so the eigenvalue list stays sorted.
    """
    N = domain.cardinality
    K = config.taper_count
    if K > N:
        raise ValueError(f"taper_count {K} exceeds domain size {N}")
    C = concentration_matrix(domain, config.bandwidth)
    try:
        vals, vecs = linalg.eigh(C, subset_by_index=[N - K, N - 1], driver="evr")
    except linalg.LinAlgError as exc:
        try:
            cond = np.linalg.cond(C)
        except np.linalg.LinAlgError:
            cond = float("nan")
        raise EigenSolverError(
            f"eigensolver did not converge for N={N}, W={config.bandwidth} "
            f"(condition number {cond:.3e})"
        ) from exc
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].T.copy()
    _fix_signs(vecs)
    vals, vecs = _order_clusters(vals, vecs)
    if vals[-1] <= 0.0:
        warnings.warn(
            f"taper {K - 1} has numerically zero concentration ({vals[-1]:.2e}); "
            "requested K is far above N * W^d"
        )
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return TaperSet(domain=domain, config=config, tapers=vecs, eigenvalues=vals)


def _fix_signs(vecs: np.ndarray) -> None:
    for row in vecs:
        scale = np.abs(row).max()
        lead = np.flatnonzero(np.abs(row) > 1e-8 * scale)[0]
        if row[lead] < 0:
            row *= -1.0


def _order_clusters(vals, vecs):
    order = list(range(len(vals)))
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[stop - 1] - vals[stop] < _CLUSTER_TOL:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            block.sort(key=lambda i: tuple(-np.round(vecs[i], 12)))
            order[start:stop] = block
        start = stop
    # values inside a cluster agree to 1e-12; keep the list sorted
    return vals, vecs[order]


def write_taper_csv(taper_set: TaperSet, path) -> None:
    """Taper table with one row per domain point and the eigenvalues as a comment line."""
    dom = taper_set.domain
    coord_cols = [f"x{j + 1}" for j in range(dom.dimension)]
    taper_cols = [f"taper_{k}" for k in range(taper_set.K)]
    with open(path, "w") as fh:
        fh.write("# eigenvalues: " + ",".join(repr(float(v)) for v in taper_set.eigenvalues) + "\n")
        fh.write(",".join(["point_index"] + coord_cols + taper_cols) + "\n")
        for i, p in enumerate(dom.points):
            row = [str(i)] + [str(int(c)) for c in p]
            row += [repr(float(v)) for v in taper_set.tapers[:, i]]
            fh.write(",".join(row) + "\n")


def read_taper_csv(path):
    """Inverse of :func:`write_taper_csv`; returns ``(points, tapers, eigenvalues)``."""
    eig = None
    with open(path) as fh:
        first = fh.readline()
        if first.startswith("# eigenvalues:"):
            eig = np.array([float(v) for v in first.split(":", 1)[1].split(",")])
            header = fh.readline()
        else:
            header = first
        cols = header.strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    d = sum(1 for c in cols if c.startswith("x"))
    points = data[:, 1:1 + d].astype(np.int64)
    tapers = data[:, 1 + d:].T
    return points, tapers, eig
