"""Finite acquisition domains on the integer lattice Z^d.

Points are stored as an ``(N, d)`` integer array, deduplicated and sorted
lexicographically. Every taper vector and matrix in the package indexes
points in that order.
"""
from __future__ import annotations

import math
import warnings
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft
from scipy.spatial import ConvexHull, QhullError

__all__ = [
    "AcquisitionDomain",
    "make_interval",
    "make_rectangle",
    "make_disk",
    "random_blob",
    "digital_perimeter",
    "diameter",
    "difference_set",
    "read_domain",
    "write_domain",
]


class AcquisitionDomain:
    """A finite subset of Z^d.

    Parameters
    ----------
    points : array_like of int, shape (N, d) or (N,)
        Lattice points. A 1-D input is read as N points of a d=1 domain.
        Duplicates are removed and the result is sorted lexicographically.

    Notes
    -----
    Instances are immutable. Perimeter, diameter and the difference set are
    computed on first access and cached.
    """

    def __init__(self, points):
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"points must have shape (N, d), got {pts.shape}")
        if pts.shape[0] == 0:
            raise ValueError("a domain needs at least one point")
        if not np.issubdtype(pts.dtype, np.integer):
            as_int = np.rint(pts).astype(np.int64)
            if not np.array_equal(as_int, pts):
                raise ValueError("lattice points must have integer coordinates")
            pts = as_int
        pts = np.unique(pts.astype(np.int64), axis=0)
        pts.setflags(write=False)
        self._points = pts

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dimension(self) -> int:
        return self._points.shape[1]

    @property
    def cardinality(self) -> int:
        return self._points.shape[0]

    def __len__(self):
        return self.cardinality

    def __eq__(self, other):
        if not isinstance(other, AcquisitionDomain):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.array_equal(self._points, other._points)
        )

    def __hash__(self):
        return hash((self._points.shape, self._points.tobytes()))

    def __repr__(self):
        return (
            f"AcquisitionDomain(d={self.dimension}, N={self.cardinality}, "
            f"box={self.box_shape})"
        )

    @property
    def origin(self) -> np.ndarray:
        """Lower corner of the bounding box."""
        return self._points.min(axis=0)

    @property
    def box_shape(self) -> tuple:
        return tuple(int(s) for s in self._points.max(axis=0) - self.origin + 1)

    def box_indices(self) -> tuple:
        """Index tuple locating each point inside the bounding box array."""
        rel = self._points - self.origin
        return tuple(rel[:, j] for j in range(self.dimension))

    def indicator(self, pad: int = 0) -> np.ndarray:
        """Boolean indicator of the domain on its bounding box, padded by ``pad``."""
        shape = tuple(s + 2 * pad for s in self.box_shape)
        chi = np.zeros(shape, dtype=bool)
        rel = self._points - self.origin + pad
        chi[tuple(rel.T)] = True
        return chi

    def translate(self, shift) -> "AcquisitionDomain":
        shift = np.asarray(shift, dtype=np.int64).reshape(1, -1)
        return AcquisitionDomain(self._points + shift)

    @cached_property
    def perimeter(self) -> int:
        chi = self.indicator(pad=1).astype(np.int8)
        return int(sum(np.abs(np.diff(chi, axis=j)).sum() for j in range(self.dimension)))

    @cached_property
    def diameter(self) -> float:
        return math.sqrt(_max_squared_distance(self._points))

    @cached_property
    def difference_set(self) -> np.ndarray:
        lags, _ = _lag_counts(self)
        lags.setflags(write=False)
        return lags

    @property
    def degree(self) -> int:
        """Maximum component degree of trigonometric polynomials built on the domain."""
        return int(math.ceil(self.diameter))


def _max_squared_distance(pts: np.ndarray) -> int:
    if pts.shape[0] == 1:
        return 0
    cand = pts
    if pts.shape[1] >= 2 and pts.shape[0] > 64:
        try:
            cand = pts[ConvexHull(pts.astype(float)).vertices]
        except QhullError:
            # flat point sets (e.g. a single row) have no full-dimensional hull
            cand = pts
    best = 0
    step = max(1, 4_000_000 // cand.shape[0])
    for start in range(0, cand.shape[0], step):
        diff = cand[start:start + step, None, :] - cand[None, :, :]
        best = max(best, int((diff * diff).sum(axis=-1).max()))
    return best


def _lag_counts(domain: AcquisitionDomain):
    """Lags of Omega - Omega together with the number of pairs realising each."""
    chi = domain.indicator().astype(float)
    shape = tuple(2 * s - 1 for s in chi.shape)
    spec = sp_fft.rfftn(chi, s=shape)
    corr = sp_fft.irfftn(spec * spec.conj(), s=shape)
    counts = np.rint(corr).astype(np.int64)
    if np.max(np.abs(corr - counts)) > 0.25:
        raise ArithmeticError("lag counting lost integer precision")
    idx = np.nonzero(counts > 0)
    lags = np.stack(idx, axis=1)
    box = np.asarray(chi.shape)
    # unwrap FFT index to signed lag
    lags = np.where(lags >= box, lags - (2 * box - 1), lags)
    order = np.lexsort(lags.T[::-1])
    return lags[order].astype(np.int64), counts[idx][order]


def make_interval(N: int) -> AcquisitionDomain:
    """The d=1 domain {1, ..., N}."""
    if int(N) != N or N < 1:
        raise ValueError(f"interval length must be a positive integer, got {N}")
    return AcquisitionDomain(np.arange(1, int(N) + 1))


def make_rectangle(sides) -> AcquisitionDomain:
    """Product set {1..a_1} x ... x {1..a_d}."""
    sides = [int(s) for s in sides]
    if not sides:
        raise ValueError("rectangle needs at least one side")
    if any(s < 1 for s in sides):
        raise ValueError(f"rectangle sides must be >= 1, got {sides}")
    axes = np.meshgrid(*[np.arange(1, s + 1) for s in sides], indexing="ij")
    return AcquisitionDomain(np.stack([a.ravel() for a in axes], axis=1))


def make_disk(radius: float, d: int = 2) -> AcquisitionDomain:
    """All lattice points of Euclidean norm at most ``radius``."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    r = int(math.floor(radius))
    axes = np.meshgrid(*[np.arange(-r, r + 1)] * d, indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    keep = (pts * pts).sum(axis=1) <= radius * radius + 1e-12
    return AcquisitionDomain(pts[keep])


def random_blob(n_steps: int, d: int, seed=None) -> AcquisitionDomain:
    """Union of the sites visited by a seeded lattice random walk.

    The same ``(n_steps, d, seed)`` always produces the same domain.
    """
    rng = np.random.default_rng(seed)
    axis = rng.integers(0, d, size=n_steps)
    sign = rng.choice(np.array([-1, 1]), size=n_steps)
    steps = np.zeros((n_steps, d), dtype=np.int64)
    steps[np.arange(n_steps), axis] = sign
    walk = np.vstack([np.zeros((1, d), dtype=np.int64), np.cumsum(steps, axis=0)])
    return AcquisitionDomain(walk)


def digital_perimeter(domain: AcquisitionDomain) -> int:
    """Number of unit-direction indicator transitions of the domain."""
    return domain.perimeter


def diameter(domain: AcquisitionDomain) -> float:
    """Largest Euclidean distance between two points of the domain."""
    return domain.diameter


def difference_set(domain: AcquisitionDomain) -> np.ndarray:
    """Lags {n - m : n, m in domain} as a lexicographically sorted ``(L, d)`` array."""
    return domain.difference_set


def read_domain(path) -> AcquisitionDomain:
    """Read the plain-text domain format.

    The first line is ``dim d``; every following non-blank line holds d
    whitespace-separated integer coordinates. Duplicate points are dropped
    with a warning; lines of the wrong arity raise ``ValueError``.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty domain file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "dim":
        raise ValueError(f"{path}: first line must be 'dim d', got {lines[0]!r}")
    d = int(head[1])
    if d < 1:
        raise ValueError(f"{path}: dimension must be >= 1")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != d:
            raise ValueError(f"{path}:{lineno}: expected {d} coordinates, got {len(parts)}")
        rows.append([int(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: no points")
    pts = np.asarray(rows, dtype=np.int64)
    n_unique = np.unique(pts, axis=0).shape[0]
    if n_unique < pts.shape[0]:
        warnings.warn(f"{path}: dropped {pts.shape[0] - n_unique} duplicate point(s)")
    return AcquisitionDomain(pts)


def write_domain(domain: AcquisitionDomain, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"dim {domain.dimension}\n")
        for p in domain.points:
            fh.write(" ".join(str(int(c)) for c in p) + "\n")
