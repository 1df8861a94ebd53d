"""Slow, obviously-correct reference computations used by the tests."""
import itertools
import math

import numpy as np


def brute_perimeter(points):
    pts = {tuple(p) for p in np.asarray(points).tolist()}
    d = len(next(iter(pts)))
    lo = np.min(list(pts), axis=0) - 1
    hi = np.max(list(pts), axis=0) + 1
    total = 0
    for k in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        inside = k in pts
        for j in range(d):
            nb = list(k)
            nb[j] += 1
            total += inside != (tuple(nb) in pts)
    return total


def brute_diameter(points):
    pts = np.asarray(points, dtype=float)
    best = 0.0
    for i in range(len(pts)):
        best = max(best, float(np.sqrt(((pts[i] - pts) ** 2).sum(axis=1)).max()))
    return best


def brute_difference_set(points):
    pts = [tuple(p) for p in np.asarray(points).tolist()]
    return sorted({tuple(a - b for a, b in zip(p, q)) for p in pts for q in pts})


def naive_estimate(points, values, tapers, xi):
    """Average of tapered periodograms by explicit double loop over (k, n)."""
    points = np.asarray(points, dtype=float)
    out = np.empty(len(xi))
    for i, x in enumerate(np.atleast_2d(xi)):
        acc = 0.0
        for taper in tapers:
            s = 0j
            for n, p in enumerate(points):
                s += values[n] * taper[n] * np.exp(-2j * math.pi * float(np.dot(x, p)))
            acc += abs(s) ** 2
        out[i] = acc / len(tapers)
    return out


def naive_concentration(points, W):
    pts = np.asarray(points, dtype=float)
    N, d = pts.shape
    C = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            v = W**d
            for k in range(d):
                x = W * (pts[i, k] - pts[j, k])
                v *= 1.0 if x == 0 else math.sin(math.pi * x) / (math.pi * x)
            C[i, j] = v
    return C


def trig_poly(lags, coefs, xi):
    xi = np.atleast_2d(xi)
    phase = np.exp(-2j * math.pi * xi @ np.asarray(lags, dtype=float).T)
    return (phase @ np.asarray(coefs)).real
