import math

import numpy as np
import pytest
from scipy import integrate, linalg

from mtspec.domain import AcquisitionDomain, make_disk, make_interval, make_rectangle, random_blob
from mtspec.slepian import (
    TaperConfig,
    compute_tapers,
    concentration_matrix,
    default_taper_count,
    read_taper_csv,
    write_taper_csv,
)
from oracles import naive_concentration


def test_config_validation():
    with pytest.raises(ValueError):
        TaperConfig(0.0, 1)
    with pytest.raises(ValueError):
        TaperConfig(1.5, 1)
    with pytest.raises(ValueError):
        TaperConfig(0.5, 0)


def test_concentration_diagonal_and_trace():
    dom = random_blob(40, 2, 5)
    W = 0.3
    C = concentration_matrix(dom, W)
    assert np.allclose(np.diag(C), W**2, rtol=0, atol=1e-15)
    assert np.trace(C) == pytest.approx(dom.cardinality * W**2, abs=1e-12)
    assert np.array_equal(C, C.T)


def test_concentration_unit_lag():
    C = concentration_matrix(make_interval(2), 0.5)
    assert C[0, 1] == pytest.approx(1 / math.pi, abs=1e-15)


def test_concentration_matches_naive():
    dom = make_disk(2.2)
    assert np.allclose(concentration_matrix(dom, 0.37), naive_concentration(dom.points, 0.37), atol=1e-15)


def test_concentration_positive_definite():
    eig = np.linalg.eigvalsh(concentration_matrix(make_rectangle((5, 4)), 0.6))
    assert eig.min() > 0


def test_concentration_bad_bandwidth():
    with pytest.raises(ValueError):
        concentration_matrix(make_interval(4), 0.0)


def test_single_point_taper():
    dom = AcquisitionDomain([[3, 4]])
    ts = compute_tapers(dom, TaperConfig(0.4, 1))
    assert ts.tapers.tolist() == [[1.0]]
    assert ts.eigenvalues[0] == pytest.approx(0.16, abs=1e-15)


def test_full_trace_identity():
    dom = make_interval(64)
    # tail eigenvalues sit at rounding level and trigger the warning
    with pytest.warns(UserWarning, match="zero concentration"):
        ts = compute_tapers(dom, TaperConfig(0.1, 64))
    assert ts.eigenvalues.sum() == pytest.approx(6.4, abs=1e-10)


def test_eigenvalues_match_dense_oracle():
    dom = make_interval(8)
    ts = compute_tapers(dom, TaperConfig(0.25, 2))
    ref = np.sort(np.linalg.eigvalsh(naive_concentration(dom.points, 0.25)))[::-1][:2]
    assert np.allclose(ts.eigenvalues, ref, rtol=0, atol=1e-10)


def test_k_above_n_rejected():
    with pytest.raises(ValueError):
        compute_tapers(make_interval(4), TaperConfig(0.5, 5))


def test_default_taper_count_examples():
    assert default_taper_count(make_interval(64), 0.1) == 7
    assert default_taper_count(make_rectangle((10, 10)), 0.1) == 1
    assert default_taper_count(make_disk(2.5), 1.0) == 21


def test_sign_convention():
    ts = compute_tapers(random_blob(60, 2, 9), TaperConfig(0.4, 5))
    for row in ts.tapers:
        lead = row[np.flatnonzero(np.abs(row) > 1e-8 * np.abs(row).max())[0]]
        assert lead > 0


@pytest.mark.parametrize("dom,W,K", [
    (make_interval(50), 0.2, 10),
    (make_rectangle((6, 7)), 0.5, 10),
    (make_disk(3.3), 0.45, 7),
    (random_blob(150, 3, 4), 0.5, 12),
])
def test_orthonormal_and_ordered(dom, W, K):
    ts = compute_tapers(dom, TaperConfig(W, K))
    assert np.abs(ts.gram() - np.eye(K)).max() <= 1e-8
    lam = ts.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert lam.min() > 0 and lam.max() < 1 + 1e-10


def test_completeness_basis():
    dom = make_rectangle((4, 3))
    ts = compute_tapers(dom, TaperConfig(0.5, dom.cardinality))
    assert np.allclose(ts.tapers.T @ ts.tapers, np.eye(dom.cardinality), atol=1e-12)


def test_deterministic():
    dom = random_blob(80, 2, 1)
    a = compute_tapers(dom, TaperConfig(0.3, 6))
    b = compute_tapers(dom, TaperConfig(0.3, 6))
    assert np.array_equal(a.tapers, b.tapers)


def test_clustered_eigenvalues_span_same_subspace():
    # a square has symmetric pairs of tapers; compare projectors, not vectors
    dom = make_rectangle((6, 6))
    ts = compute_tapers(dom, TaperConfig(0.5, 3))
    full = linalg.eigh(concentration_matrix(dom, 0.5))
    V = full[1][:, ::-1][:, :3]
    assert np.allclose(ts.tapers.T @ ts.tapers, V @ V.T, atol=1e-8)


def _band_energy(v, W):
    n = np.arange(v.size)

    def f(xi):
        return abs(np.dot(v, np.exp(-2j * np.pi * xi * n))) ** 2

    return integrate.quad(f, -W / 2, W / 2, limit=200, epsabs=1e-13)[0]


@pytest.mark.parametrize("N,W", [(6, 0.3), (9, 0.2), (12, 0.4)])
def test_first_taper_is_most_concentrated(N, W):
    ts = compute_tapers(make_interval(N), TaperConfig(W, 1))
    best = _band_energy(ts.tapers[0], W)
    assert best == pytest.approx(ts.eigenvalues[0], abs=1e-9)
    rng = np.random.default_rng(N)
    for _ in range(200):
        v = rng.standard_normal(N)
        v /= np.linalg.norm(v)
        assert _band_energy(v, W) <= best + 1e-12


def test_csv_round_trip(tmp_path):
    dom = make_rectangle((3, 5))
    ts = compute_tapers(dom, TaperConfig(0.5, 4))
    path = tmp_path / "t.csv"
    write_taper_csv(ts, path)
    first, header = path.read_text().splitlines()[:2]
    assert first.startswith("# eigenvalues:")
    assert header == "point_index,x1,x2,taper_0,taper_1,taper_2,taper_3"
    pts, tapers, eig = read_taper_csv(path)
    assert np.array_equal(pts, dom.points)
    assert np.array_equal(tapers, ts.tapers)
    assert np.array_equal(eig, ts.eigenvalues)
