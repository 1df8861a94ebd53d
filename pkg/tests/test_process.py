import math

import numpy as np
import pytest
from scipy import integrate

from mtspec.domain import make_interval, make_rectangle
from mtspec.fano import fano_density
from mtspec.process import (
    CallableDensity,
    ConstantDensity,
    CosineDensity,
    EvennessError,
    NotSamplableError,
    TrigPolynomialDensity,
    autocovariance,
    build_circulant_model,
    c2_norm,
    density_from_spec,
    partial_fourier_grid,
    partial_fourier_sum,
    read_sample_csv,
    replicate_generators,
    sample_on_domain,
    sample_process,
    wrap_index,
    write_sample_csv,
)


def test_constant_autocovariance():
    ac = autocovariance(ConstantDensity(0.3), 5)
    assert ac[0] == pytest.approx(0.3, abs=1e-15)
    assert max(abs(ac[n]) for n in range(1, 6)) < 1e-15


def test_cosine_autocovariance():
    ac = autocovariance(CosineDensity(0.5, 0.1), 4)
    assert ac[0] == pytest.approx(0.5, abs=1e-14)
    assert ac[1] == pytest.approx(0.05, abs=1e-14)
    assert ac[-1] == pytest.approx(0.05, abs=1e-14)
    assert max(abs(ac[n]) for n in (2, 3, 4)) < 1e-14


def test_fano_autocovariance_against_adaptive_quadrature():
    S = fano_density(1, 4, 0.05, 1)
    ac = autocovariance(S, 32)
    for n in range(-32, 33):
        # S is even, so only the cosine part contributes
        ref = 2 * integrate.quad(lambda x: float(S.value(x)) * math.cos(2 * math.pi * n * x), 0, 0.5,
                                 points=[0.1, 0.15, 0.05], limit=400, epsabs=1e-13)[0]
        assert ac[n] == pytest.approx(ref, abs=1e-8)


def test_odd_density_rejected():
    S = CallableDensity(lambda p: 0.5 + 0.1 * np.sin(2 * np.pi * p[..., 0]), d=1)
    with pytest.raises(EvennessError):
        autocovariance(S, 3)


def test_c2_norm_examples():
    assert c2_norm(ConstantDensity(0.5)) == 0.5
    assert c2_norm(CosineDensity(0.5, 0.01)) == pytest.approx(0.51, abs=1e-12)
    assert c2_norm(CosineDensity(0.5, 0.02)) == pytest.approx(4 * math.pi**2 * 0.02, rel=1e-9)


def test_finite_difference_fallback():
    f = CallableDensity(lambda p: 0.5 + 0.02 * np.cos(2 * np.pi * p[..., 0]), d=1)
    assert c2_norm(f) == pytest.approx(4 * math.pi**2 * 0.02, rel=1e-5)


def test_partial_sums():
    S = ConstantDensity(0.4)
    xi = np.linspace(0, 1, 9)
    for p in (0, 1, 5):
        assert np.allclose(partial_fourier_sum(S, p, xi), 0.4, atol=1e-14)
    C = CosineDensity(0.5, 0.1)
    assert np.allclose(partial_fourier_sum(C, 0, xi), 0.5, atol=1e-14)
    assert np.allclose(partial_fourier_sum(C, 1, xi), C.value(xi), atol=1e-14)


def test_partial_grid_matches_direct():
    S = fano_density(2, 4, 0.005, 2)
    ac = autocovariance(S, 6)
    R = 16
    grid = partial_fourier_grid(ac, 6, R)
    pts = np.stack(np.meshgrid(np.arange(R) / R, np.arange(R) / R, indexing="ij"), axis=-1)
    assert np.allclose(grid, partial_fourier_sum(S, 6, pts, autocov=ac), atol=1e-13)


def test_trig_polynomial_round_trip():
    T = TrigPolynomialDensity([[0, 0], [1, 0], [-1, 0], [1, 2], [-1, -2]], [0.5, 0.05, 0.05, 0.02, 0.02])
    ac = autocovariance(T, 3)
    assert ac[(1, 0)] == pytest.approx(0.05, abs=1e-14)
    assert ac[(-1, -2)] == pytest.approx(0.02, abs=1e-14)
    assert ac[(1, -2)] == pytest.approx(0.0, abs=1e-14)
    again = TrigPolynomialDensity(*_table(ac))
    ac2 = autocovariance(again, 3)
    assert np.allclose(ac2.values, ac.values, atol=1e-8)


def _table(ac):
    m = ac.max_lag
    axes = np.meshgrid(*[np.arange(-m, m + 1)] * ac.dimension, indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1), ac.values.ravel()


def test_wrap_index_branches():
    assert wrap_index([0, 3, -3, 4, -4, 6], 3).tolist() == [0, 3, 3, 3, 3, 1]
    with pytest.raises(ValueError):
        wrap_index([7], 3)


def test_constant_model():
    m = build_circulant_model(ConstantDensity(0.7, 2), 2)
    assert np.allclose(m.eigenvalues, 0.7, atol=1e-14)
    assert np.allclose(m.covariance_matrix(), 0.7 * np.eye(25), atol=1e-14)


def test_cosine_model_eigenvalues():
    # eigenvalues 0.7, 0.5618, 0.3382 belong to amplitude 0.2
    m = build_circulant_model(CosineDensity(0.5, 0.2), 2)
    ev = m.eigenvalues
    assert ev[2] == pytest.approx(0.7, abs=1e-14)
    assert ev[3] == pytest.approx(0.5 + 0.2 * math.cos(2 * math.pi / 5), abs=1e-14)
    assert ev[3] == pytest.approx(0.56180, abs=1e-5)
    assert ev[4] == pytest.approx(0.33820, abs=1e-5)
    assert ev[1] == ev[3] and ev[0] == ev[4]
    low = build_circulant_model(CosineDensity(0.5, 0.1), 2).eigenvalues
    assert low[2] == pytest.approx(0.6, abs=1e-14)


@pytest.mark.parametrize("S,omega", [(CosineDensity(0.5, 0.1), 3), (fano_density(2, 4, 0.005, 3), 2),
                                     (CosineDensity(0.5, 0.05, 2), 2)])
def test_covariance_wrap_rule_and_row_sums(S, omega):
    m = build_circulant_model(S, omega)
    Sigma = m.covariance_matrix()
    pts = m.window_points()
    u = wrap_index(pts[:, None, :] - pts[None, :, :], omega)
    expected = m.autocov.values[tuple(np.moveaxis(u + omega, -1, 0))]
    assert np.allclose(Sigma, expected, atol=1e-15)
    centre = (m.eigenvalues.shape[0] // 2,) * m.dimension
    assert np.allclose(Sigma.sum(axis=1), m.eigenvalues[centre], atol=1e-12)
    U = m.fourier_matrix()
    D = U @ Sigma @ U.conj().T
    assert np.abs(D - np.diag(np.diag(D))).max() < 1e-12
    assert np.allclose(np.sort(np.diag(D).real), np.sort(m.eigenvalues.ravel()), atol=1e-12)


def test_restriction_is_toeplitz():
    S = CosineDensity(0.5, 0.15)
    omega = 4
    m = build_circulant_model(S, omega)
    Sigma = m.covariance_matrix()
    idx = np.arange(omega, 2 * omega + 1)
    sub = Sigma[np.ix_(idx, idx)]
    toe = np.array([[m.autocov[i - j] for j in range(omega + 1)] for i in range(omega + 1)])
    assert np.allclose(sub, toe, atol=1e-15)


def test_not_samplable():
    S = CosineDensity(0.5, 0.6)  # negative near xi = 1/2
    with pytest.raises(NotSamplableError, match="k="):
        build_circulant_model(S, 3)


def test_small_negative_eigenvalues_clamped():
    S = CosineDensity(0.25, 0.125 + 2e-11)
    m = build_circulant_model(S, 1)
    assert m.eigenvalues.min() >= 0


def test_sampler_real_and_deterministic():
    m = build_circulant_model(fano_density(1, 4, 0.005, 2), 6)
    for seed in range(20):
        y = sample_process(m, seed)
        assert y.dtype == np.float64 and y.shape == (13,)
        assert np.array_equal(y, sample_process(m, seed))


def test_white_sampler_variance():
    m = build_circulant_model(ConstantDensity(1.0), 3)
    y = m.sample_many(np.random.default_rng(1), 100_000)[:, 3]
    se = math.sqrt(2.0 / y.size)
    assert abs(y.var() - 1.0) <= 3 * se


def test_lag_one_covariance():
    S = CosineDensity(0.5, 0.2)
    m = build_circulant_model(S, 2)
    y = m.sample_many(np.random.default_rng(3), 100_000)
    prod = y[:, 2] * y[:, 3]
    assert abs(prod.mean() - 0.1) <= 4 * prod.std(ddof=1) / math.sqrt(prod.size)


def test_sample_on_domain():
    m = build_circulant_model(ConstantDensity(0.5, 2), 3)
    dom = make_rectangle((3, 4))
    vals = sample_on_domain(m, dom, np.random.default_rng(0))
    assert vals.shape == (12,)
    many = sample_on_domain(m, dom, np.random.default_rng(0), count=5)
    assert many.shape == (5, 12)
    with pytest.raises(ValueError):
        sample_on_domain(m, make_rectangle((5, 5)), np.random.default_rng(0))


def test_replicate_generators_independent_of_count():
    a = replicate_generators(9, 3)
    b = replicate_generators(9, 5)
    for ga, gb in zip(a, b):
        assert ga.random() == gb.random()


def test_density_registry():
    assert density_from_spec("constant(0.5)").value(0.3) == 0.5
    cos = density_from_spec("cosine(0.5, 0.1)", d=2)
    assert cos.dimension == 2
    fan = density_from_spec("fano(1,4,0.005,2)")
    assert fan.value(0.0) == pytest.approx(0.5)
    for bad in ("foo(1)", "constant()", "cosine(1)", "nonsense"):
        with pytest.raises(ValueError):
            density_from_spec(bad)


def test_sample_csv_round_trip(tmp_path):
    dom = make_interval(6)
    vals = np.random.default_rng(0).standard_normal(6)
    write_sample_csv(dom.points, vals, tmp_path / "s.csv")
    pts, back = read_sample_csv(tmp_path / "s.csv")
    assert np.array_equal(pts, dom.points)
    assert np.array_equal(back, vals)
