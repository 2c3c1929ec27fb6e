import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from phaseless_fm.forward import (
    FarFieldMatrix,
    Obstacle,
    PhaselessDataset,
    ScatteringScene,
    analytic_circle_farfield,
    simulate_farfield,
    simulate_phaseless,
)
from phaseless_fm.geometry import BoundaryCurve, SamplingGrid, grid_nodes, uniform_directions
from phaseless_fm.inversion import (
    IndicatorField,
    ParameterWarning,
    TestVector,
    evaluate_indicator,
    indicator_value,
    level_set,
    normalize,
    reconstruct,
    reconstruct_from_farfield,
    test_vector as make_test_vector,
)
from phaseless_fm.operators import SpectralOperator, assemble_b_matrix, assemble_f_tilde, sharp
from phaseless_fm.validation import truncation_residual

SMALL_GRID = SamplingGrid(-3, 3, -3, 3, 25, 25)


def test_test_vector_at_origin_m0():
    dirs = uniform_directions(16)
    tv = make_test_vector((0.0, 0.0), 5.0, dirs, assemble_b_matrix(16, 0))
    np.testing.assert_allclose(tv.values, np.ones(16), atol=1e-14)


def test_test_vector_matches_definition():
    dirs = uniform_directions(32)
    B = assemble_b_matrix(32, 10)
    z = np.array([0.7, -1.1])
    raw = np.exp(-1j * 4.0 * dirs.vectors @ z)
    assert np.allclose(np.abs(raw), 1.0, atol=1e-15)
    np.testing.assert_allclose(make_test_vector(z, 4.0, dirs, B).values, B.values @ raw, atol=1e-14)


def test_truncation_residual_against_direct_projection():
    # independent route: FFT of phi_z sampled finely
    k, z = 10.0, np.array([6.0, 0.0])
    n = 1024
    theta = 2 * np.pi * np.arange(n) / n
    phi = np.exp(-1j * k * (np.cos(theta) * z[0] + np.sin(theta) * z[1]))
    c = np.fft.fft(phi) / n * np.sqrt(2 * np.pi)
    m = np.fft.fftfreq(n, 1.0 / n)
    for M in (40, 60, 80):
        direct = np.sqrt(np.sum(np.abs(c[np.abs(m) > M]) ** 2))
        assert truncation_residual(k, z, M) == pytest.approx(direct, rel=1e-8, abs=1e-14)
    assert truncation_residual(k, z, 100) <= 1e-4


def test_indicator_value_examples():
    zero = SpectralOperator.from_matrix(np.zeros((2, 2)))
    tv = make_test_vector((0.0, 0.0), 1.0, uniform_directions(2), np.eye(2))
    assert indicator_value(zero, tv) == 0.0
    S = SpectralOperator(np.eye(2), np.array([1.0, 1.0]), np.eye(2))
    assert indicator_value(S, TestVector(np.zeros(2), np.array([1.0, 0.0]))) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_indicator_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    P = X @ X.conj().T
    tv = make_test_vector(rng.uniform(-2, 2, 2), 3.0, uniform_directions(8), assemble_b_matrix(8, 3))
    w1 = indicator_value(SpectralOperator.from_matrix(P), tv, 0.0)
    w2 = indicator_value(SpectralOperator.from_matrix(c * P), tv, 0.0)
    assert w2 == pytest.approx(c * w1, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
def test_indicator_invariant_under_eigenspace_rotation(seed, angle):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    lam = np.array([5.0, 3.0, 3.0, 2.0, 1.0, 0.5])
    A = (Q * lam) @ Q.conj().T
    U = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]) * np.exp(1j * (seed % 7))
    Q2 = Q.copy()
    Q2[:, 1:3] = Q[:, 1:3] @ U
    tv = make_test_vector(rng.uniform(-1, 1, 2), 2.0, uniform_directions(6), assemble_b_matrix(6, 2))
    w1 = indicator_value(SpectralOperator(A, lam, Q), tv, 0.0)
    w2 = indicator_value(SpectralOperator(A, lam, Q2), tv, 0.0)
    assert w2 == pytest.approx(w1, rel=1e-10)


def test_vectorized_sweep_matches_single_points():
    scene = ScatteringScene(4.0, [Obstacle(BoundaryCurve("kite"))])
    F = simulate_farfield(scene, 32)
    B = assemble_b_matrix(32, 12)
    S = sharp(assemble_f_tilde(F, B))
    pts = np.random.default_rng(2).uniform(-3, 3, (20, 2))
    dirs = uniform_directions(32)
    single = [indicator_value(S, make_test_vector(p, 4.0, dirs, B), 1e-12) for p in pts]
    np.testing.assert_allclose(evaluate_indicator(S, pts, 4.0, B, 1e-12), single, rtol=1e-10)


def test_grid_order_independence():
    scene = ScatteringScene(4.0, [Obstacle(BoundaryCurve("peanut"))])
    F = simulate_farfield(scene, 32)
    B = assemble_b_matrix(32, 12)
    S = sharp(assemble_f_tilde(F, B))
    pts = grid_nodes(SMALL_GRID)
    perm = np.random.default_rng(4).permutation(len(pts))
    a = evaluate_indicator(S, pts, 4.0, B)
    b = np.empty_like(a)
    b[perm] = evaluate_indicator(S, pts[perm], 4.0, B)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_circle_indicator_closed_form():
    # for a sound-soft disc every operator is diagonal in the Fourier basis:
    # W(z)^-1 = sum_m J_m(k|z|)^2 / (4 (|Re b_m| + |Im b_m|)),  b_m = -J_m(ka)/H_m(ka)
    k, L, M, cutoff = 5.0, 128, 40, 1e-9
    dirs = uniform_directions(L).vectors
    F = np.array([analytic_circle_farfield(k, 1.0, "dirichlet", dirs, d) for d in dirs]).T
    grid = SamplingGrid(-2.5, 2.5, -2.5, 2.5, 11, 11)
    field_ = reconstruct_from_farfield(FarFieldMatrix(F, k), grid, M, cutoff)
    m = np.arange(-M, M + 1)
    b = -special.jv(m, k) / special.hankel1(m, k)
    s = np.abs(b.real) + np.abs(b.imag)
    lam = (1.0 + m**2) ** -0.5 * s
    kept = lam > cutoff * lam.max()
    r = np.hypot(*grid_nodes(grid).T)
    series = (special.jv(m[kept][None, :], k * r[:, None]) ** 2 / (4 * s[kept])).sum(1)
    np.testing.assert_allclose(field_.values.ravel(), 1 / series, rtol=1e-6)


def test_empty_scene_gives_zero_fields():
    data = PhaselessDataset(np.ones((16, 16)), 3.0, 5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        f = reconstruct(data, SMALL_GRID, M=6)
    assert np.all(f.values == 0)
    g = reconstruct_from_farfield(FarFieldMatrix(np.zeros((16, 16)), 3.0), SMALL_GRID, M=6)
    assert np.all(g.values == 0)


def test_warns_when_m_below_r():
    data = PhaselessDataset(np.ones((8, 8)), 1.0, 20.0)
    with pytest.warns(ParameterWarning):
        reconstruct(data, SMALL_GRID, M=3)


def test_farfield_pipeline_localizes_circle():
    scene = ScatteringScene(5.0, [Obstacle(BoundaryCurve("circle"))])
    F = simulate_farfield(scene, 128)
    B = assemble_b_matrix(128, 100)
    S = sharp(assemble_f_tilde(F, B))
    centre, far = evaluate_indicator(S, np.array([[0.0, 0.0], [3.0, 0.0]]), 5.0, B)
    assert centre > far


def test_phaseless_pipeline_localizes_kite():
    scene = ScatteringScene(5.0, [Obstacle(BoundaryCurve("kite", (1.0, 1.0)))])
    data = simulate_phaseless(scene, 12.0, 64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        f = reconstruct(data, SamplingGrid(-4, 4, -4, 4, 41, 41), M=30)
    mask = level_set(f, 0.5)
    centroid = grid_nodes(f.grid)[mask.ravel()].mean(0)
    assert np.hypot(*(centroid - np.array([0.8, 1.0]))) <= 0.6


def test_reconstruct_is_deterministic():
    scene = ScatteringScene(3.0, [Obstacle(BoundaryCurve("peanut"))])
    data = simulate_phaseless(scene, 8.0, 32, delta=0.05, seed=1)
    a = reconstruct(data, SMALL_GRID, M=10)
    b = reconstruct(data, SMALL_GRID, M=10)
    np.testing.assert_array_equal(a.values, b.values)


def test_normalize():
    grid = SamplingGrid(0, 1, 0, 1, 3, 2)
    zero = IndicatorField(grid, np.zeros((2, 3)), 0.0, 1e-12)
    assert normalize(zero) is zero
    f = IndicatorField(grid, np.array([[1.0, 4.0, 2.0], [0.5, 0.0, 3.0]]), 4.0, 1e-12)
    n = normalize(f)
    assert n.values.max() == 1.0 and n.raw_max == 4.0 and n.normalized
    assert np.argmax(n.values) == np.argmax(f.values)


def test_indicator_field_validation():
    grid = SamplingGrid(0, 1, 0, 1, 3, 2)
    with pytest.raises(ValueError):
        IndicatorField(grid, np.zeros((3, 2)), 0.0, 0.0)
    with pytest.raises(ValueError):
        IndicatorField(grid, -np.ones((2, 3)), 0.0, 0.0)
