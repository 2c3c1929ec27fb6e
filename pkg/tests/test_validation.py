import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseless_fm.forward import Obstacle, ScatteringScene, simulate_farfield
from phaseless_fm.geometry import BoundaryCurve
from phaseless_fm.inversion import ParameterWarning
from phaseless_fm.validation import (
    DecayReport,
    check_farfield_asymptotics,
    check_operator_asymptotics,
    check_reciprocity,
    check_sharp_asymptotics,
    check_truncation_decay,
    truncation_residual,
)


def test_reciprocity_index_arithmetic():
    F = np.array([[2.0, 5.0], [7.0, 2.0]])
    # pairs (i, j) <-> (neg j, neg i): diagonal pairs match, off-diagonal map to themselves
    assert check_reciprocity(F) == 0.0
    with pytest.raises(ValueError):
        check_reciprocity(np.zeros((3, 3)))


def test_reciprocity_kite():
    scene = ScatteringScene(10.0, [Obstacle(BoundaryCurve("kite"))])
    assert check_reciprocity(simulate_farfield(scene, 128)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-8, 1.0))
def test_reciprocity_perturbation_bound(seed, eps):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    neg = (np.arange(8) + 4) % 8
    F = (A + A[neg][:, neg].T) / 2
    noise = rng.uniform(-1, 1, (8, 8)) * eps / np.sqrt(2) * np.exp(2j * np.pi * rng.uniform(size=(8, 8)))
    assert check_reciprocity(F + noise) <= check_reciprocity(F) + 2 * eps + 1e-12


def test_decay_report_fit_and_flags():
    rep = DecayReport("x", [1, 2, 4, 8], [1, 0.5, 0.25, 0.125], slope_max=-0.9)
    assert rep.slope == pytest.approx(-1.0, abs=1e-12)
    assert rep.decreasing and rep.passed
    np.testing.assert_allclose(rep.ratios, 2.0)
    assert "passed: true" in rep.to_text()
    assert rep.to_csv().splitlines()[0] == "parameter,error"
    assert not DecayReport("x", [1, 2, 4], [1, 0.6, 0.7], slope_max=0).passed


def test_decay_report_degenerate_and_validation():
    rep = DecayReport("empty", [1, 2, 3], [0, 0, 0], slope_max=-1)
    assert rep.degenerate and rep.passed and np.isnan(rep.slope)
    with pytest.raises(ValueError):
        DecayReport("x", [2, 1], [1, 1])
    with pytest.raises(ValueError):
        DecayReport("x", [1, 2], [-1, 1])


def test_farfield_asymptotics_circle():
    scene = ScatteringScene(5.0, [Obstacle(BoundaryCurve("circle"))])
    rep = check_farfield_asymptotics(scene, (1.0, 0.0), [50, 100, 200, 400])
    assert -1.7 <= rep.slope <= -1.3 and rep.passed
    assert np.all((rep.ratios >= 2.4) & (rep.ratios <= 3.4))


def test_farfield_asymptotics_empty_and_guard():
    rep = check_farfield_asymptotics(ScatteringScene(5.0), (1.0, 0.0), [50, 100, 200])
    assert rep.degenerate and rep.passed
    scene = ScatteringScene(5.0, [Obstacle(BoundaryCurve("circle"))])
    with pytest.raises(ValueError):
        check_farfield_asymptotics(scene, (1.0, 0.0), [5, 100])


@pytest.mark.filterwarnings("ignore::phaseless_fm.inversion.ParameterWarning")
def test_operator_asymptotics_empty():
    for check in (check_operator_asymptotics, check_sharp_asymptotics):
        rep = check(ScatteringScene(5.0), 16, 6, [2, 4, 8])
        assert np.all(rep.errors == 0) and rep.passed


def test_operator_asymptotics_small_case():
    # 2kR stays below L/2 for every radius
    scene = ScatteringScene(2.0, [Obstacle(BoundaryCurve("kite"))])
    rep = check_operator_asymptotics(scene, 256, 40, [10, 20, 40], k=2.0)
    assert rep.decreasing and rep.slope <= -0.8
    rep_s = check_sharp_asymptotics(scene, 256, 40, [10, 20, 40])
    assert rep_s.decreasing
    assert rep_s.slope >= rep.slope - 0.6


def test_operator_asymptotics_warns_and_checks_k():
    scene = ScatteringScene(1.0, [Obstacle(BoundaryCurve("circle"))])
    with pytest.warns(ParameterWarning):
        check_operator_asymptotics(scene, 16, 4, [8, 16])
    with pytest.raises(ValueError):
        check_operator_asymptotics(scene, 16, 20, [8, 16], k=2.0)


def test_truncation_decay():
    rep = check_truncation_decay(10.0, (6.0, 0.0), 256, [60, 80, 100])
    assert rep.decreasing and rep.passed
    assert rep.errors[-1] <= 1e-4
    zero = check_truncation_decay(10.0, (0.0, 0.0), 256, [0, 10, 20])
    assert np.all(zero.errors == 0) and zero.passed
    with pytest.raises(ValueError):
        check_truncation_decay(10.0, (6.0, 0.0), 100, [60])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 30), st.floats(0.01, 6), st.integers(0, 80))
def test_truncation_residual_monotone(k, r, M):
    assert truncation_residual(k, (r, 0.0), M + 1) <= truncation_residual(k, (r, 0.0), M) + 1e-15
    # Parseval: |phi_z|^2 = 2 pi
    assert truncation_residual(k, (r, 0.0), M) <= np.sqrt(2 * np.pi) * (1 + 1e-12)
