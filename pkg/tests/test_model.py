import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscring.errors import InternalError
from oscring.model import (
    ModelParams,
    dft_matrix,
    ground_state_matrix,
    normal_mode_frequencies,
    propagator_diagonals,
)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1)
    with pytest.raises(ValueError):
        ModelParams(3, omega=0.0)
    with pytest.raises(ValueError):
        ModelParams(3, coupling=-0.1)
    assert ModelParams(5, 1.0, 0.1).n_bath == 4


def test_frequencies_n4():
    freqs = normal_mode_frequencies(ModelParams(4, 1.0, 1.0)).freqs
    np.testing.assert_allclose(freqs, [1.0, math.sqrt(3), math.sqrt(5), math.sqrt(3)], rtol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 7, 50])
def test_frequencies_decoupled(n):
    assert np.all(normal_mode_frequencies(ModelParams(n, 1.0, 0.0)).freqs == 1.0)


def test_frequencies_n101_max():
    freqs = normal_mode_frequencies(ModelParams(101, 1.0, 0.1)).freqs
    assert freqs.max() == pytest.approx(1.1831750743057419, abs=1e-12)
    assert freqs.argmax() in (50, 51)


@pytest.mark.parametrize("n", [2, 3, 4, 11, 101])
def test_spectrum_symmetry_exact(n):
    freqs = normal_mode_frequencies(ModelParams(n, 1.3, 0.7)).freqs
    assert freqs[0] == 1.3
    for k in range(1, n):
        assert freqs[k] == freqs[n - k]


def test_dft_small():
    S = dft_matrix(2).S
    np.testing.assert_allclose(S, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)
    S4 = dft_matrix(4).S
    np.testing.assert_allclose(S4[1], 0.5 * np.array([1, -1j, -1, 1j]), atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 11, 101])
def test_dft_unitary_symmetric(n):
    S = dft_matrix(n).S
    assert np.max(np.abs(S.conj().T @ S - np.eye(n))) < 1e-12
    assert np.max(np.abs(S @ S.conj().T - np.eye(n))) < 1e-12
    assert np.array_equal(S, S.T)


def test_ground_state_decoupled():
    A = ground_state_matrix(ModelParams(6, 1.7, 0.0))
    np.testing.assert_allclose(A, 1.7 * np.eye(6), atol=1e-14)


def test_ground_state_n2():
    r5 = math.sqrt(5)
    expected = [[(1 + r5) / 2, (1 - r5) / 2], [(1 - r5) / 2, (1 + r5) / 2]]
    np.testing.assert_allclose(ground_state_matrix(ModelParams(2, 1.0, 1.0)), expected, atol=1e-14)


@pytest.mark.parametrize("n,lam", [(3, 0.1), (11, 1.0), (101, 0.1), (8, 2.5)])
def test_ground_state_spectrum_and_posdef(n, lam):
    params = ModelParams(n, 1.0, lam)
    A = ground_state_matrix(params)
    assert A.dtype == float
    assert np.max(np.abs(A - A.T)) < 1e-12
    np.linalg.cholesky(A)
    np.testing.assert_allclose(
        np.sort(np.linalg.eigvalsh(A)), np.sort(normal_mode_frequencies(params).freqs), atol=1e-12
    )


def test_ground_state_broken_symmetry_raises(monkeypatch):
    import oscring.model as model

    real = model.normal_mode_frequencies

    def lopsided(params):
        spec = real(params)
        freqs = spec.freqs.copy()
        freqs[1] += 0.1
        return model.ModeSpectrum(freqs)

    monkeypatch.setattr(model, "normal_mode_frequencies", lopsided)
    with pytest.raises(InternalError):
        model.ground_state_matrix(ModelParams(5, 1.0, 0.3))


def test_propagator_examples():
    params = ModelParams(2, 1.0, 0.0)
    p = propagator_diagonals(params, math.pi / 2)
    np.testing.assert_allclose(p.f, 0.0, atol=1e-15)
    np.testing.assert_allclose(p.g, 1.0)
    assert not p.singular
    p = propagator_diagonals(params, math.pi / 4)
    np.testing.assert_allclose(p.f, 1.0)
    np.testing.assert_allclose(p.g, math.sqrt(2))
    assert propagator_diagonals(params, math.pi).singular
    assert propagator_diagonals(params, 0.0).singular


@settings(max_examples=100, deadline=None)
@given(freq=st.floats(0.5, 3.0), t=st.floats(0.01, 100.0))
def test_propagator_identity(freq, t):
    s = math.sin(freq * t)
    if abs(s) < 1e-3:
        return
    # freq enters as omega with zero coupling
    p = propagator_diagonals(ModelParams(2, freq, 0.0), t)
    rel = abs(p.g[0] ** 2 - p.f[0] ** 2 - freq**2) / max(p.g[0] ** 2, freq**2)
    assert rel < 1e-9
