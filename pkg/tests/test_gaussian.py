import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscring.errors import DimensionMismatch, SingularEvolution
from oscring.gaussian import (
    Evolver,
    GaussianState,
    evolve,
    evolve_literal,
    from_mode_basis,
    to_mode_basis,
    validate_state,
)
from oscring.model import ModelParams, dft_matrix, ground_state_matrix, normal_mode_frequencies
from oscring.oracle import scalar_evolution


def random_real_state(rng, n, scale=0.4):
    a = rng.normal(size=(n, n)) * scale
    return GaussianState(a @ a.T + np.eye(n))


def random_complex_state(rng, n):
    base = random_real_state(rng, n).omega_matrix.real
    b = rng.normal(size=(n, n)) * 0.3
    return GaussianState(base + 1j * (b + b.T))


def test_mode_basis_identity():
    basis = dft_matrix(5)
    m = to_mode_basis(GaussianState(2.5 * np.eye(5)), basis)
    np.testing.assert_allclose(m, 2.5 * np.eye(5), atol=1e-14)


def test_mode_basis_diagonalises_ground_state():
    params = ModelParams(7, 1.0, 0.4)
    basis = dft_matrix(7)
    m = to_mode_basis(GaussianState(ground_state_matrix(params)), basis)
    np.testing.assert_allclose(m, np.diag(normal_mode_frequencies(params).freqs), atol=1e-10)


@pytest.mark.parametrize("convention", ["unitary", "symmetric"])
def test_mode_basis_round_trip(convention):
    rng = np.random.default_rng(3)
    basis = dft_matrix(5)
    state = random_complex_state(rng, 5)
    back = from_mode_basis(to_mode_basis(state, basis, convention), basis, convention)
    np.testing.assert_allclose(back.omega_matrix, state.omega_matrix, atol=1e-10)


def test_symmetric_convention_gives_symmetric_mode_matrix():
    rng = np.random.default_rng(4)
    m = to_mode_basis(random_real_state(rng, 5), dft_matrix(5), "symmetric")
    assert np.max(np.abs(m - m.T)) < 1e-10


def test_unitary_convention_gives_hermitian_mode_matrix():
    rng = np.random.default_rng(4)
    m = to_mode_basis(random_real_state(rng, 5), dft_matrix(5), "unitary")
    assert np.max(np.abs(m - m.conj().T)) < 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        to_mode_basis(GaussianState(np.eye(3)), dft_matrix(4))
    with pytest.raises(DimensionMismatch):
        evolve(GaussianState(np.eye(3)), ModelParams(4), 1.0)
    with pytest.raises(DimensionMismatch):
        GaussianState(np.ones((2, 3)))


def test_validate_state():
    d = validate_state(GaussianState(np.eye(3)))
    assert d.symmetric and d.posdef and d.ok
    d = validate_state(GaussianState([[1.0, 2.0], [2.0, 1.0]]))
    assert d.symmetric and not d.posdef
    assert d.min_real_eigenvalue == pytest.approx(-1.0)
    d = validate_state(GaussianState([[1.0, 0.2], [0.1, 1.0]]))
    assert not d.symmetric
    assert d.max_asymmetry == pytest.approx(0.1)


def test_single_mode_stationary_and_hand_value():
    # ring of two decoupled unit oscillators behaves like two copies of one mode
    params = ModelParams(2, 1.0, 0.0)
    for t in (0.3, 1.0, 7.7):
        out = evolve(GaussianState(np.eye(2)), params, t)
        np.testing.assert_allclose(out.omega_matrix, np.eye(2), atol=1e-12)
    out = evolve(GaussianState(2.0 * np.eye(2)), params, math.pi / 2)
    np.testing.assert_allclose(out.omega_matrix, 0.5 * np.eye(2), atol=1e-12)


@pytest.mark.parametrize("convention", ["unitary", "symmetric"])
def test_time_zero_identity(convention):
    rng = np.random.default_rng(5)
    state = random_real_state(rng, 6)
    out = evolve(state, ModelParams(6, 1.0, 0.3), 0.0, convention)
    np.testing.assert_allclose(out.omega_matrix, state.omega_matrix, atol=1e-10)


@pytest.mark.parametrize("n", [3, 11])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 100.0])
def test_ground_state_fixed_point(n, t):
    params = ModelParams(n, 1.0, 0.1)
    A = ground_state_matrix(params)
    out = evolve(GaussianState(A), params, t)
    np.testing.assert_allclose(out.omega_matrix, A, atol=1e-8)


def test_matches_literal_form_away_from_singularities():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 50:
        n = int(rng.integers(2, 7))
        params = ModelParams(n, 1.0, float(rng.uniform(0, 1.5)))
        t = float(rng.uniform(0.05, 30))
        freqs = normal_mode_frequencies(params).freqs
        if np.min(np.abs(np.sin(freqs * t))) <= 0.1:
            continue
        state = random_real_state(rng, n)
        for convention in ("unitary", "symmetric"):
            fast = evolve(state, params, t, convention).omega_matrix
            slow = evolve_literal(state, params, t, convention).omega_matrix
            np.testing.assert_allclose(fast, slow, atol=1e-8)
        checked += 1


def test_finite_at_propagator_singularity():
    params = ModelParams(3, 1.0, 0.0)
    out = evolve(GaussianState(np.diag([2.0, 1.0, 0.5])), params, math.pi)
    assert np.all(np.isfinite(out.omega_matrix))
    np.testing.assert_allclose(out.omega_matrix, np.diag([2.0, 1.0, 0.5]), atol=1e-12)


def exact_phase_space_evolution(om0, params, t):
    """Independent reference: push the Lagrangian plane p = i Om x through the
    classical flow of H = (p.p + x.V.x)/2 using a matrix exponential."""
    from scipy.linalg import expm

    n = params.n
    V = (params.omega**2 + 2 * params.coupling) * np.eye(n)
    for a in range(n):
        V[a, (a + 1) % n] -= params.coupling
        V[(a + 1) % n, a] -= params.coupling
    gen = np.block([[np.zeros((n, n)), np.eye(n)], [-V, np.zeros((n, n))]])
    flow = expm(gen * t)
    Q = flow[:n, :n] + flow[:n, n:] @ (1j * om0)
    P = flow[n:, :n] + flow[n:, n:] @ (1j * om0)
    return -1j * P @ np.linalg.inv(Q)


@pytest.mark.parametrize("seed", range(6))
def test_unitary_convention_is_exact_dynamics(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    params = ModelParams(n, 1.0, float(rng.uniform(0, 1.5)))
    state = random_complex_state(rng, n)
    t = float(rng.uniform(0, 20))
    ref = exact_phase_space_evolution(state.omega_matrix, params, t)
    np.testing.assert_allclose(evolve(state, params, t).omega_matrix, ref, atol=1e-9)


def test_invalid_state_is_singular():
    # rank-deficient Re Omega: at t = pi/2 the denominator is Omega itself
    params = ModelParams(2, 1.0, 0.0)
    with pytest.raises(SingularEvolution) as info:
        evolve(GaussianState(np.ones((2, 2))), params, math.pi / 2)
    assert info.value.t == pytest.approx(math.pi / 2)


def test_evolver_rejects_negative_time():
    ev = Evolver(GaussianState(np.eye(2)), ModelParams(2))
    with pytest.raises(ValueError):
        ev(-1.0)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 7),
    lam=st.floats(0.0, 2.0),
    t=st.floats(0.0, 200.0),
)
def test_evolution_keeps_state_valid(seed, n, lam, t):
    rng = np.random.default_rng(seed)
    state = random_real_state(rng, n)
    out = evolve(state, ModelParams(n, 1.0, lam), t)
    om = out.omega_matrix
    assert np.max(np.abs(om - om.T)) < 1e-9
    assert validate_state(GaussianState(0.5 * (om + om.T))).posdef


@settings(max_examples=100, deadline=None)
@given(
    re=st.floats(0.2, 5.0),
    im=st.floats(-3.0, 3.0),
    freq=st.floats(0.3, 3.0),
    t=st.floats(0.0, 50.0),
)
def test_single_mode_matches_scalar_oracle(re, im, freq, t):
    # n = 2 with zero coupling: both modes share ``freq`` and a diagonal state stays diagonal
    w0 = complex(re, im)
    out = evolve(GaussianState(w0 * np.eye(2)), ModelParams(2, freq, 0.0), t).omega_matrix
    expected = scalar_evolution(w0, freq, t)
    assert abs(out[0, 0] - expected) < 1e-10 * max(1.0, abs(expected))
    assert abs(out[0, 1]) < 1e-10 * max(1.0, abs(expected))


@settings(max_examples=100, deadline=None)
@given(
    re=st.floats(0.2, 5.0),
    im=st.floats(-3.0, 3.0),
    freq=st.floats(0.3, 3.0),
    t1=st.floats(0.0, 20.0),
    t2=st.floats(0.0, 20.0),
)
def test_scalar_composition(re, im, freq, t1, t2):
    w0 = complex(re, im)
    two_step = scalar_evolution(scalar_evolution(w0, freq, t1), freq, t2)
    one_step = scalar_evolution(w0, freq, t1 + t2)
    assert abs(two_step - one_step) < 1e-8 * max(1.0, abs(one_step))
