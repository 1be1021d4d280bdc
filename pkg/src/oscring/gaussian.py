"""Gaussian pure states psi(x) ~ exp(-x.Omega.x / 2) and their exact evolution.

Evolution is done in the normal-mode basis, where every mode evolves by a
Moebius map of its frequency.  The map is applied in the form

    Om(t) = W (Om0 Sd - i W C)^-1 (W Sd - i Om0 C)

with ``W = diag(freq)``, ``C = diag(cos freq t)``, ``Sd = diag(sin freq t)``.
It equals ``g (Om0 - i f)^-1 g - i f`` (``f = W cot Wt``, ``g = W / sin Wt``)
whenever every ``sin freq t`` is nonzero, and stays finite when one vanishes.

Two conventions for the basis change are supported:

``"unitary"``
    ``Om = S Omega S^†``.  This is the exact Schroedinger evolution of the ring.
``"symmetric"``
    ``Om = S Omega S``, treating the mode-basis form as a symmetric bilinear
    form.  This is not the exact dynamics for non-circulant Omega, but it is
    the convention that reproduces the reference case-B N=3 width columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import DimensionMismatch, SingularEvolution
from .model import DftBasis, ModelParams, dft_matrix, normal_mode_frequencies

CONVENTIONS = ("unitary", "symmetric")
COND_LIMIT = 1e12


@dataclass(frozen=True)
class GaussianState:
    """Complex symmetric quadratic form Omega of an N-oscillator pure state."""

    omega_matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.omega_matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"Omega must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "omega_matrix", m)

    @property
    def n(self) -> int:
        return self.omega_matrix.shape[0]


@dataclass(frozen=True)
class StateDiagnostics:
    symmetric: bool
    posdef: bool
    max_asymmetry: float
    min_real_eigenvalue: float

    @property
    def ok(self) -> bool:
        return self.symmetric and self.posdef


def validate_state(state: GaussianState, tol: float = 1e-10) -> StateDiagnostics:
    m = state.omega_matrix
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    re = 0.5 * (m.real + m.real.T)
    if np.all(np.isfinite(re)):
        min_eig = float(np.linalg.eigvalsh(re)[0])
    else:
        min_eig = float("nan")
    posdef = bool(min_eig > 0)
    if posdef:
        # eigvalsh can report a tiny positive value for a borderline matrix
        posdef = lapack.dpotrf(re)[1] == 0
    return StateDiagnostics(asym <= tol, posdef, asym, min_eig)


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown basis convention {convention!r}; expected one of {CONVENTIONS}")


def to_mode_basis(
    state: GaussianState, basis: DftBasis, convention: str = "unitary"
) -> np.ndarray:
    _check_convention(convention)
    if state.n != basis.n:
        raise DimensionMismatch(f"state has n={state.n}, basis has n={basis.n}")
    S = basis.S
    right = S.conj().T if convention == "unitary" else S
    return S @ state.omega_matrix @ right


def from_mode_basis(
    mode_matrix: np.ndarray, basis: DftBasis, convention: str = "unitary"
) -> GaussianState:
    _check_convention(convention)
    mode_matrix = np.asarray(mode_matrix)
    if mode_matrix.shape != (basis.n, basis.n):
        raise DimensionMismatch(
            f"mode matrix has shape {mode_matrix.shape}, basis has n={basis.n}"
        )
    S_dag = basis.S_dag
    right = basis.S if convention == "unitary" else S_dag
    return GaussianState(S_dag @ mode_matrix @ right)


def _mode_evolve(mode0: np.ndarray, freqs: np.ndarray, t: float) -> np.ndarray:
    s = np.sin(freqs * t)
    c = np.cos(freqs * t)
    lhs = mode0 * s[None, :]
    lhs[np.diag_indices_from(lhs)] -= 1j * freqs * c
    rhs = -1j * mode0 * c[None, :]
    rhs[np.diag_indices_from(rhs)] += freqs * s

    lu, piv, info = lapack.zgetrf(lhs)
    if info == 0:
        anorm = np.max(np.sum(np.abs(lhs), axis=0))
        rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    else:
        rcond = 0.0
    if not rcond > 1.0 / COND_LIMIT:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularEvolution(
            f"evolution matrix is singular at t={t} (condition estimate {cond:.3e})", t=t
        )
    x, info = lapack.zgetrs(lu, piv, rhs)
    return freqs[:, None] * x


class Evolver:
    """Evolves one initial state to many times, caching the basis change.

    Each call maps the initial state directly to the requested time, so
    results do not depend on evaluation order.
    """

    def __init__(
        self,
        state: GaussianState,
        params: ModelParams,
        convention: str = "unitary",
        basis: DftBasis | None = None,
    ):
        _check_convention(convention)
        if state.n != params.n:
            raise DimensionMismatch(f"state has n={state.n}, params have n={params.n}")
        self.state = state
        self.params = params
        self.convention = convention
        self.basis = basis or dft_matrix(params.n)
        self.freqs = normal_mode_frequencies(params).freqs
        mode0 = to_mode_basis(state, self.basis, convention)
        mode0.setflags(write=False)
        self.mode0 = mode0

    def mode_matrix(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"time must be >= 0, got {t}")
        return _mode_evolve(self.mode0, self.freqs, t)

    def omega_at(self, t: float) -> np.ndarray:
        S = self.basis.S
        S_dag = self.basis.S_dag
        right = S if self.convention == "unitary" else S_dag
        return S_dag @ self.mode_matrix(t) @ right

    def __call__(self, t: float) -> GaussianState:
        return GaussianState(self.omega_at(t))


def evolve(
    state: GaussianState,
    params: ModelParams,
    t: float,
    convention: str = "unitary",
) -> GaussianState:
    """Exact state at time ``t`` evolved from ``state`` at time 0."""
    return Evolver(state, params, convention)(t)


def evolve_literal(
    state: GaussianState, params: ModelParams, t: float, convention: str = "unitary"
) -> GaussianState:
    """``g (Om0 - i f)^-1 g - i f`` evaluated literally.

    Diverges at propagator singularities; kept only as a cross-check of the
    production path.
    """
    basis = dft_matrix(params.n)
    freqs = normal_mode_frequencies(params).freqs
    mode0 = to_mode_basis(state, basis, convention)
    f = freqs / np.tan(freqs * t)
    g = freqs / np.sin(freqs * t)
    inner = np.linalg.inv(mode0 - 1j * np.diag(f))
    mode_t = g[:, None] * inner * g[None, :] - 1j * np.diag(f)
    return from_mode_basis(mode_t, basis, convention)
