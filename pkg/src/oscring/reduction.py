"""Partial trace down to oscillator 0 and purity of the reduced state.

Tracing a pure Gaussian over oscillators 1..N-1 leaves

    rho0(x, x') ~ exp(-r11 x^2/2 - conj(r11) x'^2/2 + r12 x x')

with ``r11 = Omega_00 - a`` and ``a = v.K.v``, where ``v`` is the coupling row,
``M`` the bath block and ``K = (M + conj M)^-1``.  The cross coefficient
``r12`` is available in two forms:

``"paper"``  ``|a|``, the modulus of the bilinear form.
``"exact"``  ``conj(v).K.v``, the Hermitian form that direct Gaussian
             marginalisation produces.

Both agree whenever ``v`` is real up to a common phase (e.g. real Omega).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import NonPositiveBath, NonPositiveReduced
from .gaussian import GaussianState

R12_MODES = ("paper", "exact")
CLAMP = 1e-9


@dataclass(frozen=True)
class ReducedState:
    r11: complex
    r12: float
    mode: str
    a: complex = 0j

    @property
    def gap(self) -> float:
        return self.r11.real - self.r12


def _cholesky(m: np.ndarray, what: str):
    try:
        return cho_factor(m, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NonPositiveBath(f"{what} is not positive definite") from exc


def reduce(state: GaussianState, mode: str = "paper") -> ReducedState:
    if mode not in R12_MODES:
        raise ValueError(f"unknown r12 mode {mode!r}; expected one of {R12_MODES}")
    om = state.omega_matrix
    if state.n < 2:
        raise ValueError("reduction needs at least two oscillators")
    v = om[0, 1:]
    bath = 2.0 * om[1:, 1:].real
    y = cho_solve(_cholesky(bath, "bath block M + M*"), v)
    a = complex(v @ y)
    if mode == "paper":
        r12 = abs(a)
    else:
        r12 = float(np.real(np.conj(v) @ y))
    r11 = complex(om[0, 0] - a)
    if r12 > r11.real + CLAMP:
        raise NonPositiveReduced(f"r12={r12:.6g} exceeds Re r11={r11.real:.6g}")
    return ReducedState(r11, r12, mode, a)


def purity(r: ReducedState) -> float:
    """Tr rho0^2 = sqrt((Re r11 - r12) / (Re r11 + r12))."""
    gap = r.r11.real - r.r12
    if gap < -CLAMP:
        raise NonPositiveReduced(f"Re r11 - r12 = {gap:.3e} < 0")
    gap = max(gap, 0.0)
    return float(np.sqrt(gap / (r.r11.real + r.r12)))


def covariance_purity(state: GaussianState) -> float:
    """Purity of oscillator 0 from its phase-space covariance block.

    Uses <x x> = A^-1/2, sym<x p> = -A^-1 B/2, <p p> = (A + B A^-1 B)/2 for
    Omega = A + iB, and mu = 1 / (2 sqrt(det sigma0)).
    """
    om = state.omega_matrix
    A = 0.5 * (om.real + om.real.T)
    B = 0.5 * (om.imag + om.imag.T)
    fac = _cholesky(A, "Re Omega")
    n = state.n
    e0 = np.zeros(n)
    e0[0] = 1.0
    ainv_e0 = cho_solve(fac, e0)
    ainv_b = cho_solve(fac, B)
    xx = 0.5 * ainv_e0[0]
    xp = -0.5 * ainv_b[0, 0]
    pp = 0.5 * (A[0, 0] + B[0] @ ainv_b[:, 0])
    det = xx * pp - xp * xp
    return float(1.0 / (2.0 * np.sqrt(det)))
