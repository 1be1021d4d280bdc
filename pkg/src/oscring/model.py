"""Ring lattice of coupled oscillators and its normal-mode decomposition.

The Hamiltonian is

    H = 1/2 sum_a [p_a^2 + omega^2 x_a^2 + lam (x_a - x_{a+1})^2]

with periodic boundary conditions.  The discrete Fourier transform
diagonalises the coupling; mode ``k`` oscillates at

    freq_k = sqrt(omega^2 + 4 lam sin^2(pi k / N)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalError

SINGULAR_SIN = 1e-9
IMAG_DROP = 1e-10
IMAG_FAIL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the ring: size ``n``, on-site frequency, coupling."""

    n: int
    omega: float = 1.0
    coupling: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"ring size must be an integer >= 2, got {self.n!r}")
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega!r}")
        if not self.coupling >= 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def n_bath(self) -> int:
        return self.n - 1


@dataclass(frozen=True)
class ModeSpectrum:
    freqs: np.ndarray

    def __len__(self):
        return len(self.freqs)


@dataclass(frozen=True)
class DftBasis:
    """Unitary, symmetric DFT matrix ``S[j, k] = exp(-2 pi i jk/N) / sqrt(N)``."""

    S: np.ndarray

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def S_dag(self) -> np.ndarray:
        return self.S.conj().T


@dataclass(frozen=True)
class PropagatorDiagonals:
    t: float
    f: np.ndarray
    g: np.ndarray
    singular: bool


def normal_mode_frequencies(params: ModelParams) -> ModeSpectrum:
    n = params.n
    k = np.arange(n // 2 + 1)
    half = np.sqrt(params.omega**2 + 4.0 * params.coupling * np.sin(np.pi * k / n) ** 2)
    freqs = np.empty(n)
    freqs[: n // 2 + 1] = half
    # mirror so that freqs[k] == freqs[n - k] bit for bit
    freqs[n // 2 + 1 :] = half[1 : n - n // 2][::-1]
    return ModeSpectrum(_frozen(freqs))


def dft_matrix(n: int) -> DftBasis:
    if n < 2:
        raise ValueError(f"DFT size must be >= 2, got {n}")
    k = np.arange(n)
    # reduce jk mod n before scaling to keep the phase argument small
    phase = np.outer(k, k) % n
    S = np.exp(-2j * np.pi * phase / n) / np.sqrt(n)
    return DftBasis(_frozen(S))


def ground_state_matrix(params: ModelParams, basis: DftBasis | None = None) -> np.ndarray:
    """Position-basis quadratic form of the ring ground state, ``S^† diag(freqs) S``."""
    basis = basis or dft_matrix(params.n)
    freqs = normal_mode_frequencies(params).freqs
    A = basis.S_dag @ (freqs[:, None] * basis.S)
    worst = np.max(np.abs(A.imag))
    if worst > IMAG_FAIL:
        raise InternalError(
            f"ground-state matrix has imaginary part {worst:.3e}; spectrum symmetry broken"
        )
    A = A.real.copy()
    A = 0.5 * (A + A.T)
    return _frozen(A)


def propagator_diagonals(params: ModelParams, t: float) -> PropagatorDiagonals:
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    freqs = normal_mode_frequencies(params).freqs
    s = np.sin(freqs * t)
    c = np.cos(freqs * t)
    singular = bool(np.any(np.abs(s) < SINGULAR_SIN))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = freqs * c / s
        g = freqs / s
    return PropagatorDiagonals(float(t), _frozen(f), _frozen(g), singular)
