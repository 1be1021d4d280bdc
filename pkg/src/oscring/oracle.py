"""Brute-force references for the fast evolution and reduction paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, NonPositiveBath
from .gaussian import GaussianState, validate_state
from .reduction import covariance_purity, purity, reduce

MIN_POINTS = 64
SPREAD_FACTOR = 6.0
DOUBLING_TOL = 1e-4


@dataclass(frozen=True)
class QuadratureGrid:
    half_width: float = 8.0
    points_per_axis: int = 256

    def __post_init__(self):
        if self.points_per_axis < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} points per axis")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    def doubled(self) -> "QuadratureGrid":
        return QuadratureGrid(self.half_width, 2 * self.points_per_axis)


def position_spread(state: GaussianState) -> float:
    """Largest position standard deviation, sqrt(max eig of (Re Omega)^-1 / 2)."""
    re = state.omega_matrix.real
    lo = np.linalg.eigvalsh(0.5 * (re + re.T))[0]
    if lo <= 0:
        raise NonPositiveBath("Re Omega is not positive definite")
    return float(np.sqrt(0.5 / lo))


def default_grid(state: GaussianState) -> QuadratureGrid:
    # 3-D wavefunctions with 256^3 (and 512^3 for the doubling check) points do
    # not fit comfortably in memory; the trapezoid rule is spectrally accurate
    # for Gaussians, so a coarser grid is ample there.
    points = 256 if state.n <= 2 else 96
    half_width = max(8.0, SPREAD_FACTOR * position_spread(state) * 1.05)
    return QuadratureGrid(half_width, points)


def _wavefunction(om: np.ndarray, axis: np.ndarray) -> np.ndarray:
    n = om.shape[0]
    coords = np.meshgrid(*([axis] * n), indexing="ij")
    quad = np.zeros(coords[0].shape, dtype=complex)
    for j in range(n):
        for k in range(n):
            quad += om[j, k] * coords[j] * coords[k]
    return np.exp(-0.5 * quad)


def _quadrature_purity(state: GaussianState, grid: QuadratureGrid) -> float:
    axis = grid.axis()
    psi = _wavefunction(state.omega_matrix, axis)
    flat = psi.reshape(len(axis), -1)
    # rho0(x, x') up to normalisation; spacing factors cancel in the ratio
    rho = flat @ flat.conj().T
    tr = np.trace(rho).real
    return float(np.sum(np.abs(rho) ** 2) / tr**2)


def quadrature_reduce(state: GaussianState, grid: QuadratureGrid | None = None) -> float:
    """Purity of oscillator 0 by direct numerical partial trace (N = 2 or 3)."""
    if state.n not in (2, 3):
        raise ValueError(f"quadrature oracle supports N in {{2, 3}}, got {state.n}")
    diag = validate_state(state)
    if not diag.posdef:
        raise NonPositiveBath("Re Omega is not positive definite")
    grid = grid or default_grid(state)
    spread = position_spread(state)
    if grid.half_width < SPREAD_FACTOR * spread:
        raise GridTooCoarse(
            f"half_width {grid.half_width} < {SPREAD_FACTOR} x position spread {spread:.3g}"
        )
    coarse = _quadrature_purity(state, grid)
    fine = _quadrature_purity(state, grid.doubled())
    if abs(fine - coarse) > DOUBLING_TOL:
        raise GridTooCoarse(
            f"doubling the grid changed the purity by {abs(fine - coarse):.3e}"
        )
    return fine


def scalar_evolution(omega0: complex, mode_freq: float, t: float) -> complex:
    """Single-mode Moebius map of the Gaussian exponent."""
    s = np.sin(mode_freq * t)
    c = np.cos(mode_freq * t)
    return complex(
        mode_freq * (mode_freq * s - 1j * omega0 * c) / (omega0 * s - 1j * mode_freq * c)
    )


def arbitrate_r12_modes(state: GaussianState, grid: QuadratureGrid | None = None) -> dict:
    """Compare both reduction modes and the covariance formula against quadrature."""
    reference = quadrature_reduce(state, grid)
    paper = purity(reduce(state, "paper"))
    exact = purity(reduce(state, "exact"))
    cov = covariance_purity(state)
    return {
        "quadrature": reference,
        "paper": paper,
        "exact": exact,
        "covariance": cov,
        "paper_error": abs(paper - reference),
        "exact_error": abs(exact - reference),
        "covariance_error": abs(cov - reference),
    }
