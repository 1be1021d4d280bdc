"""Bath-preparation experiment: purity traces and their dispersion widths.

Oscillator 0 starts in a fixed reduced state while the bath diagonal of the
initial Omega is varied over a few preparations that keep ``Tr Omega``
unchanged.  If the reduced dynamics were Markovian, purity traces from all
preparations would coincide; the dispersion width measures how far apart
they drift.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    GridMismatch,
    NonPositiveInitial,
    OddBathSize,
    OscRingError,
    ValidationError,
)
from .gaussian import Evolver, GaussianState, validate_state
from .model import ModelParams
from .reduction import purity, reduce

PROFILE_IDS = ("bp1", "bp2", "bp3", "bp4", "bp5")
CASE_TARGETS = {"A": 0.0, "B": 0.325}
DEFAULT_WINDOWS = ((0.0, 20.0), (20.0, 40.0), (40.0, 60.0), (60.0, 80.0), (80.0, 100.0))
STANDARD_SUBSETS = {
    "w2": ("bp1", "bp2"),
    "w3": ("bp1", "bp3", "bp5"),
    "w5": ("bp1", "bp2", "bp3", "bp4", "bp5"),
}
THREADS_ENV = "OSCRING_THREADS"

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """Infinite generator of splitmix64 outputs."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def seeded_shuffle(items: list, seed: int) -> list:
    """Fisher-Yates shuffle driven by splitmix64; same seed, same order."""
    out = list(items)
    rng = splitmix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = next(rng) % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class BathProfile:
    id: str
    diag: tuple
    seed: int = 0

    @property
    def n1(self) -> int:
        return len(self.diag)


def bath_profile(id: str, n1: int, seed: int = 0) -> BathProfile:
    """Bath diagonal Omega_kk, k = 1..n1, for preparation ``id``.

    Index 0 of the returned diagonal is oscillator 1.
    """
    id = id.lower()
    if id not in PROFILE_IDS:
        raise ValueError(f"unknown bath profile {id!r}")
    if n1 < 2:
        raise ValueError(f"bath needs at least 2 oscillators, got {n1}")
    if id in ("bp3", "bp4", "bp5") and n1 % 2:
        raise OddBathSize(f"{id} needs an even bath size, got n1={n1}")
    diag = [1.0] * n1
    half = n1 // 2
    if id == "bp2":
        diag[0], diag[1] = 1.5, 0.5
    elif id == "bp3":
        diag[half - 1], diag[half] = 1.5, 0.5
    elif id == "bp4":
        diag = [1.5] * half + [0.5] * half
    elif id == "bp5":
        diag = seeded_shuffle([1.5] * half + [0.5] * half, seed)
    return BathProfile(id, tuple(diag), seed if id == "bp5" else 0)


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    case: str = "A"
    target_r12: float | None = None
    profiles: tuple = ("bp1",)
    t_max: float = 100.0
    dt: float = 0.02
    windows: tuple = DEFAULT_WINDOWS
    seed: int = 0
    r12_mode: str = "paper"
    convention: str = "unitary"

    def __post_init__(self):
        case = str(self.case).upper()
        if case not in CASE_TARGETS:
            raise ValidationError(f"case must be A or B, got {self.case!r}")
        object.__setattr__(self, "case", case)
        target = CASE_TARGETS[case] if self.target_r12 is None else float(self.target_r12)
        if case == "A" and target != 0.0:
            raise ValidationError("case A fixes target_r12 = 0")
        if target < 0:
            raise ValidationError(f"target_r12 must be >= 0, got {target}")
        object.__setattr__(self, "target_r12", target)

        profiles = tuple(p.lower() for p in self.profiles)
        if not profiles:
            raise ValidationError("at least one bath profile is required")
        for p in profiles:
            if p not in PROFILE_IDS:
                raise ValidationError(f"unknown bath profile {p!r}")
        if len(set(profiles)) != len(profiles):
            raise ValidationError("bath profiles must be distinct")
        n1 = self.params.n_bath
        if n1 % 2 and any(p in ("bp3", "bp4", "bp5") for p in profiles):
            raise ValidationError(
                f"profiles bp3/bp4/bp5 need an even bath size, got N1={n1}"
            )
        object.__setattr__(self, "profiles", profiles)

        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.t_max >= 0:
            raise ValidationError(f"t_max must be >= 0, got {self.t_max}")
        windows = tuple((float(lo), float(hi)) for lo, hi in self.windows)
        for lo, hi in windows:
            if not (0 <= lo <= hi <= self.t_max):
                raise ValidationError(f"window [{lo}, {hi}] not within [0, {self.t_max}]")
        object.__setattr__(self, "windows", windows)
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        if self.r12_mode not in ("paper", "exact"):
            raise ValidationError(f"r12_mode must be paper or exact, got {self.r12_mode!r}")
        if self.convention not in ("unitary", "symmetric"):
            raise ValidationError(
                f"convention must be unitary or symmetric, got {self.convention!r}"
            )

    def grid(self) -> np.ndarray:
        steps = int(np.floor(self.t_max / self.dt + 1e-9))
        return np.arange(steps + 1) * self.dt

    def bath_profiles(self) -> list[BathProfile]:
        return [bath_profile(p, self.params.n_bath, self.seed) for p in self.profiles]


def solve_uniform_coupling(target_r12: float, bath_diag: Sequence[float]) -> float:
    """Equal coupling c = Omega_0k making r12(0) hit ``target_r12``.

    With a diagonal bath block, ``a = c^2 sum_k 1 / (2 Omega_kk)``.
    """
    if target_r12 == 0:
        return 0.0
    total = sum(1.0 / (2.0 * d) for d in bath_diag)
    return float(np.sqrt(target_r12 / total))


def build_initial_omega(config: ExperimentConfig, profile: BathProfile) -> GaussianState:
    n = config.params.n
    if profile.n1 != n - 1:
        raise ValidationError(f"profile has {profile.n1} bath entries, ring needs {n - 1}")
    c = solve_uniform_coupling(config.target_r12, profile.diag)
    om = np.diag(np.concatenate(([1.0], profile.diag)))
    om[0, 1:] = c
    om[1:, 0] = c
    state = GaussianState(om)
    if not validate_state(state).posdef:
        raise NonPositiveInitial(
            f"initial Omega for {profile.id} with target_r12={config.target_r12} "
            "is not positive definite"
        )
    return state


@dataclass(frozen=True)
class PurityTrace:
    profile_id: str
    times: np.ndarray
    mu: np.ndarray


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return 1


def _purity_at(evolver: Evolver, t: float, mode: str) -> float:
    try:
        return purity(reduce(evolver(t), mode))
    except OscRingError as exc:
        exc.t = t
        exc.add_note(f"while evaluating t={t}")
        raise


def purity_series(
    state: GaussianState,
    params: ModelParams,
    times: Sequence[float],
    r12_mode: str = "paper",
    convention: str = "unitary",
    threads: int | None = None,
) -> np.ndarray:
    evolver = Evolver(state, params, convention)
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        mu = [_purity_at(evolver, float(t), r12_mode) for t in times]
    else:
        with ThreadPoolExecutor(threads) as pool:
            # map preserves input order regardless of completion order
            mu = list(pool.map(lambda t: _purity_at(evolver, float(t), r12_mode), times))
    return np.array(mu)


def purity_trace(
    config: ExperimentConfig, profile: BathProfile, threads: int | None = None
) -> PurityTrace:
    state = build_initial_omega(config, profile)
    times = config.grid()
    mu = purity_series(state, config.params, times, config.r12_mode, config.convention, threads)
    return PurityTrace(profile.id, times, mu)


@dataclass
class WidthTable:
    windows: list
    # subset name -> list of widths, one per window
    rows: dict = field(default_factory=dict)
    subsets: dict = field(default_factory=dict)

    def value(self, subset: str, window) -> float:
        return self.rows[subset][self.windows.index(tuple(window))]

    def to_dict(self) -> dict:
        return {
            "windows": [list(w) for w in self.windows],
            "subsets": {k: list(v) for k, v in self.subsets.items()},
            "widths": {k: list(v) for k, v in self.rows.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WidthTable":
        return cls(
            [tuple(w) for w in data["windows"]],
            {k: list(v) for k, v in data["widths"].items()},
            {k: tuple(v) for k, v in data["subsets"].items()},
        )


def window_mask(times: np.ndarray, window) -> np.ndarray:
    lo, hi = window
    eps = 1e-9 * max(1.0, abs(hi))
    return (times >= lo - eps) & (times <= hi + eps)


def dispersion_width(
    traces: Sequence[PurityTrace],
    windows=DEFAULT_WINDOWS,
    subsets: dict | None = None,
) -> WidthTable:
    """Max over the window of the largest pairwise purity spread.

    Subsets whose profiles are not all present are skipped.  Always computed
    on raw traces.
    """
    if not traces:
        raise GridMismatch("no traces given")
    times = traces[0].times
    for tr in traces[1:]:
        if tr.times.shape != times.shape or not np.array_equal(tr.times, times):
            raise GridMismatch(f"trace {tr.profile_id} is on a different time grid")
    by_id = {tr.profile_id: tr.mu for tr in traces}
    subsets = STANDARD_SUBSETS if subsets is None else subsets
    windows = [tuple(map(float, w)) for w in windows]
    table = WidthTable(windows)
    for name, members in subsets.items():
        if not all(m in by_id for m in members):
            continue
        stack = np.vstack([by_id[m] for m in members])
        # max_{i != j} |mu_i - mu_j| is the spread at each time
        spread = stack.max(axis=0) - stack.min(axis=0)
        row = []
        for w in windows:
            sel = spread[window_mask(times, w)]
            row.append(float(sel.max()) if sel.size else 0.0)
        table.rows[name] = row
        table.subsets[name] = tuple(members)
    return table


def de_casteljau(ctrl: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Evaluate the Bezier curve with control points ``ctrl`` (shape (n,) or
    (n, d)) at parameters ``u``."""
    ctrl = np.asarray(ctrl, dtype=float)
    u = np.asarray(u, dtype=float)
    pts = np.broadcast_to(ctrl, (len(u),) + ctrl.shape).copy()
    uu = u.reshape((-1,) + (1,) * ctrl.ndim)
    for k in range(len(ctrl) - 1, 0, -1):
        pts = (1.0 - uu) * pts[:, :k] + uu * pts[:, 1 : k + 1]
    return pts[:, 0]


def bezier_smooth(trace: PurityTrace, n_ctrl: int = 256, n_out: int = 512):
    """Single-Bezier smoothing of a trace for plotting; returns (times, mu)."""
    length = len(trace.mu)
    if length == 0:
        raise ValueError("cannot smooth an empty trace")
    n_ctrl = max(1, min(n_ctrl, length))
    idx = np.round(np.linspace(0, length - 1, n_ctrl)).astype(int)
    ctrl = np.column_stack([trace.times[idx], trace.mu[idx]])
    curve = de_casteljau(ctrl, np.linspace(0.0, 1.0, n_out))
    return curve[:, 0], curve[:, 1]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    profiles: list
    traces: list
    widths: WidthTable


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    profiles = config.bath_profiles()
    traces = [purity_trace(config, p, threads) for p in profiles]
    widths = dispersion_width(traces, config.windows)
    return ExperimentResult(config, profiles, traces, widths)
