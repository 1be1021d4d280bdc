"""Command-line driver: config parsing, runs, and data artifacts.

Subcommands::

    oscring run CONFIG [--out DIR]
    oscring rerun MANIFEST [--out DIR]
    oscring widths RAW_TRACE_CSV [--windows "0:20;20:40"]
    oscring oracle-check

Worker threads for trace evaluation come from ``OSCRING_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import OscRingError, ParseError, ValidationError
from .experiment import (
    DEFAULT_WINDOWS,
    PROFILE_IDS,
    ExperimentConfig,
    PurityTrace,
    bezier_smooth,
    dispersion_width,
    run_experiment,
)
from .model import ModelParams

log = logging.getLogger("oscring")

RAW_TRACE = "raw_trace.csv"
SMOOTH_TRACE = "smooth_trace.csv"
WIDTHS = "widths.json"
MANIFEST = "manifest.json"
SMOOTH_CTRL = 256
SMOOTH_OUT = 512

CONFIG_KEYS = (
    "n", "omega", "lambda", "case", "target_r12", "profiles", "t_max", "dt",
    "windows", "seed", "r12_mode", "convention", "out_dir",
)


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class RunSpec:
    config: ExperimentConfig
    out_dir: str = "out"


def _parse_windows(text: str, line=None) -> tuple:
    windows = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            lo, hi = chunk.split(":")
            windows.append((float(lo), float(hi)))
        except ValueError:
            raise ParseError(f"bad window {chunk!r}, expected lo:hi", line) from None
    if not windows:
        raise ParseError("windows list is empty", line)
    return tuple(windows)


def _parse_number(key, value, kind, line):
    try:
        x = kind(value)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {value!r} as {kind.__name__}", line) from None
    if kind is float and not math.isfinite(x):
        raise ParseError(f"{key}: value must be finite", line)
    return x


def parse_config(source: str | os.PathLike) -> RunSpec:
    """Parse ``key=value`` lines from a path or inline text.

    Blank lines and ``#`` comments are ignored.  Defaults: omega=1,
    lambda=0.1, case=A, target_r12 from the case, profiles = every
    preparation valid for the bath size, t_max=100, dt=0.02,
    windows=0:20;20:40;40:60;60:80;80:100, seed=0, r12_mode=paper,
    convention=unitary, out_dir=out.
    """
    text = str(source)
    if "\n" not in text and "=" not in text:
        path = Path(text)
        if not path.is_file():
            raise ParseError(f"config file {text!r} not found")
        text = path.read_text()
    if not text.strip():
        raise ParseError("config is empty")

    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno)
        raw[key] = (value, lineno)

    def get(key, kind, default):
        if key not in raw:
            return default
        value, lineno = raw[key]
        if kind is str:
            return value
        return _parse_number(key, value, kind, lineno)

    case = get("case", str, "A").upper()
    target = get("target_r12", float, None)
    if case == "A" and target not in (None, 0.0):
        raise ValidationError("case A forces target_r12 = 0")

    if "n" not in raw:
        raise ValidationError("missing required key 'n'")
    n = get("n", int, None)
    omega = get("omega", float, 1.0)
    coupling = get("lambda", float, 0.1)
    try:
        params = ModelParams(n, omega, coupling)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    if "profiles" in raw:
        profiles = tuple(p.strip().lower() for p in raw["profiles"][0].split(",") if p.strip())
    elif params.n_bath % 2:
        profiles = ("bp1", "bp2")
    else:
        profiles = PROFILE_IDS
    windows = (
        _parse_windows(*raw["windows"]) if "windows" in raw else DEFAULT_WINDOWS
    )
    seed = get("seed", int, 0)

    config = ExperimentConfig(
        params=params,
        case=case,
        target_r12=target,
        profiles=profiles,
        t_max=get("t_max", float, 100.0),
        dt=get("dt", float, 0.02),
        windows=windows,
        seed=seed,
        r12_mode=get("r12_mode", str, "paper").lower(),
        convention=get("convention", str, "unitary").lower(),
    )
    return RunSpec(config, get("out_dir", str, "out"))


def config_to_dict(config: ExperimentConfig) -> dict:
    p = config.params
    return {
        "n": p.n,
        "omega": p.omega,
        "lambda": p.coupling,
        "case": config.case,
        "target_r12": config.target_r12,
        "profiles": list(config.profiles),
        "t_max": config.t_max,
        "dt": config.dt,
        "windows": [list(w) for w in config.windows],
        "seed": config.seed,
        "r12_mode": config.r12_mode,
        "convention": config.convention,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    return ExperimentConfig(
        params=ModelParams(data["n"], data["omega"], data["lambda"]),
        case=data["case"],
        target_r12=data["target_r12"],
        profiles=tuple(data["profiles"]),
        t_max=data["t_max"],
        dt=data["dt"],
        windows=tuple(tuple(w) for w in data["windows"]),
        seed=data["seed"],
        r12_mode=data["r12_mode"],
        convention=data["convention"],
    )


def dump_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialise non-finite float {obj}")
        text = fmt_float(obj)
        # keep floats recognisable as floats on read-back
        if not any(ch in text for ch in ".eE"):
            text += ".0"
        return text
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        items = [pad + dump_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_text(header: list, columns: list) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(fmt_float(x) for x in row))
    return "\n".join(lines) + "\n"


def read_trace_csv(path) -> list[PurityTrace]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t" or not all(h.startswith("mu_") for h in header[1:]):
        raise ParseError(f"{path}: header must be 't,mu_<profile>,...'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = data[:, 0]
    return [PurityTrace(h[3:], times, data[:, i + 1]) for i, h in enumerate(header[1:])]


@dataclass
class RunManifest:
    config: dict
    seed: int
    grid: dict
    r12_mode: str
    profiles: dict
    artifacts: list
    smoothing: dict = field(default_factory=lambda: {"n_ctrl": SMOOTH_CTRL, "n_out": SMOOTH_OUT})
    tool: str = "oscring"
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "config": self.config,
            "seed": self.seed,
            "grid": self.grid,
            "r12_mode": self.r12_mode,
            "profiles": self.profiles,
            "smoothing": self.smoothing,
            "artifacts": self.artifacts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            config=data["config"],
            seed=data["seed"],
            grid=data["grid"],
            r12_mode=data["r12_mode"],
            profiles=data["profiles"],
            artifacts=data["artifacts"],
            smoothing=data.get("smoothing", {"n_ctrl": SMOOTH_CTRL, "n_out": SMOOTH_OUT}),
            tool=data.get("tool", "oscring"),
            version=data.get("version", __version__),
        )


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(config: ExperimentConfig, out_dir, threads: int | None = None) -> RunManifest:
    """Evaluate all traces and write the four artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(config, threads)
    times = result.traces[0].times
    for tr in result.traces:
        bad = (tr.mu <= 0) | (tr.mu > 1) | ~np.isfinite(tr.mu)
        if np.any(bad):
            t_bad = float(tr.times[np.argmax(bad)])
            raise ValidationError(f"purity outside (0, 1] for {tr.profile_id} at t={t_bad}")

    header = ["t"] + [f"mu_{tr.profile_id}" for tr in result.traces]
    raw_text = _csv_text(header, [times] + [tr.mu for tr in result.traces])

    smooth_cols = []
    for tr in result.traces:
        ts, mus = bezier_smooth(tr, SMOOTH_CTRL, SMOOTH_OUT)
        if not smooth_cols:
            smooth_cols.append(ts)
        smooth_cols.append(mus)
    smooth_text = _csv_text(header, smooth_cols)

    manifest = RunManifest(
        config=config_to_dict(config),
        seed=config.seed,
        grid={"t0": 0.0, "dt": config.dt, "t_max": config.t_max, "points": int(len(times))},
        r12_mode=config.r12_mode,
        profiles={p.id: list(p.diag) for p in result.profiles},
        artifacts=[RAW_TRACE, SMOOTH_TRACE, WIDTHS, MANIFEST],
    )
    files = {
        RAW_TRACE: raw_text,
        SMOOTH_TRACE: smooth_text,
        WIDTHS: dump_json(result.widths.to_dict()) + "\n",
        MANIFEST: dump_json(manifest.to_dict()) + "\n",
    }
    written = []
    try:
        for name, text in files.items():
            _write_atomic(out / name, text)
            written.append(out / name)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return manifest


def rerun(manifest_path, out_dir=None, threads: int | None = None) -> RunManifest:
    manifest_path = Path(manifest_path)
    data = RunManifest.from_dict(json.loads(manifest_path.read_text()))
    config = config_from_dict(data.config)
    recorded = {k: [float(x) for x in v] for k, v in data.profiles.items()}
    rebuilt = {p.id: list(p.diag) for p in config.bath_profiles()}
    if recorded != rebuilt:
        raise ValidationError("bath profiles in manifest do not match the regenerated ones")
    return run(config, out_dir or manifest_path.parent, threads)


def _cmd_run(args) -> int:
    spec = parse_config(args.config)
    out = args.out or spec.out_dir
    run(spec.config, out)
    print(f"wrote {RAW_TRACE}, {SMOOTH_TRACE}, {WIDTHS}, {MANIFEST} to {out}")
    return 0


def _cmd_rerun(args) -> int:
    rerun(args.manifest, args.out)
    print(f"re-ran {args.manifest}")
    return 0


def _cmd_widths(args) -> int:
    traces = read_trace_csv(args.raw_trace)
    windows = _parse_windows(args.windows) if args.windows else DEFAULT_WINDOWS
    table = dispersion_width(traces, windows)
    print(dump_json(table.to_dict()))
    return 0


def _cmd_oracle_check(args) -> int:
    from .gaussian import GaussianState, evolve
    from .oracle import arbitrate_r12_modes
    from .reduction import covariance_purity, purity, reduce

    rng = np.random.default_rng(args.seed)
    failures = 0
    for n in (2, 3):
        params = ModelParams(n, 1.0, 0.5)
        for i in range(args.samples):
            a = rng.normal(size=(n, n)) * 0.3
            om = a @ a.T + np.eye(n)
            state = evolve(GaussianState(om), params, float(rng.uniform(0, 5)))
            rep = arbitrate_r12_modes(state)
            ok = rep["exact_error"] < 1e-4 and rep["covariance_error"] < 1e-4
            failures += not ok
            print(
                f"N={n} #{i}: quadrature={rep['quadrature']:.8f} exact_err={rep['exact_error']:.2e} "
                f"cov_err={rep['covariance_error']:.2e} paper_err={rep['paper_error']:.2e} "
                f"{'PASS' if ok else 'FAIL'}"
            )
    params = ModelParams(11, 1.0, 0.1)
    om = np.eye(11)
    om[0, 1:] = om[1:, 0] = 0.25
    for t in rng.uniform(0, 100, size=args.samples):
        state = evolve(GaussianState(om), params, float(t))
        diff = abs(purity(reduce(state, "exact")) - covariance_purity(state))
        ok = diff < 1e-8
        failures += not ok
        print(f"N=11 t={t:.4f}: |exact - covariance|={diff:.2e} {'PASS' if ok else 'FAIL'}")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscring", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("rerun", help="re-run an experiment from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: next to the manifest)")
    p.set_defaults(func=_cmd_rerun)

    p = sub.add_parser("widths", help="dispersion widths of a raw_trace.csv")
    p.add_argument("raw_trace")
    p.add_argument("--windows", help='semicolon-separated lo:hi pairs, e.g. "0:20;20:40"')
    p.set_defaults(func=_cmd_widths)

    p = sub.add_parser("oracle-check")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (OscRingError, OSError) as exc:
        print(f"oscring: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
