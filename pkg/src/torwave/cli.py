"""Scenario-driven command line: presets, orchestration, and output artifacts.

Subcommands map one-to-one onto scenarios: ``evolve`` (time integration with
norm series and snapshot archive), ``flow`` (cycle detection plus a
surface-conservation trajectory batch), ``resolvent`` (one vanishing-absorption
ladder), ``sweep`` (ladders over a spectral window), ``control-constant``
(empirical control ratios), and ``check-cc`` (damping-vs-cycle classifier).

Every run writes ``manifest.json`` echoing the fully resolved configuration,
the package version, wall-clock time, and a SHA-256 checksum of every other
file produced. Runs are deterministic given (config, seed): ``norms.csv`` and
``snapshots.bin`` are byte-identical across repeats.

File formats
------------
``norms.csv``      header ``t,L2,Hm1,Hm0p6`` for the default orders
                   (0, -1, -0.6); any other order s appears as ``Hs_<s>``.
                   Values are printed with ``%.17g`` (round-trip exact).
``snapshots.bin``  little-endian; header = magic ``ATRL``, version u32 (=1),
                   n1 u32, n2 u32, count u32; then per snapshot a float64
                   time followed by n1*n2 complex values in row-major order
                   as interleaved (re, im) float64 pairs.
``cycles.json``    cycle list with locations, periods, multipliers, kinds.
``ladder.json``    ladder record(s): epsilons, residual and solution norms,
                   Cauchy gaps, verdict, iteration counts, solver policy.
``cc.json``        control-condition report per component.
``control_constant.json``  ratio table of the empirical control constants.

Custom damping profiles are loaded from ``.npy`` arrays (real, nonnegative,
shape n1 x n2) passed via ``--damping PATH``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import struct
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .charflow import check_control_condition, find_limit_cycles, integrate_trajectory, on_surface_point
from .errors import ConfigError, InstabilityError, RungFailureError, StepSizeCollapseError
from .evolution import NormSeries, SimConfig, integrate
from .grid import TWO_PI, Field, TorusGrid
from .operators import DAMPING_NAMES, OperatorSpec, make_preset, smoothed_indicator
from .resolvent import (
    DEFAULT_EPSILONS,
    DEFAULT_SPECTRAL_WINDOW,
    estimate_control_constant,
    limiting_absorption,
    omega_sweep,
    validate_spectral_window,
)

SNAPSHOT_MAGIC = b"ATRL"
SNAPSHOT_VERSION = 1

SCENARIOS = ("evolve", "flow", "resolvent", "sweep", "control_constant", "check_cc")


@dataclass
class ScenarioConfig:
    """Fully resolved run description; echoed verbatim into the manifest."""

    scenario: str
    a: float = 0.5
    damping: str = "chi0"
    grid: tuple[int, int] = (128, 128)
    dt: float = 0.05
    t_final: float = 200.0
    snapshot_times: tuple[float, ...] | None = None
    norm_orders: tuple[float, ...] = (0.0, -1.0, -0.6)
    scheme: str = "rk4"
    norm_stride: int = 20
    omega: float = 0.0
    omegas: tuple[float, ...] | None = None
    epsilons: tuple[float, ...] = tuple(DEFAULT_EPSILONS)
    rtol: float = 1e-8
    max_iter: int = 5000
    delta: float = DEFAULT_SPECTRAL_WINDOW
    s: float = 0.0
    samples: int = 2
    cutoff_level: float = 0.05
    threshold: float | None = None
    sign: str = "CC_plus"
    n_trajectories: int = 20
    t_trajectory: float = 100.0
    flow_tol: float = 1e-7
    seed: int = 0
    jobs: int = 1
    output_dir: str = "out"

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}")
        if self.a <= 0.0 or self.a == 1.0:
            raise ConfigError("a", f"requires a > 0 and a != 1, got {self.a}")
        n1, n2 = self.grid
        if n1 < 8 or n2 < 8 or n1 % 2 or n2 % 2:
            raise ConfigError("grid", f"grid sides must be even and >= 8, got {n1}x{n2}")
        if self.damping not in DAMPING_NAMES and not Path(self.damping).exists():
            raise ConfigError(
                "damping", f"{self.damping!r} is neither a preset {DAMPING_NAMES} nor a file"
            )
        if self.scenario == "evolve":
            if self.dt <= 0.0 or self.t_final <= 0.0:
                raise ConfigError("dt", "dt and t_final must be positive")
            if self.scheme not in ("rk4", "strang_exp"):
                raise ConfigError("scheme", f"unknown scheme {self.scheme!r}")
            if 0.0 not in self.norm_orders:
                raise ConfigError("norm_orders", "must include 0")
        if self.scenario in ("resolvent", "sweep", "control_constant"):
            eps = np.asarray(self.epsilons, dtype=float)
            if eps.ndim != 1 or len(eps) < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
                raise ConfigError("epsilons", "must be positive and strictly decreasing")
        if self.scenario == "control_constant" and self.s <= -0.5:
            raise ConfigError("s", "control estimates need s > -1/2")
        if self.sign not in ("CC_plus", "CC_minus"):
            raise ConfigError("sign", f"unknown sign {self.sign!r}")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be >= 1")

    def resolved_snapshot_times(self) -> tuple[float, ...]:
        if self.snapshot_times is not None:
            return tuple(self.snapshot_times)
        return tuple(self.t_final * q for q in (0.25, 0.5, 0.75, 1.0))

    def resolved_omegas(self) -> tuple[float, ...]:
        if self.omegas is not None:
            return tuple(self.omegas)
        if self.scenario == "sweep":
            return tuple(np.linspace(-0.05, 0.05, 5))
        if self.scenario == "control_constant":
            return (-0.05, 0.0, 0.05)
        return (self.omega,)


@dataclass
class RunManifest:
    config: dict
    version: str
    grid: tuple[int, int]
    scheme: str | None
    wall_clock_seconds: float
    files: dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON-serializable: {type(x)}")


def load_custom_damping(path: str | Path) -> Field:
    """Load a damping profile from a .npy array and validate it.

    The array shape defines the grid; values must be real (imaginary part
    below 1e-14), finite, and nonnegative.
    """
    arr = np.load(Path(path))
    if arr.ndim != 2:
        raise ConfigError("damping", f"{path}: expected a 2-d array, got shape {arr.shape}")
    try:
        grid = TorusGrid(*arr.shape)
    except ValueError as e:
        raise ConfigError("damping", f"{path}: {e}") from e
    if not np.all(np.isfinite(arr)):
        raise ConfigError("damping", f"{path}: values must be finite")
    if np.iscomplexobj(arr) and np.max(np.abs(arr.imag)) > 1e-14:
        raise ConfigError("damping", f"{path}: values must be real")
    vals = arr.real.astype(float)
    if vals.min() < -1e-14:
        raise ConfigError("damping", f"{path}: negative value {vals.min():.3e} not allowed")
    return Field(grid, np.maximum(vals, 0.0))


def build_operator(config: ScenarioConfig):
    """Operator and reference forcing for the configured scenario."""
    n1, n2 = config.grid
    if config.damping in DAMPING_NAMES:
        return make_preset(config.a, n1, n2, config.damping)
    chi = load_custom_damping(config.damping)
    if chi.grid.shape != (n1, n2):
        raise ConfigError(
            "damping",
            f"custom profile shape {chi.grid.shape} does not match grid {n1}x{n2}",
        )
    spec, forcing = make_preset(config.a, n1, n2, "chi0")
    return OperatorSpec(m=spec.m, V=spec.V, chi=chi, a=config.a), forcing


def norm_column_name(s: float) -> str:
    if s == 0.0:
        return "L2"
    if s == -1.0:
        return "Hm1"
    if s == -0.6:
        return "Hm0p6"
    return f"Hs_{s:g}"


def write_norms_csv(path: Path, norms: NormSeries, orders) -> None:
    cols = [norm_column_name(s) for s in orders]
    with open(path, "w", newline="\n") as fh:
        fh.write("t," + ",".join(cols) + "\n")
        for i, t in enumerate(norms.times):
            row = [f"{t:.17g}"] + [f"{norms.values[s][i]:.17g}" for s in orders]
            fh.write(",".join(row) + "\n")


def write_snapshots_bin(path: Path, snapshots, times, grid: TorusGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIII", SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.n1, grid.n2, len(snapshots)))
        for t, snap in zip(times, snapshots):
            fh.write(struct.pack("<d", float(t)))
            fh.write(np.ascontiguousarray(snap.values).astype("<c16").tobytes())


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _ladder_record(ladder) -> dict:
    return {
        "omega": [ladder.omega.real, ladder.omega.imag],
        "epsilons": ladder.epsilons,
        "residual_norms": ladder.residual_norms,
        "solution_norms": ladder.solution_norms,
        "cauchy_gaps": ladder.cauchy_gaps,
        "verdict": ladder.verdict,
        "iterations": ladder.iterations,
        "meta": ladder.meta,
    }


def _cycle_record(cyc) -> dict:
    return {
        "x1": cyc.representative.x1,
        "x2": cyc.representative.x2,
        "theta": cyc.representative.theta,
        "period": cyc.period,
        "floquet_multiplier": cyc.floquet_multiplier,
        "kind": cyc.kind,
        "component_label": cyc.component_label,
        "branch": cyc.branch,
    }


def run(config: ScenarioConfig) -> RunManifest:
    """Execute one scenario and write its artifacts under ``output_dir``."""
    config.validate()
    t_start = time.perf_counter()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced: list[Path] = []
    scheme: str | None = None

    def emit_json(name: str, payload: dict) -> None:
        p = out / name
        p.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
        produced.append(p)

    if config.scenario == "evolve":
        scheme = config.scheme
        spec, forcing = build_operator(config)
        cfg = SimConfig(
            dt=config.dt,
            t_final=config.t_final,
            snapshot_times=config.resolved_snapshot_times(),
            norm_orders=config.norm_orders,
            scheme=config.scheme,
            norm_stride=config.norm_stride,
        )
        result = integrate(spec, forcing, cfg)
        write_norms_csv(out / "norms.csv", result.norms, cfg.norm_orders)
        produced.append(out / "norms.csv")
        write_snapshots_bin(out / "snapshots.bin", result.snapshots, result.snapshot_times, spec.grid)
        produced.append(out / "snapshots.bin")

    elif config.scenario == "flow":
        cycles = find_limit_cycles(config.a, omega=config.omega)
        rng = np.random.default_rng(config.seed)
        worst = 0.0

        def one_trajectory(k: int) -> float:
            r = np.random.default_rng(config.seed + 1000 + k)
            x1, x2 = r.uniform(0.0, TWO_PI, 2)
            branch = "theta_0" if r.random() < 0.5 else "theta_pi"
            p0 = on_surface_point(x1, x2, branch, config.a, config.omega)
            traj = integrate_trajectory(
                p0, config.a, config.t_trajectory, tol=config.flow_tol, omega=config.omega
            )
            return traj.max_surface_residual

        if config.jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                residuals = list(pool.map(one_trajectory, range(config.n_trajectories)))
        else:
            residuals = [one_trajectory(k) for k in range(config.n_trajectories)]
        worst = max(residuals) if residuals else 0.0
        emit_json(
            "cycles.json",
            {
                "a": config.a,
                "omega": config.omega,
                "cycles": [_cycle_record(c) for c in cycles],
                "trajectory_check": {
                    "count": config.n_trajectories,
                    "t_final": config.t_trajectory,
                    "tol": config.flow_tol,
                    "max_surface_residual": worst,
                },
            },
        )

    elif config.scenario == "resolvent":
        spec, forcing = build_operator(config)
        ladder = limiting_absorption(
            spec,
            config.omega,
            forcing.f,
            epsilons=config.epsilons,
            rtol=config.rtol,
            max_iter=config.max_iter,
            delta=config.delta,
        )
        emit_json("ladder.json", _ladder_record(ladder))

    elif config.scenario == "sweep":
        spec, forcing = build_operator(config)
        # shrink the window until the shifted-surface cycles stay hyperbolic
        delta_eff = validate_spectral_window(config.a, config.delta)
        omegas = config.resolved_omegas()
        for w in omegas:
            if abs(w) > delta_eff:
                raise ConfigError(
                    "omegas",
                    f"omega {w} outside the validated spectral window [-{delta_eff}, {delta_eff}]",
                )
        ladders = omega_sweep(
            spec,
            forcing.f,
            omegas,
            epsilons=config.epsilons,
            delta=delta_eff,
            jobs=config.jobs,
            rtol=config.rtol,
            max_iter=config.max_iter,
        )
        emit_json(
            "ladder.json",
            {"delta_validated": delta_eff, "ladders": [_ladder_record(lad) for lad in ladders]},
        )

    elif config.scenario == "control_constant":
        spec, _ = build_operator(config)
        cutoff = smoothed_indicator(spec.chi, config.cutoff_level)
        report = estimate_control_constant(
            spec,
            s=config.s,
            cutoff=cutoff,
            omegas=config.resolved_omegas(),
            epsilons=config.epsilons,
            samples=config.samples,
            rng=np.random.default_rng(config.seed),
            rtol=config.rtol,
            max_iter=config.max_iter,
        )
        emit_json(
            "control_constant.json",
            {
                "s": report.s,
                "samples": report.samples,
                "cutoff_level": config.cutoff_level,
                "ratios": [
                    {"omega": w, "epsilon": e, "ratio": r} for (w, e), r in sorted(report.ratios.items())
                ],
                "max_ratio": report.max_ratio,
            },
        )

    elif config.scenario == "check_cc":
        spec, _ = build_operator(config)
        cycles = find_limit_cycles(config.a, omega=config.omega)
        chi_max = float(spec.chi_real.max())
        threshold = config.threshold if config.threshold is not None else 0.1 * max(chi_max, 1e-30)
        report = check_control_condition(spec.chi, cycles, config.sign, threshold)
        emit_json("cycles.json", {"a": config.a, "omega": config.omega,
                                  "cycles": [_cycle_record(c) for c in cycles]})
        emit_json(
            "cc.json",
            {
                "sign": report.sign,
                "threshold": report.threshold,
                "per_component": report.per_component,
                "overall": report.overall,
                "max_chi": report.max_chi,
                "damping": config.damping,
            },
        )

    wall = time.perf_counter() - t_start
    manifest = RunManifest(
        config={**asdict(config), "snapshot_times": config.resolved_snapshot_times()
                if config.scenario == "evolve" else config.snapshot_times,
                "omegas": config.resolved_omegas() if config.scenario in ("sweep", "control_constant")
                else config.omegas},
        version=__version__,
        grid=config.grid,
        scheme=scheme,
        wall_clock_seconds=wall,
        files={p.name: {"sha256": _sha256(p), "bytes": p.stat().st_size} for p in produced},
    )
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest


# --- configuration parsing -------------------------------------------------

def parse_grid(text: str) -> tuple[int, int]:
    try:
        n1, n2 = text.lower().split("x")
        return int(n1), int(n2)
    except Exception as e:
        raise ConfigError("grid", f"expected N1xN2, got {text!r}") from e


def parse_config_file(path: str | Path) -> dict:
    """Flat key = value file; values are JSON with a bare-string fallback."""
    table: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            table[key] = json.loads(value)
        except json.JSONDecodeError:
            table[key] = value
    return table


_TUPLE_KEYS = {"snapshot_times", "norm_orders", "epsilons", "omegas"}


def merge_config(scenario: str, file_table: dict, cli_table: dict) -> ScenarioConfig:
    """Defaults < config file < explicit CLI flags."""
    merged: dict = {"scenario": scenario}
    for source in (file_table, cli_table):
        for key, value in source.items():
            if value is None:
                continue
            merged[key] = value
    if "grid" in merged and isinstance(merged["grid"], str):
        merged["grid"] = parse_grid(merged["grid"])
    if "grid" in merged and isinstance(merged["grid"], list):
        merged["grid"] = tuple(int(v) for v in merged["grid"])
    for key in _TUPLE_KEYS:
        if merged.get(key) is not None:
            value = merged[key]
            if not isinstance(value, (list, tuple)):
                raise ConfigError(key, f"expected a list, got {value!r}")
            merged[key] = tuple(float(v) for v in value)
    known = set(ScenarioConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ConfigError("config", f"unknown keys: {sorted(unknown)}")
    try:
        return ScenarioConfig(**merged)
    except TypeError as e:
        raise ConfigError("config", str(e)) from e


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    p.add_argument("--a", type=float, dest="a", help="potential amplitude (a > 0, a != 1)")
    p.add_argument("--damping", help="chi0|chi1|chi2 or a .npy profile path")
    p.add_argument("--grid", help="grid as N1xN2, e.g. 128x128")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--t-final", type=float, dest="t_final", help="integration horizon")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--seed", type=int, help="seed for randomized pieces")
    p.add_argument("--jobs", type=int, help="parallel workers for sweeps and batches")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torwave",
        description="Spectral simulator and analysis toolkit for damped zeroth-order "
        "wave models on the 2-torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="time-integrate the forced equation")
    _add_common_flags(p)
    p.add_argument("--scheme", choices=("rk4", "strang_exp"))
    p.add_argument("--norm-stride", type=int, dest="norm_stride")
    p.add_argument("--snapshot-times", dest="snapshot_times", type=float, nargs="+")

    p = sub.add_parser("flow", help="detect limit cycles and validate the flow")
    _add_common_flags(p)
    p.add_argument("--omega", type=float, help="spectral shift of the surface")
    p.add_argument("--trajectories", type=int, dest="n_trajectories")
    p.add_argument("--t-trajectory", type=float, dest="t_trajectory")
    p.add_argument("--flow-tol", type=float, dest="flow_tol")

    p = sub.add_parser("resolvent", help="vanishing-absorption ladder at one omega")
    _add_common_flags(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--epsilons", type=float, nargs="+")
    p.add_argument("--rtol", type=float)

    p = sub.add_parser("sweep", help="ladders across the spectral window")
    _add_common_flags(p)
    p.add_argument("--omegas", type=float, nargs="+")
    p.add_argument("--epsilons", type=float, nargs="+")
    p.add_argument("--rtol", type=float)

    p = sub.add_parser("control-constant", help="empirical control-inequality ratios")
    _add_common_flags(p)
    p.add_argument("--s", type=float, dest="s")
    p.add_argument("--omegas", type=float, nargs="+")
    p.add_argument("--epsilons", type=float, nargs="+")
    p.add_argument("--samples", type=int)
    p.add_argument("--cutoff-level", type=float, dest="cutoff_level")

    p = sub.add_parser("check-cc", help="does the damping control the cycles?")
    _add_common_flags(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--sign", choices=("CC_plus", "CC_minus"))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    scenario = command.replace("-", "_")
    config_path = args.pop("config", None)
    try:
        file_table = parse_config_file(config_path) if config_path else {}
        if "grid" in args and args["grid"] is not None:
            args["grid"] = parse_grid(args["grid"])
        config = merge_config(scenario, file_table, args)
        manifest = run(config)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (InstabilityError, RungFailureError, StepSizeCollapseError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    print(f"wrote {len(manifest.files) + 1} files to {config.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
