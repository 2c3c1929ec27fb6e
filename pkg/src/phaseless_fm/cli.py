"""Command-line front end.

Verbs::

    phaseless-fm simulate        --config scene.toml --out-dir out/
    phaseless-fm invert          --data out/phaseless.csv --out-dir out/
    phaseless-fm invert-farfield --data out/farfield.csv --out-dir out/
    phaseless-fm validate        --suite reciprocity --out-dir out/

Exit status: 0 success, 2 configuration or input error, 3 numerical
failure, 4 a validation suite did not pass.

Config files are TOML::

    k = 10.0
    R = 10.0
    L = 150
    delta = 0.1
    seed = 2024
    M = 100
    cutoff = 1e-12
    farfield = false          # also write the far-field matrix
    grid = {xmin = -6, xmax = 6, ymin = -6, ymax = 6, nx = 101, ny = 101}

    [[obstacle]]
    kind = "kite"             # circle | kite | peanut | rounded_square | rounded_triangle
    center = [0.0, 0.0]
    condition = "impedance"   # dirichlet | neumann | impedance | medium
    rho = ["5+5i", "2.5+2.5i"]  # a + b sin t; a single value means constant
    # n = "2+1.5i"            # refractive index for condition = "medium"
    # quadrature_count = 256

Complex values may be numbers, [re, im] pairs or strings such as "5+5i";
``rho`` as a two-element list always means (a, b), so a complex constant
is written as a string or as [[re, im], 0].
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .forward import (
    Dirichlet,
    FarFieldMatrix,
    Impedance,
    Medium,
    Obstacle,
    PhaselessDataset,
    ScatteringScene,
    SceneError,
    SolverError,
    analytic_circle_farfield,
    make_solver,
    simulate_farfield,
    simulate_phaseless,
    suggested_quadrature_count,
)
from .geometry import CURVE_KINDS, BoundaryCurve, GeometryError, SamplingGrid, uniform_directions
from .inversion import DEFAULT_CUTOFF, DEFAULT_M, reconstruct, reconstruct_from_farfield
from .io import DataFormatError, read_dataset, write_dataset, write_indicator, write_manifest, write_pgm
from .noise import GENERATOR_ID
from .operators import OperatorError
from .validation import (
    check_farfield_asymptotics,
    check_operator_asymptotics,
    check_reciprocity,
    check_sharp_asymptotics,
    check_truncation_decay,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

SUITES = ("reciprocity", "farfield-asymptotics", "operator-asymptotics", "sharp-asymptotics", "truncation", "oracle")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def parse_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"{where}: cannot read {value!r} as a complex number")


@dataclass
class ObstacleSpec:
    kind: str
    center: tuple = (0.0, 0.0)
    condition: str = "dirichlet"
    rho: tuple = (0j, 0j)
    n: complex = 1.0
    quadrature_count: Optional[int] = None


@dataclass
class RunConfig:
    """Parsed configuration with defaults applied."""

    k: float = 1.0
    obstacles: list = field(default_factory=list)
    R: float = 10.0
    L: int = 64
    M: int = DEFAULT_M
    delta: float = 0.0
    seed: Optional[int] = None
    cutoff: float = DEFAULT_CUTOFF
    grid: SamplingGrid = field(default_factory=SamplingGrid)
    medium_grid: int = 64
    farfield: bool = False
    source: Optional[str] = None
    given: frozenset = frozenset()

    def scene(self) -> ScatteringScene:
        obstacles = []
        for i, spec in enumerate(self.obstacles):
            where = f"obstacle[{i}]"
            try:
                curve = BoundaryCurve(spec.kind, tuple(spec.center))
                count = spec.quadrature_count or suggested_quadrature_count(curve, self.k)
                curve = BoundaryCurve(spec.kind, tuple(spec.center), count)
            except GeometryError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            if spec.condition == "dirichlet":
                cond = Dirichlet()
            elif spec.condition in ("impedance", "neumann"):
                cond = Impedance(*spec.rho)
            else:
                cond = Medium(spec.n)
            obstacles.append(Obstacle(curve, cond))
        try:
            return ScatteringScene(self.k, obstacles, self.medium_grid)
        except SceneError as exc:
            raise ConfigError(f"scene: {exc}") from None

    def record(self) -> dict:
        out = {key: getattr(self, key) for key in ("k", "R", "L", "M", "delta", "seed", "cutoff", "medium_grid")}
        out["grid"] = asdict(self.grid)
        out["obstacles"] = [asdict(o) for o in self.obstacles]
        out["config_file"] = self.source
        return out


def _number(table, key, kind, where, default, check=None):
    if key not in table:
        return default
    value = table[key]
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        ok = ok and float(value).is_integer()
    if not ok:
        raise ConfigError(f"{where}{key}: expected {'an integer' if kind is int else 'a number'}, got {value!r}")
    value = kind(value)
    if check and not check(value):
        raise ConfigError(f"{where}{key}: value {value!r} out of range")
    return value


_OBSTACLE_KEYS = {"kind", "center", "condition", "rho", "n", "quadrature_count"}
_TOP_KEYS = {"k", "R", "L", "M", "delta", "seed", "cutoff", "grid", "medium_grid", "farfield", "obstacle"}


def _parse_obstacle(table, i) -> ObstacleSpec:
    where = f"obstacle[{i}]."
    unknown = set(table) - _OBSTACLE_KEYS
    if unknown:
        raise ConfigError(f"{where}{sorted(unknown)[0]}: unknown key")
    kind = table.get("kind")
    if kind not in CURVE_KINDS:
        raise ConfigError(f"{where}kind: expected one of {', '.join(CURVE_KINDS)}, got {kind!r}")
    center = table.get("center", [0.0, 0.0])
    if not (isinstance(center, list) and len(center) == 2 and all(isinstance(c, (int, float)) for c in center)):
        raise ConfigError(f"{where}center: expected [x, y]")
    condition = table.get("condition", "dirichlet")
    if condition not in ("dirichlet", "neumann", "impedance", "medium"):
        raise ConfigError(f"{where}condition: unknown condition {condition!r}")
    rho = (0j, 0j)
    if condition == "impedance":
        raw = table.get("rho", 0.0)
        # a two-element list is (a, b) of rho(t) = a + b sin t
        if isinstance(raw, list) and len(raw) == 2:
            rho = (parse_complex(raw[0], where + "rho[0]"), parse_complex(raw[1], where + "rho[1]"))
        else:
            rho = (parse_complex(raw, where + "rho"), 0j)
    elif "rho" in table:
        raise ConfigError(f"{where}rho: only allowed for condition = 'impedance'")
    n = 1.0 + 0j
    if condition == "medium":
        n = parse_complex(table.get("n", 1.0), where + "n")
    elif "n" in table:
        raise ConfigError(f"{where}n: only allowed for condition = 'medium'")
    count = _number(table, "quadrature_count", int, where, None, lambda v: v >= 8 and v % 2 == 0)
    return ObstacleSpec(kind, (float(center[0]), float(center[1])), condition, rho, n, count)


def _parse_grid(value, where="grid") -> SamplingGrid:
    if isinstance(value, dict):
        base = asdict(SamplingGrid())
        unknown = set(value) - set(base)
        if unknown:
            raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown key")
        for key in base:
            kind = int if key in ("nx", "ny") else float
            base[key] = _number(value, key, kind, where + ".", base[key])
        try:
            return SamplingGrid(**base)
        except GeometryError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: expected a table")


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    name = source or "<config>"
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{name}: {sorted(unknown)[0]}: unknown key")
    cfg = RunConfig(source=source, given=frozenset(raw))
    cfg.k = _number(raw, "k", float, "", cfg.k, lambda v: v > 0)
    cfg.R = _number(raw, "R", float, "", cfg.R, lambda v: v > 0)
    cfg.L = _number(raw, "L", int, "", cfg.L, lambda v: v >= 2 and v % 2 == 0)
    cfg.M = _number(raw, "M", int, "", cfg.M, lambda v: v >= 0)
    cfg.delta = _number(raw, "delta", float, "", cfg.delta, lambda v: 0 <= v <= 1)
    cfg.seed = _number(raw, "seed", int, "", cfg.seed, lambda v: 0 <= v < 2**64)
    cfg.cutoff = _number(raw, "cutoff", float, "", cfg.cutoff, lambda v: 0 <= v < 1)
    cfg.medium_grid = _number(raw, "medium_grid", int, "", cfg.medium_grid, lambda v: v >= 4)
    if "farfield" in raw:
        if not isinstance(raw["farfield"], bool):
            raise ConfigError(f"{name}: farfield: expected true or false")
        cfg.farfield = raw["farfield"]
    if "grid" in raw:
        cfg.grid = _parse_grid(raw["grid"])
    obstacles = raw.get("obstacle", [])
    if not isinstance(obstacles, list):
        raise ConfigError(f"{name}: obstacle: use [[obstacle]] tables")
    cfg.obstacles = [_parse_obstacle(t, i) for i, t in enumerate(obstacles)]
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def parse_grid_flag(text: str) -> SamplingGrid:
    """``N``, ``NX,NY`` or ``XMIN,XMAX,YMIN,YMAX,NX,NY``."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return SamplingGrid(nx=int(parts[0]), ny=int(parts[0]))
        if len(parts) == 2:
            return SamplingGrid(nx=int(parts[0]), ny=int(parts[1]))
        if len(parts) == 6:
            b = [float(p) for p in parts[:4]]
            return SamplingGrid(*b, int(parts[4]), int(parts[5]))
    except (ValueError, GeometryError) as exc:
        raise ConfigError(f"--grid: {exc}") from None
    raise ConfigError("--grid: expected N, NX,NY or XMIN,XMAX,YMIN,YMAX,NX,NY")


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "delta", None) is not None:
        if not 0 <= args.delta <= 1:
            raise ConfigError("--delta: must lie in [0, 1]")
        cfg.delta = args.delta
    if getattr(args, "grid", None):
        cfg.grid = parse_grid_flag(args.grid)
    if getattr(args, "cutoff", None) is not None:
        if not 0 <= args.cutoff < 1:
            raise ConfigError("--cutoff: must lie in [0, 1)")
        cfg.cutoff = args.cutoff
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(command, params, outputs, extra=None):
    record = {
        "command": command,
        "package_version": __version__,
        "generator": GENERATOR_ID,
        "parameters": params,
        "outputs": sorted(str(p.name) for p in outputs),
    }
    record.update(extra or {})
    return record


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigError("simulate needs --config")
    cfg = _apply_flags(load_config(args.config), args)
    if cfg.delta > 0 and cfg.seed is None:
        raise ConfigError("seed: a seed is required when delta > 0")
    scene = cfg.scene()
    out = _out_dir(args)
    solver = make_solver(scene)
    seed = cfg.seed if cfg.delta > 0 else None
    try:
        data = simulate_phaseless(scene, cfg.R, cfg.L, cfg.delta, seed, solver=solver)
    except SceneError as exc:
        raise ConfigError(f"scene: {exc}") from None
    outputs = [write_dataset(out / "phaseless.csv", data)]
    if cfg.farfield:
        outputs.append(write_dataset(out / "farfield.csv", simulate_farfield(scene, cfg.L, solver)))
    write_manifest(out / "simulate_manifest.json", _manifest("simulate", cfg.record(), outputs))
    return EXIT_OK


def _inversion_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return _apply_flags(cfg, args)


def _check_L(cfg, data):
    if "L" in cfg.given and cfg.L != data.L:
        raise ConfigError(f"L: config says {cfg.L} but the data file has L = {data.L}")


def _write_indicator(out, stem, field_, command, cfg, args, data):
    outputs = [write_indicator(out / f"{stem}.csv", field_), write_pgm(out / f"{stem}.pgm", field_.values)]
    params = {"M": cfg.M, "cutoff": cfg.cutoff, "grid": asdict(cfg.grid), "config_file": cfg.source}
    data_info = {"file": str(args.data), "k": data.k, "L": data.L}
    if isinstance(data, PhaselessDataset):
        data_info.update(R=data.R, noise_delta=data.noise_delta, noise_seed=data.noise_seed, generator=data.generator)
    extra = {"data": data_info, "raw_max": field_.raw_max, "argmax": field_.argmax_point.tolist()}
    write_manifest(out / f"{stem}_manifest.json", _manifest(command, params, outputs, extra))


def cmd_invert(args) -> int:
    # the scene in the config, if any, is never consulted here
    cfg = _inversion_config(args)
    data = read_dataset(args.data)
    if not isinstance(data, PhaselessDataset):
        raise DataFormatError(f"{args.data}: expected a phaseless dataset, found far-field data")
    _check_L(cfg, data)
    field_ = reconstruct(data, cfg.grid, cfg.M, cfg.cutoff)
    _write_indicator(_out_dir(args), "indicator", field_, "invert", cfg, args, data)
    return EXIT_OK


def cmd_invert_farfield(args) -> int:
    cfg = _inversion_config(args)
    data = read_dataset(args.data)
    if not isinstance(data, FarFieldMatrix):
        raise DataFormatError(f"{args.data}: expected a far-field dataset, found phaseless data")
    _check_L(cfg, data)
    field_ = reconstruct_from_farfield(data, cfg.grid, cfg.M, cfg.cutoff)
    _write_indicator(_out_dir(args), "indicator_farfield", field_, "invert-farfield", cfg, args, data)
    return EXIT_OK


# validation suites: defaults reproduce the reference configurations and are
# overridden by k, L, M and the obstacles of a --config file


def _suite_scene(cfg, default_kind, default_k):
    if cfg is not None and cfg.obstacles:
        return cfg.scene()
    k = cfg.k if cfg is not None and "k" in cfg.given else default_k
    curve = BoundaryCurve(default_kind)
    return ScatteringScene(k, [Obstacle(BoundaryCurve(default_kind, quadrature_count=suggested_quadrature_count(curve, k)))])


def _given(cfg, key, default):
    return getattr(cfg, key) if cfg is not None and key in cfg.given else default


def _suite_reciprocity(cfg):
    scene = _suite_scene(cfg, "kite", 10.0)
    L = _given(cfg, "L", 128)
    dev = check_reciprocity(simulate_farfield(scene, L))
    ok = dev <= 1e-6
    text = f"check: reciprocity\nL: {L}\nmax_deviation: {dev:.17g}\ntolerance: 1e-06\npassed: {str(ok).lower()}\n"
    return ok, text, f"L,max_deviation\n{L},{dev:.17g}\n"


def _report(rep, extra_ok=True, extra_text=""):
    return rep.passed and extra_ok, rep.to_text() + extra_text, rep.to_csv()


def _suite_farfield(cfg):
    scene = _suite_scene(cfg, "circle", 5.0)
    return _report(check_farfield_asymptotics(scene, (1.0, 0.0), [50, 100, 200, 400]))


def _suite_operator(cfg, sharp_version):
    scene = _suite_scene(cfg, "peanut", 5.0)
    L, M = _given(cfg, "L", 128), _given(cfg, "M", 100)
    check = check_sharp_asymptotics if sharp_version else check_operator_asymptotics
    return _report(check(scene, L, M, [20, 40, 80, 160]))


def _suite_truncation(cfg):
    k = _given(cfg, "k", 10.0)
    rep = check_truncation_decay(k, (6.0, 0.0), 256, [60, 80, 100])
    last = rep.errors[-1]
    return _report(rep, last <= 1e-4, f"residual_at_max_M: {last:.17g}\nresidual_tolerance: 1e-04\n")


def _suite_oracle(cfg):
    xh = uniform_directions(64).vectors
    d = np.array([1.0, 0.0])
    rows, ok = [], True
    cases = [
        ("dirichlet", 5.0, Dirichlet(), 1.0, 1e-8),
        ("neumann", 5.0, Impedance(), 1.0, 1e-8),
        ("transmission", 2.0, Medium(2 + 1.5j), 2 + 1.5j, 1e-2),
    ]
    for name, k, cond, n_index, tol in cases:
        scene = ScatteringScene(k, [Obstacle(BoundaryCurve("circle", quadrature_count=256), cond)], medium_grid=64)
        solver = make_solver(scene)
        ff = solver.far_field(xh, solver.solve(d))[:, 0]
        exact = analytic_circle_farfield(k, 1.0, name, xh, d, n_index)
        err = float(np.max(np.abs(ff - exact) / np.abs(exact)))
        ok = ok and err <= tol
        rows.append((name, err, tol))
    text = "check: oracle\n" + "".join(f"{n}_max_relative_error: {e:.17g}\n{n}_tolerance: {t:g}\n" for n, e, t in rows)
    text += f"passed: {str(ok).lower()}\n"
    csv_text = "case,max_relative_error,tolerance\n" + "".join(f"{n},{e:.17g},{t:g}\n" for n, e, t in rows)
    return ok, text, csv_text


def run_suite(name: str, cfg: Optional[RunConfig] = None):
    """(passed, report text, report csv) for a validation suite."""
    if name == "reciprocity":
        return _suite_reciprocity(cfg)
    if name == "farfield-asymptotics":
        return _suite_farfield(cfg)
    if name == "operator-asymptotics":
        return _suite_operator(cfg, False)
    if name == "sharp-asymptotics":
        return _suite_operator(cfg, True)
    if name == "truncation":
        return _suite_truncation(cfg)
    if name == "oracle":
        return _suite_oracle(cfg)
    raise ConfigError(f"unknown suite {name!r}")


def cmd_validate(args) -> int:
    cfg = load_config(args.config) if args.config else None
    out = _out_dir(args)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        passed, text, csv_text = run_suite(args.suite, cfg)
    stem = f"validate_{args.suite}"
    (out / f"{stem}.txt").write_text(text)
    (out / f"{stem}.csv").write_text(csv_text)
    write_manifest(out / f"{stem}_manifest.json", {
        "command": "validate", "suite": args.suite, "passed": passed, "package_version": __version__,
        "config_file": args.config, "elapsed_seconds": round(time.perf_counter() - start, 3),
        "warnings": sorted({str(w.message) for w in caught}),
    })
    sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseless-fm", description="Phaseless factorization method for 2D obstacles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out-dir", default=".", help="output directory (created if missing)")
        if data:
            p.add_argument("--data", required=True, help="dataset CSV")
            p.add_argument("--grid", help="sampling grid: N, NX,NY or XMIN,XMAX,YMIN,YMAX,NX,NY")
            p.add_argument("--cutoff", type=float, help="relative eigenvalue cutoff")

    p = sub.add_parser("simulate", help="synthesize phaseless data for a scene")
    common(p)
    p.add_argument("--seed", type=int, help="noise seed")
    p.add_argument("--delta", type=float, help="relative noise level")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("invert", help="indicator from phaseless data")
    common(p, data=True)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("invert-farfield", help="reference indicator from far-field data")
    common(p, data=True)
    p.set_defaults(func=cmd_invert_farfield)

    p = sub.add_parser("validate", help="run a numerical validation suite")
    common(p)
    p.add_argument("--suite", required=True, choices=SUITES)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, OperatorError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
