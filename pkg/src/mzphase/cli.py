"""Command-line front end: ``mzphase <command> [--config FILE] [--section.key VALUE ...]``.

Configuration is a sectioned ``key = value`` file; every key can be
overridden with a flag of the same dotted name.  Results go to stdout or
``--output`` as CSV (12 significant digits, LF endings) or JSON.

Exit codes: 0 success, 1 validation failure, 2 domain error or bad
input, 3 numerical-guard error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .bdg import ModelParams, ParamPoint, Sector
from .errors import DomainError, NumericalGuardError
from .holonomy import ParamPath, curvature, path_phase, restrict_sampler, two_level_sampler
from .junction import derived_params, sampler
from .lattice import LatticeSpec, build_lattice, lattice_sampler
from .nonadiabatic import Schedule, evolve, relative_phases

EXIT_OK, EXIT_FAILED, EXIT_DOMAIN, EXIT_GUARD = 0, 1, 2, 3


# configuration ------------------------------------------------------------


@dataclass(frozen=True)
class ModelSection:
    mu_fi: float = 0.0
    mu_sc: float = 0.0
    m: float = 1.0
    delta: float = 1.0


@dataclass(frozen=True)
class PathSection:
    theta: float = math.pi / 2
    alpha_start: float = 0.0
    alpha_end: float = 2 * math.pi
    steps: int = 2000
    closed: bool = True


@dataclass(frozen=True)
class LatticeSection:
    n_sites: int = 400
    spacing: float = 0.1
    wilson_r: float = 1.0


@dataclass(frozen=True)
class CurvatureSection:
    theta_min: float = 0.6
    theta_max: float = math.pi - 0.6
    alpha_min: float = 0.0
    alpha_max: float = 2 * math.pi
    n_theta: int = 5
    n_alpha: int = 5
    delta: float = 1e-3


@dataclass(frozen=True)
class EvolveSection:
    total_time: float = 800.0
    steps: int = 1600
    n_sites: int = 64
    spacing: float = 0.5


@dataclass(frozen=True)
class OutputSection:
    format: str = "csv"
    path: str = ""


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    path: PathSection = field(default_factory=PathSection)
    lattice: LatticeSection = field(default_factory=LatticeSection)
    curvature: CurvatureSection = field(default_factory=CurvatureSection)
    evolve: EvolveSection = field(default_factory=EvolveSection)
    output: OutputSection = field(default_factory=OutputSection)

    def validate(self) -> "RunConfig":
        for sec in fields(self):
            for f in fields(getattr(self, sec.name)):
                val = getattr(getattr(self, sec.name), f.name)
                if isinstance(val, float) and not math.isfinite(val):
                    raise ValueError(f"{sec.name}.{f.name} must be finite")
        for name in ("path.steps", "evolve.steps"):
            if _get(self, name) < 4:
                raise ValueError(f"{name} must be at least 4")
        if self.output.format not in ("csv", "json"):
            raise ValueError("output.format must be csv or json")
        return self

    def params(self) -> ModelParams:
        m = self.model
        return ModelParams(mu_FI=m.mu_fi, mu_SC=m.mu_sc, m=m.m, delta=m.delta)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec in fields(self):
            cp[sec.name] = {k: _fmt_value(v) for k, v in asdict(getattr(self, sec.name)).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        return cls().with_overrides({f"{s}.{k}": v for s in cp.sections() for k, v in cp[s].items()})

    def with_overrides(self, values: dict[str, str]) -> "RunConfig":
        cfg = self
        for dotted, raw in values.items():
            sec, _, key = dotted.partition(".")
            if sec not in SECTION_TYPES or key not in SECTION_KEYS[sec]:
                raise ValueError(f"unknown configuration key {dotted!r}")
            current = getattr(cfg, sec)
            typ = type(getattr(SECTION_TYPES[sec](), key))
            cfg = replace(cfg, **{sec: replace(current, **{key: _parse_value(typ, raw, dotted)})})
        return cfg


SECTION_TYPES = {f.name: f.default_factory for f in fields(RunConfig)}
SECTION_KEYS = {name: [f.name for f in fields(t)] for name, t in SECTION_TYPES.items()}
ANGLE_KEYS = {"path.theta", "path.alpha_start", "path.alpha_end", "curvature.theta_min", "curvature.theta_max", "curvature.alpha_min", "curvature.alpha_max"}


def _get(cfg: RunConfig, dotted: str):
    sec, _, key = dotted.partition(".")
    return getattr(getattr(cfg, sec), key)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(typ, raw, name):
    if not isinstance(raw, str):
        return typ(raw)
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ValueError(f"{name}: cannot parse {raw!r} as {typ.__name__}") from None
    return raw


# output -------------------------------------------------------------------


def fmt_num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _json_num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass
class RunReport:
    command: str
    config: RunConfig
    columns: list[str]
    rows: list[list]
    summary: dict
    wall_time: float = 0.0
    exit_status: int = EXIT_OK

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(fmt_num(v) for v in row) for row in self.rows]
        if self.summary:
            lines.append("# " + " ".join(f"{k}={fmt_num(v)}" for k, v in self.summary.items()))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "config": self.config.to_ini(),
            "columns": self.columns,
            "rows": [[_json_num(v) for v in row] for row in self.rows],
            "summary": {k: _json_num(v) for k, v in self.summary.items()},
            "wall_time": self.wall_time,
            "exit_status": self.exit_status,
        }
        return json.dumps(doc, indent=2) + "\n"


# commands -----------------------------------------------------------------


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MZM_THREADS", "1")))
    except ValueError:
        return 1


def _loop_path(cfg: RunConfig) -> ParamPath:
    p = cfg.path
    n = p.steps
    span = p.alpha_end - p.alpha_start
    if p.closed:
        pts = [ParamPoint(p.theta, p.alpha_start + span * k / n) for k in range(n)]
        return ParamPath(tuple(pts), closed=True)
    return ParamPath.segment(ParamPoint(p.theta, p.alpha_start), ParamPoint(p.theta, p.alpha_end), n)


def _state_sampler(cfg: RunConfig, args):
    if args.fixture == "two-level":
        return two_level_sampler(), (Sector.ELECTRON,)
    params = cfg.params()
    if args.backend == "lattice":
        lat = cfg.lattice
        base = lattice_sampler(params, LatticeSpec(lat.n_sites, lat.spacing, lat.wilson_r))
    else:
        base = sampler(params)
    if args.region:
        base = restrict_sampler(base, args.region)
    return base, (Sector.ELECTRON, Sector.HOLE, Sector.FULL)


def cmd_derive_params(cfg: RunConfig, args) -> RunReport:
    d = derived_params(cfg.params(), cfg.path.theta).as_dict()
    return RunReport("derive-params", cfg, list(d), [list(d.values())], {})


def cmd_loop_phase(cfg: RunConfig, args) -> RunReport:
    path = _loop_path(cfg)
    samp, sectors = _state_sampler(cfg, args)
    res = path_phase(samp, path, sectors)
    nan = np.full(len(path.links()), math.nan)
    cum = [res.cumulative.get(s, nan) for s in (Sector.ELECTRON, Sector.HOLE, Sector.FULL)]
    running_min = np.minimum.accumulate(res.step_diagnostics)
    rows = []
    for k, (_, j) in enumerate(path.links()):
        alpha = path.points[j].alpha if j != 0 else path.points[0].alpha + (cfg.path.alpha_end - cfg.path.alpha_start)
        rows.append([alpha, cum[0][k], cum[1][k], cum[2][k], running_min[k]])
    summary = {"gamma_u": res.gamma_u, "gamma_v": res.gamma_v, "gamma_total": res.gamma_total, "overlap_min": res.overlap_min}
    return RunReport("loop-phase", cfg, ["alpha", "gamma_u_accum", "gamma_v_accum", "gamma_total_accum", "overlap_min"], rows, summary)


def cmd_curvature_map(cfg: RunConfig, args) -> RunReport:
    c = cfg.curvature
    cols = ["theta", "alpha", "B_u", "B_v", "B_total"]
    if c.theta_max == c.theta_min or c.alpha_max == c.alpha_min:
        return RunReport("curvature-map", cfg, cols, [], {"points": 0})
    samp, sectors = _state_sampler(cfg, args)
    ths = np.linspace(c.theta_min, c.theta_max, max(c.n_theta, 1))
    als = np.linspace(c.alpha_min, c.alpha_max, max(c.n_alpha, 1))
    grid = [(t, a) for t in ths for a in als]

    def one(ta):
        B = curvature(samp, ParamPoint(*ta), delta=c.delta, sectors=sectors)
        return [ta[0], ta[1]] + [B.get(s, math.nan) for s in (Sector.ELECTRON, Sector.HOLE, Sector.FULL)]

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(one, grid))
    worst = max(abs(r[2]) for r in rows)
    return RunReport("curvature-map", cfg, cols, rows, {"points": len(rows), "max_abs_B_u": worst})


def cmd_evolve(cfg: RunConfig, args) -> RunReport:
    e, p = cfg.evolve, cfg.path
    params = cfg.params()
    spec = LatticeSpec(e.n_sites, e.spacing, cfg.lattice.wilson_r)
    span = p.alpha_end - p.alpha_start
    sched = Schedule(e.total_time, e.steps, lambda s: ParamPoint(p.theta, p.alpha_start + span * s))
    psi0 = lattice_sampler(params, spec)(sched.point(0.0)).values.ravel()
    psi0 = psi0 / np.linalg.norm(psi0)
    rows = []

    def observe(t, psi):
        total, pu, pv, mag = relative_phases(psi0, psi)
        rows.append([t, float(np.linalg.norm(psi)), pu, pv, mag])

    rep = evolve(lambda t: build_lattice(params, sched.point(t), spec), psi0, sched, observer=observe)
    return RunReport("evolve", cfg, ["t", "norm", "phi_u_running", "phi_v_running", "overlap_mag"], rows, rep.as_dict())


def cmd_validate(cfg: RunConfig, args) -> RunReport:
    from .validation import CONTROLS, CRITERIA, Suite

    keys = [k.strip() for k in args.criteria.split(",")] if args.criteria else list(CRITERIA + CONTROLS)
    suite = Suite(cfg.params())
    rows = []
    for key in keys:
        res = suite.run(key)
        print(res.line(), file=sys.stderr, flush=True)
        rows.append([res.key, "PASS" if res.passed else "FAIL", res.title, res.detail.replace(",", ";"), res.elapsed])
    failed = sum(r[1] == "FAIL" for r in rows)
    report = RunReport("validate", cfg, ["criterion", "status", "title", "detail", "seconds"], rows, {"checks": len(rows), "failed": failed})
    report.exit_status = EXIT_FAILED if failed else EXIT_OK
    return report


COMMANDS = {
    "derive-params": cmd_derive_params,
    "loop-phase": cmd_loop_phase,
    "curvature-map": cmd_curvature_map,
    "evolve": cmd_evolve,
    "validate": cmd_validate,
}


# entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mzphase", description="Geometric phases of interface Majorana zero modes.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="sectioned key=value configuration file")
    ap.add_argument("--backend", choices=("analytic", "lattice"), default="analytic")
    ap.add_argument("--region", choices=("fi", "sc"), help="restrict spinors to one side of the interface")
    ap.add_argument("--fixture", choices=("two-level",), help="use a calibration state instead of the junction")
    ap.add_argument("--output", metavar="PATH", help="write results here instead of stdout")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--degrees", action="store_true", help="angles in the config and flags are in degrees")
    ap.add_argument("--criteria", help="validate: comma-separated subset, e.g. 1,3,doubler")
    ap.add_argument("--echo-config", action="store_true", help="print the effective configuration and exit")
    group = ap.add_argument_group("configuration overrides")
    for sec, keys in SECTION_KEYS.items():
        for key in keys:
            group.add_argument(f"--{sec}.{key}", dest=f"{sec}.{key}", metavar="VALUE", default=None)
    return ap


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    explicit = set()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        overrides = {f"{s}.{k}": v for s in cp.sections() for k, v in cp[s].items()}
        cfg = cfg.with_overrides(overrides)
        explicit |= set(overrides)
    flags = {k: v for k, v in vars(args).items() if "." in k and v is not None}
    cfg = cfg.with_overrides(flags)
    explicit |= set(flags)
    if args.format:
        cfg = cfg.with_overrides({"output.format": args.format})
    if args.output:
        cfg = cfg.with_overrides({"output.path": args.output})
    if args.degrees:
        cfg = cfg.with_overrides({k: repr(math.radians(_get(cfg, k))) for k in ANGLE_KEYS & explicit})
    return cfg.validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"mzphase: configuration error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.echo_config:
        sys.stdout.write(cfg.to_ini())
        return EXIT_OK
    start = time.perf_counter()
    try:
        report = COMMANDS[args.command](cfg, args)
    except NumericalGuardError as exc:
        print(f"mzphase: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (DomainError, ValueError) as exc:
        print(f"mzphase: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    report.wall_time = time.perf_counter() - start
    text = report.to_json() if cfg.output.format == "json" else report.to_csv()
    if cfg.output.path:
        with open(cfg.output.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# wall_time={report.wall_time:.3f}s", file=sys.stderr)
    return report.exit_status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
