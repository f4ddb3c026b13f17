"""
Command line entry point: ``fcy <command> --config <path> [--out <dir>] [--seed <u64>]``.

Exit codes: 0 success, 2 configuration error, 3 solve failure, 4 check failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import glob
import json
import logging
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, catalog
from .assembly import Problem, SolveResult, manufacture_f, normalize_f
from .continuation import continuity_solve
from .forms import PositivityError
from .linearized import LinearState
from .torus import GridSpec, read_field, trig_field, write_field
from .verification import checks

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("fcy")

COMMANDS = ("solve", "manufacture", "selftest", "equivalence", "report")
EXIT_OK, EXIT_CONFIG, EXIT_SOLVE, EXIT_CHECK = 0, 2, 3, 4
HISTORY_FIELDS = ("t", "iter", "residual_sup", "min_eig", "constant")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "solve"
    n: int = 2
    N: int = 16
    base: str = "identity"
    base_diag: list = field(default_factory=list)
    base_expr: str = "cos_x1"
    base_scale: float = 0.0
    f: str = "zero"
    f_amplitude: float = 0.0
    f_kmax: int = 2
    f_file: str = ""
    u_star: str = "cos_x1"
    u_star_amplitude: float = 0.05
    hessian: str = "spectral"
    psi: str = "cos_x1"
    psi_scale: float = 0.01
    newton_tol: float = 1e-10
    max_newton: int = 30
    path_steps: int = 1
    seed: int = 0
    out: str = "fcy-out"
    inputs: list = field(default_factory=list)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        try:
            GridSpec(self.n, self.N)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.base not in ("identity", "diagonal", "potential"):
            raise ConfigError("base must be one of identity, diagonal, potential")
        if self.base == "diagonal" and (len(self.base_diag) != self.n or min(self.base_diag) <= 0):
            raise ConfigError(f"base_diag needs {self.n} positive entries")
        for key in ("base_expr", "psi", "u_star"):
            if getattr(self, key) not in catalog.NAMES:
                raise ConfigError(f"{key}={getattr(self, key)!r} not in {catalog.NAMES}")
        if self.f not in catalog.NAMES + ("file",):
            raise ConfigError(f"f={self.f!r} not in {catalog.NAMES + ('file',)}")
        if self.f == "file" and not self.f_file:
            raise ConfigError("f = 'file' requires f_file")
        if self.hessian not in ("spectral", "exact"):
            raise ConfigError("hessian must be 'spectral' or 'exact'")
        for key in ("base_scale", "f_amplitude", "u_star_amplitude", "psi_scale"):
            value = getattr(self, key)
            if not math.isfinite(value) or abs(value) > 10:
                raise ConfigError(f"{key}={value} outside [-10, 10]")
        if not 0 < self.newton_tol < 1:
            raise ConfigError("newton_tol must be in (0, 1)")
        if not 1 <= self.max_newton <= 200:
            raise ConfigError("max_newton must be in 1..200")
        if not 1 <= self.path_steps <= 10000:
            raise ConfigError("path_steps must be in 1..10000")
        if not 0 <= self.f_kmax <= 8:
            raise ConfigError("f_kmax must be in 0..8")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self


def load_config(path, command: str, overrides: dict | None = None) -> RunConfig:
    """Parse a flat ``key = value`` (TOML) file into a validated :class:`RunConfig`."""
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - set(known) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {}
    for key, value in raw.items():
        if key == "command":
            continue
        default = getattr(RunConfig(), key)
        if isinstance(value, dict):
            raise ConfigError(f"{key}: nested tables are not supported")
        try:
            if isinstance(default, bool) or isinstance(default, str):
                if not isinstance(value, str):
                    raise TypeError
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
            elif isinstance(default, float):
                if isinstance(value, bool):
                    raise TypeError
                value = float(value)
            elif isinstance(default, list) and not isinstance(value, list):
                raise TypeError
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}") from None
        values[key] = value
    return RunConfig(command=command, **values).validate()


# -- problem construction ----------------------------------------------------


def build_problem(cfg: RunConfig) -> Problem:
    grid = GridSpec(cfg.n, cfg.N)
    kwargs = dict(path_steps=cfg.path_steps, newton_tol=cfg.newton_tol, max_newton=cfg.max_newton)
    if cfg.base == "potential":
        psi = catalog.expression(cfg.base_expr, grid, 1.0, seed=cfg.seed)
        problem = Problem.potential(grid, psi, cfg.base_scale, **kwargs)
    else:
        g0 = np.diag(cfg.base_diag) if cfg.base == "diagonal" else None
        problem = Problem.constant(grid, g0, **kwargs)
    if cfg.f == "file":
        f_raw = read_field(cfg.f_file)
        if f_raw.shape != grid.shape or np.iscomplexobj(f_raw):
            raise ConfigError(f"f_file must hold a real field on grid n={cfg.n} N={cfg.N}")
    elif cfg.f == "random":
        f_raw = trig_field(grid, np.random.default_rng(cfg.seed), kmax=max(cfg.f_kmax, 1), amplitude=cfg.f_amplitude)
    else:
        f_raw = catalog.expression(cfg.f, grid, cfg.f_amplitude)
    return problem.with_data(normalize_f(f_raw, problem))


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


def versions():
    return dict(fcy=__version__, numpy=np.__version__, scipy=scipy.__version__,
                python=platform.python_version())


def write_record(out: Path, cfg: RunConfig, payload: dict) -> Path:
    record = dict(command=cfg.command, config=dataclasses.asdict(cfg), versions=versions(), **payload)
    record["created"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    path = out / "result.json"
    path.write_text(json.dumps(_finite(record), indent=2, sort_keys=True) + "\n")
    return path


def write_history(path: Path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: repr(float(row[k])) if k != "iter" else int(row[k]) for k in HISTORY_FIELDS})


def _result_payload(result: SolveResult) -> dict:
    return dict(
        status="converged" if result.converged else "failed",
        constant=result.constant,
        t=result.t,
        message=result.message,
        diagnostics=result.diagnostics,
    )


# -- commands ----------------------------------------------------------------


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    problem = build_problem(cfg)
    result = continuity_solve(problem)
    write_field(out / "u", result.u)
    write_history(out / "convergence.csv", result.history)
    payload = _result_payload(result)
    payload["max_principle"] = dataclasses.asdict(checks.check_max_principle(result, problem)) if result.converged else None
    payload["files"] = dict(u="u.bin", convergence="convergence.csv")
    write_record(out, cfg, payload)
    print(f"{payload['status']}: constant={result.constant:.12g} oscillation={result.diagnostics['oscillation']:.6g}")
    return EXIT_OK if result.converged else EXIT_SOLVE


def cmd_manufacture(cfg: RunConfig, out: Path) -> int:
    problem = build_problem(dataclasses.replace(cfg, f="zero"))
    grid = problem.grid
    u_star = catalog.expression(cfg.u_star, grid, cfg.u_star_amplitude, seed=cfg.seed)
    hessian = catalog.exact_hessian(cfg.u_star, grid, cfg.u_star_amplitude) if cfg.hessian == "exact" else None
    if cfg.hessian == "exact" and hessian is None:
        raise ConfigError(f"no closed-form Hessian for u_star={cfg.u_star!r}")
    problem = problem.with_data(manufacture_f(u_star, problem, hessian=hessian))
    write_field(out / "f", problem.f)
    write_field(out / "u_star", u_star)
    result = continuity_solve(problem)
    write_field(out / "u", result.u)
    write_history(out / "convergence.csv", result.history)
    payload = _result_payload(result)
    error = float(np.abs(result.u - (u_star - u_star.mean())).max()) if result.converged else float("nan")
    payload["recovery_error"] = error
    payload["files"] = dict(u="u.bin", u_star="u_star.bin", f="f.bin", convergence="convergence.csv")
    write_record(out, cfg, payload)
    print(f"{payload['status']}: recovery sup error={error:.3e}")
    return EXIT_OK if result.converged else EXIT_SOLVE


def run_selftest(seed: int = 0):
    """Quick property battery; returns a list of :class:`CheckReport`."""
    reports = []
    for n in (2, 3, 4):
        reports.append(checks.audit_identities(n, 200, seed))
    for n in (2, 3):
        reports.append(checks.audit_oracle(n, 100, seed))
        reports.append(checks.audit_det_inequality(n, 1000, seed))
        reports.append(checks.audit_amgm(n, 1000, seed))
    # negative controls must fail
    neg = checks.check_det_inequality(np.diag([1.0, -1.0, 1.0, -1.0]), project=False)
    reports.append(checks.CheckReport("negative control: det inequality on indefinite W", not neg.passed, neg.value))
    neg = checks.check_amgm(np.eye(3), np.diag([1.0, 1.0, -1.0]))
    reports.append(checks.CheckReport("negative control: AM-GM on indefinite H", not neg.passed, neg.value))

    rng = np.random.default_rng(seed)
    grid = GridSpec(2, 8)
    problem = Problem.constant(grid)
    problem = problem.with_data(normalize_f(trig_field(grid, rng, amplitude=0.3), problem))
    u = trig_field(grid, rng, kmax=1, amplitude=0.02)
    v = trig_field(grid, rng, kmax=1, amplitude=0.05)
    reports.append(checks.check_linearization(problem, u, v, 0.7))
    state = LinearState.at(u, problem)
    reports.append(checks.check_kernel_range(state, [trig_field(grid, rng, kmax=3) for _ in range(5)]))
    small = GridSpec(2, 4)
    reports.append(checks.check_dense_spectrum(
        LinearState.at(trig_field(small, rng, kmax=1, amplitude=0.01), Problem.constant(small))))
    return reports


def cmd_selftest(cfg: RunConfig, out: Path) -> int:
    reports = run_selftest(cfg.seed)
    for rep in reports:
        print(rep.line())
    ok = all(r.passed for r in reports)
    write_record(out, cfg, dict(status="pass" if ok else "fail",
                                checks=[dataclasses.asdict(r) for r in reports]))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_equivalence(cfg: RunConfig, out: Path) -> int:
    problem = build_problem(cfg)
    psi = catalog.expression(cfg.psi, problem.grid, 1.0, seed=cfg.seed)
    rep = checks.check_base_change_equivalence(problem, psi, cfg.psi_scale)
    print(rep.line())
    write_record(out, cfg, dict(status="pass" if rep.passed else "fail", check=dataclasses.asdict(rep)))
    return EXIT_OK if rep.passed else EXIT_CHECK


REPORT_COLUMNS = ("path", "command", "n", "N", "f", "f_amplitude", "status", "constant",
                  "oscillation", "min_eig", "residual", "recovery_error")


def cmd_report(cfg: RunConfig, out: Path) -> int:
    patterns = cfg.inputs or [str(Path(cfg.out) / "**" / "result.json")]
    paths = sorted({p for pat in patterns for p in glob.glob(pat, recursive=True)})
    paths = [p for p in paths if Path(p).resolve() != (out / "result.json").resolve()]
    rows = []
    for p in paths:
        rec = json.loads(Path(p).read_text())
        if rec.get("command") == "report":
            continue
        c = rec.get("config", {})
        d = rec.get("diagnostics") or {}
        rows.append(dict(path=p, command=rec.get("command"), n=c.get("n"), N=c.get("N"), f=c.get("f"),
                         f_amplitude=c.get("f_amplitude"), status=rec.get("status"),
                         constant=rec.get("constant"), oscillation=d.get("oscillation"),
                         min_eig=d.get("min_eig"), residual=d.get("residual"),
                         recovery_error=rec.get("recovery_error")))
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    print(",".join(REPORT_COLUMNS))
    for row in rows:
        print(",".join("" if row[k] is None else str(row[k]) for k in REPORT_COLUMNS))
    write_record(out, cfg, dict(status="ok", records=len(rows), files=dict(summary="summary.csv")))
    return EXIT_OK


HANDLERS = dict(solve=cmd_solve, manufacture=cmd_manufacture, selftest=cmd_selftest,
                equivalence=cmd_equivalence, report=cmd_report)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fcy", description=__doc__.splitlines()[1])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value (TOML) configuration file")
    parser.add_argument("--out", help="output directory (overrides config 'out')")
    parser.add_argument("--seed", type=int, help="master seed (overrides config 'seed')")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.config is None and args.command in ("solve", "manufacture", "equivalence"):
        print(f"fcy {args.command}: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.command, dict(out=args.out, seed=args.seed))
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityError as exc:
        print(f"positivity violation: {exc}", file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
