"""Benchmark driver: run a problem, sweep meshes, write CSV outputs."""

from __future__ import annotations

import dataclasses
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


from . import __version__
from .basis import BasisSpec
from .field import DGField, error_norms, export_csv, fmt, project, total_mass
from .flows import catalog
from .grid import Grid1D, Grid2D
from .limiters import LIMITERS, apply_limiters, candidate_minimum
from .update import step

T_SNAP = 1e-12


@dataclass(frozen=True)
class RunConfig:
    problem: str = "linear2d"
    k: int = 2
    mode: str = "qc"
    nx: int = 40
    ny: int | None = None
    cfl: float = 0.5
    t_final: float | None = None
    limiter: str = "none"
    tvb_m: float = 1.0
    output_dir: str | None = None
    snapshot_times: tuple = ()
    trace_substeps: int = 1

    def __post_init__(self):
        if not self.cfl > 0:
            raise ValueError(f"cfl must be positive, got {self.cfl}")
        if self.t_final is not None and self.t_final < 0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.mode not in ("quad", "qc"):
            raise ValueError(f"mode must be quad or qc, got {self.mode!r}")
        if self.limiter not in LIMITERS:
            raise ValueError(f"limiter must be one of {', '.join(LIMITERS)}")
        if self.nx < 1 or (self.ny is not None and self.ny < 1):
            raise ValueError("cell counts must be positive")
        if self.trace_substeps < 1:
            raise ValueError("trace_substeps must be >= 1")

    def with_mesh(self, n: int) -> "RunConfig":
        return dataclasses.replace(self, nx=n, ny=None if self.ny is None else n)


def _coerce(value: str, ftype: str, name: str):
    v = value.strip()
    if v.lower() in ("none", "") and "None" in ftype:
        return None
    if name == "snapshot_times":
        return tuple(float(s) for s in v.replace(",", " ").split())
    if ftype.startswith("int"):
        return int(v)
    if ftype.startswith("float"):
        return float(v)
    return v


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines (``#`` starts a comment) into RunConfig fields."""
    types = {f.name: str(f.type) for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(value, types[key], key)
    return out


def load_config(path, **overrides) -> RunConfig:
    values = parse_config(Path(path).read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


@dataclass
class MassSeries:
    t: list = field(default_factory=list)
    rel_error: list = field(default_factory=list)

    def append(self, t: float, rel: float):
        if self.t and t < self.t[-1]:
            raise ValueError("mass series times must be nondecreasing")
        self.t.append(t)
        self.rel_error.append(rel)

    def max_abs(self) -> float:
        return max((abs(e) for e in self.rel_error), default=0.0)

    def __len__(self):
        return len(self.t)


@dataclass
class RunResult:
    config: RunConfig
    final: DGField
    mass: MassSeries
    errors: dict | None
    wall_time: float
    steps: int
    min_series: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def make_grid(problem, cfg: RunConfig):
    if problem.ndim == 1:
        return Grid1D(problem.domain[0], problem.domain[1], cfg.nx)
    return Grid2D(*problem.domain, cfg.nx, cfg.ny or cfg.nx)


def mass_scale(u: DGField) -> float:
    """Denominator for relative mass errors.

    The total mass itself, unless cancellation makes it tiny compared with
    the L1 mass (sign-changing data such as sin(x + y)); then the L1 mass.
    """
    m0 = total_mass(u)
    cell = u.grid.dx if isinstance(u.grid, Grid1D) else u.grid.cell_area
    m1 = math.fsum(np.abs(u.cell_averages()).ravel().tolist()) * cell
    return abs(m0) if abs(m0) > 1e-8 * m1 else m1


def run(cfg: RunConfig, on_step=None) -> RunResult:
    """Project the initial data and step to ``t_final`` with dt = cfl * dx.

    Steps are shortened to land exactly on snapshot times and on ``t_final``.
    Limiters run after every step (minmod before bp).  ``on_step(u, n)`` is
    called after each step.
    """
    prob = catalog(cfg.problem)
    g = make_grid(prob, cfg)
    spec = BasisSpec(cfg.k, prob.ndim)
    T = prob.t_final if cfg.t_final is None else cfg.t_final
    u = project(prob.u0, g, spec)
    if cfg.limiter != "none":
        u, _ = apply_limiters(u, cfg.limiter, cfg.tvb_m)
    m0 = total_mass(u)
    scale = mass_scale(u) or 1.0
    mass = MassSeries()
    mass.append(0.0, 0.0)
    mins = [(0.0, float(candidate_minimum(u).min()))]
    dt = cfg.cfl * g.dx
    stops = sorted({float(s) for s in cfg.snapshot_times if 0.0 <= s <= T})
    snaps = {}
    if stops and stops[0] <= T_SNAP:
        snaps[0.0] = u
    out_dir = Path(cfg.output_dir) if cfg.output_dir else None
    t0 = time.perf_counter()
    n = 0
    while u.time < T - T_SNAP * max(1.0, T):
        target = min(u.time + dt, T)
        for s in stops:
            if u.time + T_SNAP < s < target:
                target = s
                break
        h = target - u.time
        u = step(u, h, prob.field, cfg.mode, cfg.trace_substeps)
        u = u.with_coeffs(u.coeffs, target)
        if cfg.limiter != "none":
            u, _ = apply_limiters(u, cfg.limiter, cfg.tvb_m)
        n += 1
        mass.append(u.time, (total_mass(u) - m0) / scale)
        mins.append((u.time, float(candidate_minimum(u).min())))
        for s in stops:
            if abs(s - u.time) <= T_SNAP * max(1.0, T):
                snaps[s] = u
        if on_step is not None:
            on_step(u, n)
    wall = time.perf_counter() - t0
    errors = None
    if prob.exact is not None:
        try:
            errors = error_norms(u, prob.exact, T, prob.relative_errors, prob.norm_measure)
        except ValueError:
            errors = None
    res = RunResult(cfg, u, mass, errors, wall, n, mins, snaps)
    if out_dir is not None:
        emit_outputs(res, out_dir)
    return res


@dataclass
class ConvergenceReport:
    rows: list

    @property
    def levels(self) -> list:
        return [r["n"] for r in self.rows]

    def orders(self, norm: str = "L2") -> list:
        return [r[f"order_{norm}"] for r in self.rows[1:]]

    def errors(self, norm: str = "L2") -> list:
        return [r[norm] for r in self.rows]


def observed_order(e_coarse, e_fine, n_coarse, n_fine):
    if n_fine != 2 * n_coarse or not (e_coarse > 0 and e_fine > 0):
        return None
    return math.log2(e_coarse / e_fine)


def converge(cfg: RunConfig, levels) -> ConvergenceReport:
    """Run each mesh level and compute observed orders between doubled meshes."""
    rows = []
    for n in levels:
        res = run(dataclasses.replace(cfg.with_mesh(n), output_dir=None))
        if res.errors is None:
            raise ValueError(f"problem {cfg.problem!r} has no exact solution at t_final")
        row = {"n": n, **res.errors, "wall_time": res.wall_time,
               "max_mass_error": res.mass.max_abs()}
        for norm in ("L1", "L2", "Linf"):
            row[f"order_{norm}"] = (observed_order(rows[-1][norm], row[norm], rows[-1]["n"], n)
                                    if rows else None)
        rows.append(row)
    report = ConvergenceReport(rows)
    if cfg.output_dir:
        emit_outputs(report, Path(cfg.output_dir), cfg)
    return report


def version_string() -> str:
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt_opt(v):
    return "" if v is None else fmt(v)


def write_convergence(report: ConvergenceReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("n,L1,orderL1,L2,orderL2,Linf,orderLinf\n")
        for r in report.rows:
            fh.write(",".join([str(r["n"]), fmt(r["L1"]), _fmt_opt(r["order_L1"]),
                               fmt(r["L2"]), _fmt_opt(r["order_L2"]),
                               fmt(r["Linf"]), _fmt_opt(r["order_Linf"])]) + "\n")


def write_mass(mass: MassSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,rel_mass_error\n")
        for t, e in zip(mass.t, mass.rel_error):
            fh.write(f"{fmt(t)},{fmt(e)}\n")


def snapshot_name(t: float) -> str:
    return f"snapshot_{t:.6g}.csv"


def write_manifest(path, cfg: RunConfig, extra: dict) -> None:
    lines = [f"version = {version_string()}"]
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(float(s)) for s in v)
        lines.append(f"{f.name} = {v}")
    for k, v in extra.items():
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")


def emit_outputs(results, out_dir, cfg: RunConfig | None = None) -> None:
    """Write CSVs and a flat key = value manifest for a run or a convergence report."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if isinstance(results, ConvergenceReport):
            write_convergence(results, out / "convergence.csv")
            write_manifest(out / "manifest.txt", cfg or RunConfig(),
                           {"levels": ",".join(map(str, results.levels)),
                            "wall_time": fmt(sum(r["wall_time"] for r in results.rows))})
            return
        write_mass(results.mass, out / "mass.csv")
        for t, u in sorted(results.snapshots.items()):
            export_csv(u, out / snapshot_name(t))
        export_csv(results.final, out / "final.csv")
        extra = {"steps": results.steps, "wall_time": fmt(results.wall_time),
                 "max_rel_mass_error": fmt(results.mass.max_abs())}
        if results.errors:
            extra.update({k: fmt(v) for k, v in results.errors.items()})
        write_manifest(out / "manifest.txt", results.config, extra)
    except OSError as exc:
        raise OSError(f"could not write outputs to {out}: {exc}") from exc
