"""Run and sweep drivers, flat key=value configs, and CSV writers."""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .cases import CASE_IDS, CaseSpec, default_run, initial_data
from .grid import GridSpec, average_u_to_cell, average_v_to_cell
from .nsch import ModelParams, NschSolver, NschState
from .relax import RelaxParams, RelaxSolver, RelaxState
from .sparse import Breakdown, KrylovConfig, NonConvergence

OUTPUT_KINDS = ("energy_series", "field_snapshots", "error_vs_reference", "mass_series")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class SolverFailure(RuntimeError):
    def __init__(self, message: str, step: int, residual: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.residual = residual


def fmt(x: float) -> str:
    """Round-trip decimal formatting with 17 significant digits."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# configuration


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _float(kv, key, default=None) -> Optional[float]:
    if key not in kv:
        return default
    try:
        return float(kv.pop(key))
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number") from exc


def _int(kv, key, default=None) -> Optional[int]:
    if key not in kv:
        return default
    try:
        return int(kv.pop(key))
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer") from exc


def _floats(kv, key) -> list[float]:
    if key not in kv:
        return []
    try:
        return [float(s) for s in kv.pop(key).split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers") from exc


def _case_from(kv) -> CaseSpec:
    cid = kv.pop("case", None)
    if cid not in CASE_IDS:
        raise ConfigError(f"case must be one of {CASE_IDS}, got {cid!r}")
    case = default_run(cid)
    nx = _int(kv, "nx", case.grid.nx)
    ny = _int(kv, "ny", case.grid.ny)
    if (ny == 1) != case.grid.is_1d:
        raise ConfigError(f"{cid} is {'one' if case.grid.is_1d else 'two'}-dimensional; ny = {ny} does not fit")
    try:
        return replace(
            case,
            grid=replace(case.grid, nx=nx, ny=ny),
            gamma=_float(kv, "gamma", case.gamma),
            dt=_float(kv, "dt", case.dt),
            t_end=_float(kv, "t_end", case.t_end),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _krylov_from(kv) -> KrylovConfig:
    try:
        return KrylovConfig(
            tol=_float(kv, "tol", 1e-12),
            max_iters=_int(kv, "max_iters", None),
            restart=_int(kv, "restart", 30),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunConfig:
    case: CaseSpec
    solver: str = "nsch"
    relax_params: Optional[RelaxParams] = None
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    outputs: tuple[str, ...] = ("energy_series", "mass_series")
    snapshot_times: tuple[float, ...] = ()
    out_dir: Path = Path("out")

    def __post_init__(self):
        if self.solver not in ("nsch", "relax"):
            raise ConfigError(f"solver must be nsch or relax, got {self.solver!r}")
        if self.solver == "relax" and self.relax_params is None:
            raise ConfigError("relax runs need alpha, beta and delta")
        for kind in self.outputs:
            if kind not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output {kind!r}; choose from {OUTPUT_KINDS}")
        if "error_vs_reference" in self.outputs and self.solver != "relax":
            raise ConfigError("error_vs_reference needs solver = relax")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.case.t_end + 1e-12:
                raise ConfigError(f"snapshot time {t} outside [0, {self.case.t_end}]")

    @classmethod
    def from_text(cls, text: str, out_dir: Optional[Path] = None) -> "RunConfig":
        kv = parse_kv(text)
        case = _case_from(kv)
        solver = kv.pop("solver", "nsch")
        krylov = _krylov_from(kv)
        a, b, d = (_float(kv, k) for k in ("alpha", "beta", "delta"))
        params = None
        if solver == "relax":
            if None in (a, b, d):
                raise ConfigError("relax runs need alpha, beta and delta")
            try:
                params = RelaxParams(a, b, d, case.gamma, case.dt)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        outputs = tuple(s.strip() for s in kv.pop("outputs", "energy_series,mass_series").split(",") if s.strip())
        snaps = tuple(_floats(kv, "snapshot_times"))
        od = Path(kv.pop("out_dir", "out"))
        if kv:
            raise ConfigError(f"unknown keys: {sorted(kv)}")
        return cls(case, solver, params, krylov, outputs, snaps, out_dir or od)


@dataclass
class SweepConfig:
    case: CaseSpec
    alpha_list: Sequence[float]
    beta_list: Sequence[float]
    delta_list: Sequence[float]
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    report: Path = Path("errors.csv")
    workers: int = 1

    def __post_init__(self):
        for name in ("alpha_list", "beta_list", "delta_list"):
            vals = getattr(self, name)
            if not vals:
                raise ConfigError(f"{name} is empty")
            if any(not 0.0 < x <= 1.0 for x in vals):
                raise ConfigError(f"{name} values must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_text(cls, text: str, out_dir: Optional[Path] = None) -> "SweepConfig":
        kv = parse_kv(text)
        case = _case_from(kv)
        krylov = _krylov_from(kv)
        lists = [_floats(kv, k) for k in ("alpha_list", "beta_list", "delta_list")]
        report = Path(kv.pop("report", "errors.csv"))
        workers = _int(kv, "workers", 1)
        if kv:
            raise ConfigError(f"unknown keys: {sorted(kv)}")
        if out_dir is not None and not report.is_absolute():
            report = out_dir / report
        return cls(case, *lists, krylov=krylov, report=report, workers=workers)


# ---------------------------------------------------------------------------
# simulation drivers


@dataclass
class StepRecord:
    t: float
    mass: float
    div_inf: float
    overshoot: float


@dataclass
class RunResult:
    config: RunConfig
    state: object
    energies: list[dg.EnergyRecord]
    series: list[StepRecord]
    snapshots: dict[float, object]
    reference: Optional[NschState] = None
    error: Optional[dg.ErrorReport] = None


def _record(grid, state) -> StepRecord:
    return StepRecord(state.t, dg.mass(grid, state.c), dg.divergence_inf(grid, state.u, state.v),
                      dg.overshoot(state.c))


def make_stepper(case: CaseSpec, solver: str, params: Optional[RelaxParams], krylov: KrylovConfig):
    """Return ``(state0, step, energy)`` callables for either solver."""
    c0, u0, v0 = initial_data(case)
    if solver == "nsch":
        sol = NschSolver(case.grid, ModelParams(case.gamma, case.dt), krylov)
        return NschState.initial(case.grid, c0, u0, v0), sol.step, lambda s: dg.energy_nsch(s, case.gamma)
    sol = RelaxSolver(case.grid, params, krylov)
    return sol.init(c0, u0, v0), sol.step, lambda s: dg.energy_relax(s, params)


def simulate(case: CaseSpec, solver: str = "nsch", params: Optional[RelaxParams] = None,
             krylov: Optional[KrylovConfig] = None, snapshot_times: Sequence[float] = (),
             track: bool = True):
    """Advance from ``t = 0`` to ``t_end``.

    Returns ``(final_state, energies, series, snapshots)``; the energy and
    diagnostic series hold one entry per time level including ``t = 0``.

    Raises
    ------
    SolverFailure
        A linear solve failed; carries the step index and residual.
    """
    krylov = krylov or KrylovConfig()
    state, step, energy = make_stepper(case, solver, params, krylov)
    g = case.grid
    energies = [energy(state)] if track else []
    series = [_record(g, state)] if track else []
    snap_steps = {int(round(t / case.dt)): t for t in snapshot_times}
    snapshots = {snap_steps[0]: state} if 0 in snap_steps else {}
    for n in range(1, case.n_steps + 1):
        try:
            state = step(state)
        except (NonConvergence, Breakdown) as exc:
            raise SolverFailure(str(exc), n, getattr(exc, "residual", float("nan"))) from exc
        if track:
            energies.append(energy(state))
            series.append(_record(g, state))
        if n in snap_steps:
            snapshots[snap_steps[n]] = state
    return state, energies, series, snapshots


def run_single(config: RunConfig) -> RunResult:
    """Run one simulation and write the requested outputs into ``config.out_dir``."""
    state, energies, series, snaps = simulate(
        config.case, config.solver, config.relax_params, config.krylov, config.snapshot_times
    )
    result = RunResult(config, state, energies, series, snaps)
    if "error_vs_reference" in config.outputs:
        ref, *_ = simulate(config.case, "nsch", None, config.krylov, track=False)
        result.reference = ref
        result.error = dg.error_report(state, ref, config.relax_params)
    write_run_outputs(result)
    return result


def write_run_outputs(result: RunResult) -> None:
    cfg = result.config
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    relax = cfg.solver == "relax"
    if "energy_series" in cfg.outputs:
        write_energy_series(out / "energy.csv", result.energies, relax)
    if "mass_series" in cfg.outputs:
        write_step_series(out / "diagnostics.csv", result.series)
    if "field_snapshots" in cfg.outputs:
        for t, st in sorted(result.snapshots.items()):
            write_field_snapshot(out / f"snapshot_t{t:.6f}.csv", st)
    if result.error is not None:
        p = cfg.relax_params
        write_error_table(out / "error.csv", [SweepRow(p.alpha, p.beta, p.delta, result.error, "ok")])


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    alpha: float
    beta: float
    delta: float
    report: Optional[dg.ErrorReport]
    status: str


def _sweep_job(args) -> SweepRow:
    case, triple, krylov, ref = args
    a, b, d = triple
    params = RelaxParams(a, b, d, case.gamma, case.dt)
    try:
        state, *_ = simulate(case, "relax", params, krylov, track=False)
    except SolverFailure as exc:
        return SweepRow(a, b, d, None, f"failed at step {exc.step}: {exc}")
    return SweepRow(a, b, d, dg.error_report(state, ref, params), "ok")


def run_triples(case: CaseSpec, triples, krylov: KrylovConfig, reference: NschState,
                workers: int = 1) -> list[SweepRow]:
    """Relaxation runs for each ``(alpha, beta, delta)``, compared with ``reference``."""
    jobs = [(case, t, krylov, reference) for t in triples]
    if workers == 1:
        rows = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    return sorted(rows, key=lambda r: (r.alpha, r.beta, r.delta))


def run_sweep(config: SweepConfig, write: bool = True) -> list[SweepRow]:
    """NSCH reference once, then one relaxation run per parameter triple."""
    ref, *_ = simulate(config.case, "nsch", None, config.krylov, track=False)
    triples = list(itertools.product(config.alpha_list, config.beta_list, config.delta_list))
    rows = run_triples(config.case, triples, config.krylov, ref, config.workers)
    if write:
        write_error_table(config.report, rows)
    return rows


def fit_loglog_slope(params, errors, floor: float = 0.0, factor: float = 10.0):
    """Least-squares slope of ``log10(error)`` against ``log10(param)``.

    Points with ``error < factor * floor`` are treated as floored and left
    out.  Returns ``(slope, mask)``; the slope is NaN with fewer than two
    usable points.
    """
    x = np.log10(np.asarray(params, dtype=float))
    e = np.asarray(errors, dtype=float)
    mask = np.isfinite(e) & (e > 0) & (e >= factor * floor)
    if mask.sum() < 2:
        return float("nan"), mask
    slope = np.polyfit(x[mask], np.log10(e[mask]), 1)[0]
    return float(slope), mask


# ---------------------------------------------------------------------------
# writers


ENERGY_COLUMNS = ["t", "E_total", "E_kin", "E_well", "E_grad"]
RELAX_ENERGY_COLUMNS = ["E_penalty", "E_pressure", "E_flux"]


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_energy_series(path, records: Sequence[dg.EnergyRecord], relax: bool = False) -> None:
    header = ENERGY_COLUMNS + (RELAX_ENERGY_COLUMNS if relax else [])
    rows = []
    for r in records:
        vals = [r.t, r.total, r.kinetic, r.doublewell, r.gradient]
        if relax:
            vals += [r.penalty, r.pressure, r.flux]
        rows.append([fmt(v) for v in vals])
    _write_rows(path, header, rows)


def write_step_series(path, series: Sequence[StepRecord]) -> None:
    _write_rows(path, ["t", "mass", "div_inf", "overshoot"],
                [[fmt(s.t), fmt(s.mass), fmt(s.div_inf), fmt(s.overshoot)] for s in series])


def write_field_snapshot(path, state) -> None:
    """One row per cell: coordinates, cell fields and cell-averaged face fields."""
    g: GridSpec = state.grid
    x, y = g.cell_centers()
    cols = {
        "x": x, "y": y, "c": state.c, "p": state.p,
        "u_cell": average_u_to_cell(g, state.u), "v_cell": average_v_to_cell(g, state.v),
    }
    if isinstance(state, RelaxState):
        cols["omega"] = state.omega
        cols["mx_cell"] = average_u_to_cell(g, state.mx)
        cols["my_cell"] = average_v_to_cell(g, state.my)
    flat = [a.ravel() for a in cols.values()]
    _write_rows(path, list(cols), [[fmt(v) for v in row] for row in zip(*flat)])


def write_error_table(path, rows: Sequence[SweepRow]) -> None:
    header = ["alpha", "beta", "delta"] + dg.ErrorReport.norm_names() + ["status"]
    out = []
    for r in rows:
        norms = r.report.norms() if r.report is not None else [float("nan")] * 7
        out.append([fmt(r.alpha), fmt(r.beta), fmt(r.delta)] + [fmt(v) for v in norms] + [r.status])
    _write_rows(path, header, out)


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
