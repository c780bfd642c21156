"""Experiment protocol: random-architecture sweeps against the baseline, scalability
timing with a log-log plane fit, and result tables."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .algograph import lift_to_semilattice
from .architecture import generate_architecture, nonisomorphic_batch
from .datasets import PAPER, load_dataset, paper_link_table
from .errors import AllocationError, ConfigError
from .instances import random_algorithm_graph
from .memmodel import MemoryProfile
from .solver import SolverConfig, solve, solve_baseline_li2018

COLUMNS = ("n", "method", "mean", "sd", "ci", "time")
METHODS = ("ours", "baseline")
CI_LEVEL = 0.999


@dataclass(frozen=True)
class SweepConfig:
    n_range: tuple = (1, 2, 3, 4, 5, 6)
    archs_per_n: Optional[int] = None   # None -> n + 5
    reps_per_arch: int = 10
    seed: int = 0
    dataset: str = PAPER
    record_time: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "n_range", tuple(int(n) for n in self.n_range))
        if not self.n_range or min(self.n_range) < 1:
            raise ConfigError("n_range must hold robot counts >= 1")
        if self.reps_per_arch < 1 or (self.archs_per_n is not None and self.archs_per_n < 1):
            raise ConfigError("counts must be >= 1")

    def archs_for(self, n: int) -> int:
        return n + 5 if self.archs_per_n is None else self.archs_per_n

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        solver = SolverConfig.from_dict(d.pop("solver", {}))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown sweep options: {sorted(unknown)}")
        if "n_range" in d:
            d["n_range"] = tuple(d["n_range"])
        return cls(solver=solver, **d)


@dataclass(frozen=True)
class SweepRow:
    n: int
    method: str
    mean: float
    sd: float
    ci: float
    time: Optional[float] = None


@dataclass(frozen=True)
class CellStats:
    """One (n, architecture, method) cell summarized over repetitions."""

    n: int
    arch: int
    method: str
    mean: float
    sd: float
    ci: float
    values: tuple
    time: float


@dataclass
class SweepReport:
    rows: list
    cells: list
    failures: list
    n_archs: dict


def summarize(values: Sequence, level: float = CI_LEVEL) -> tuple:
    """Mean, sample standard deviation and Student-t half-width."""
    x = np.asarray(values, dtype=float)
    k = len(x)
    if k == 0:
        return math.nan, math.nan, math.nan
    mean = float(x.mean())
    if k == 1:
        return mean, 0.0, 0.0
    sd = float(x.std(ddof=1))
    half = float(stats.t.ppf(0.5 + level / 2, k - 1) * sd / math.sqrt(k))
    return mean, sd, half


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """Both methods on every architecture of a non-isomorphic batch per robot count.

    Each repetition freezes one fresh delay draw per link and solves under
    expected times; the two methods see the same draw.
    """
    ds = load_dataset(cfg.dataset)
    g = lift_to_semilattice(ds.graph)
    profile = MemoryProfile.from_graph(g)
    cells, failures, n_archs = [], [], {}
    rows = []
    for n in cfg.n_range:
        batch = nonisomorphic_batch(n, np.random.default_rng([cfg.seed, n]), ds.link_table, size=cfg.archs_for(n))
        n_archs[n] = len(batch)
        per_method = {m: [] for m in METHODS}
        for k, arch in enumerate(batch):
            dist = {m: [] for m in METHODS}
            secs = {m: [] for m in METHODS}
            try:
                for r in range(cfg.reps_per_arch):
                    real = arch.realize(np.random.default_rng([cfg.seed, n, k, r]))
                    for m, fn in (("ours", solve), ("baseline", solve_baseline_li2018)):
                        res = fn(g, real, profile, cfg.solver)
                        dist[m].append(res.distance)
                        secs[m].append(res.wall_time)
            except AllocationError as exc:
                failures.append({"n": n, "arch": k, "error": f"{type(exc).__name__}: {exc}"})
                continue
            for m in METHODS:
                mean, sd, ci = summarize(dist[m])
                cell = CellStats(n, k, m, mean, sd, ci, tuple(dist[m]), float(np.mean(secs[m])))
                cells.append(cell)
                per_method[m].append(cell)
        for m in METHODS:
            group = per_method[m]
            if not group:
                rows.append(SweepRow(n, m, math.nan, math.nan, math.nan, None))
                continue
            if len(group) == 1:
                mean, sd, ci = summarize(group[0].values)
            else:
                mean, sd, ci = summarize([c.mean for c in group])
            t = float(np.mean([c.time for c in group])) if cfg.record_time else None
            rows.append(SweepRow(n, m, mean, sd, ci, t))
    return SweepReport(rows=rows, cells=cells, failures=failures, n_archs=n_archs)


# --- scalability ---------------------------------------------------------------

@dataclass(frozen=True)
class ScalabilityConfig:
    algorithms: tuple = (2, 4, 8)        # log-spaced for the log-log fit
    nodes: tuple = (3, 4, 5, 6)          # total nodes; one fog and one cloud among them
    archs: int = 10
    graphs_per_arch: int = 10
    seed: int = 0
    edge_prob: float = 0.35
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(int(x) for x in self.algorithms))
        object.__setattr__(self, "nodes", tuple(int(x) for x in self.nodes))
        if not self.nodes or not self.algorithms or min(self.nodes) < 3 or min(self.algorithms) < 1:
            raise ConfigError("need >= 3 nodes and >= 1 algorithm per grid point")

    @classmethod
    def from_dict(cls, d: dict) -> "ScalabilityConfig":
        d = dict(d)
        solver = SolverConfig.from_dict(d.pop("solver", {}))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scalability options: {sorted(unknown)}")
        return cls(solver=solver, **d)


@dataclass(frozen=True)
class ScalabilityPoint:
    n_algorithms: int
    n_nodes: int
    mean_time: float
    mean_explored: float


@dataclass(frozen=True)
class Regression:
    coef: tuple           # intercept, log algorithms, log nodes
    r2: float
    p_value: float
    n_points: int


@dataclass
class ScalabilityReport:
    points: list
    regression: Optional[Regression]


def fit_loglog(points: Sequence) -> Optional[Regression]:
    """Least-squares plane log t = b0 + b1 log(algorithms) + b2 log(nodes) with an F-test."""
    pts = [p for p in points if p.mean_time > 0]
    if len(pts) < 2:
        return None
    y = np.log([p.mean_time for p in pts])
    cols = [np.ones(len(pts))]
    for attr in ("n_algorithms", "n_nodes"):
        x = np.log([getattr(p, attr) for p in pts])
        if np.ptp(x) > 0:
            cols.append(x)
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    df_model, df_resid = X.shape[1] - 1, len(pts) - X.shape[1]
    if df_model > 0 and df_resid > 0 and ss_res > 0:
        f = ((ss_tot - ss_res) / df_model) / (ss_res / df_resid)
        p = float(stats.f.sf(f, df_model, df_resid))
    else:
        p = math.nan
    full = list(coef) + [math.nan] * (3 - len(coef))
    return Regression(tuple(float(c) for c in full), r2, p, len(pts))


def run_scalability(cfg: ScalabilityConfig) -> ScalabilityReport:
    """Mean solve time over random architectures and algorithm graphs per grid point."""
    table = paper_link_table()
    points = []
    for n_nodes in cfg.nodes:
        archs = [generate_architecture(n_nodes - 2, np.random.default_rng([cfg.seed, n_nodes, k]), table)
                 for k in range(cfg.archs)]
        for arch in archs:
            arch.transfer_table  # route tables are per-architecture setup, not search time
        for n_alg in cfg.algorithms:
            secs, explored = [], []
            for k, arch in enumerate(archs):
                for j in range(cfg.graphs_per_arch):
                    rng = np.random.default_rng([cfg.seed, n_nodes, k, n_alg, j])
                    g = lift_to_semilattice(random_algorithm_graph(n_alg, rng, cfg.edge_prob))
                    profile = MemoryProfile.from_graph(g)
                    started = time.perf_counter()
                    res = solve(g, arch, profile, cfg.solver)
                    secs.append(time.perf_counter() - started)
                    explored.append(res.nodes_explored)
            points.append(ScalabilityPoint(n_alg, n_nodes, float(np.mean(secs)), float(np.mean(explored))))
    return ScalabilityReport(points, fit_loglog(points))


# --- tables ----------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(col, s):
    if col == "method":
        return s
    if col == "n":
        return int(s)
    if s == "":
        return None
    return float(s)


def format_tables(rows: Iterable[SweepRow], fmt: str) -> str:
    """Rows in the fixed column order; floats keep full precision."""
    rows = list(rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        payload = {"columns": list(COLUMNS), "rows": [[getattr(r, c) for c in COLUMNS] for r in rows]}
        return json.dumps(payload, indent=2) + "\n"
    raise ConfigError(f"unknown table format {fmt!r}")


def emit_tables(rows: Iterable[SweepRow], fmt: str, path) -> Path:
    path = Path(path)
    text = format_tables(rows, fmt)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_tables(path, fmt: Optional[str] = None) -> list:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    if fmt == "csv":
        reader = csv.reader(text.splitlines())
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ConfigError(f"{path}: unexpected columns {header}")
        return [SweepRow(*(_parse(c, v) for c, v in zip(COLUMNS, line))) for line in reader]
    if fmt == "json":
        payload = json.loads(text)
        return [SweepRow(*line) for line in payload["rows"]]
    raise ConfigError(f"unknown table format {fmt!r}")


def rows_as_dicts(rows: Iterable[SweepRow]) -> list:
    return [asdict(r) for r in rows]
