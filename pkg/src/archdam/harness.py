"""Experiment orchestration: run configs, replayable records, CSV and SVG output."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import CanyonProfile
from .mocss import CssParams, optimize
from .modal import MaterialProps
from .nsga2 import Nsga2Params, nsga2_optimize
from .pareto import ParetoArchive, hypervolume_2d, pareto_rank
from .problems import SYNTHETIC, DamProblem, ProblemSpec, synthetic_problem

log = logging.getLogger(__name__)

METHODS = ("mocss", "nsga2")
DAM_PROBLEMS = ("P1", "P2", "P3")


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""


@dataclass
class RunConfig:
    """Declarative description of one run (or a batch of seeds).

    ``params`` holds optimizer settings. The budget keys ``agents`` and
    ``iterations`` are translated for both methods so that population times
    iterations stays identical across them.
    """

    method: str = "mocss"
    problem: str = "P3"
    params: dict = field(default_factory=dict)
    seed: int = 0
    seeds: list[int] | None = None
    divisions: tuple[int, int, int] = (16, 8, 2)
    n_freq: int = 10
    reservoir: str = "full"
    s_abw: float = 0.3
    canyon: str | None = None
    scenarios: str | None = None
    output_dir: str = "runs"
    record_history: bool = False

    def __post_init__(self):
        self.method = str(self.method).lower()
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.problem.upper() in DAM_PROBLEMS:
            self.problem = self.problem.upper()
        elif self.problem.lower() in SYNTHETIC:
            self.problem = self.problem.lower()
        else:
            raise ConfigError(f"unknown problem {self.problem!r}")
        try:
            self.divisions = tuple(int(v) for v in self.divisions)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad divisions {self.divisions!r}") from exc
        if len(self.divisions) != 3 or min(self.divisions) < 1:
            raise ConfigError("divisions must be three positive integers")
        if self.reservoir not in ("full", "empty"):
            raise ConfigError("reservoir must be 'full' or 'empty'")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping")
        try:
            self.optimizer_params()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad params: {exc}") from exc

    @property
    def is_dam(self) -> bool:
        return self.problem in DAM_PROBLEMS

    def seed_list(self) -> list[int]:
        return [int(s) for s in self.seeds] if self.seeds else [int(self.seed)]

    def optimizer_params(self):
        p = dict(self.params)
        agents = p.pop("agents", None)
        iterations = p.pop("iterations", None)
        if self.method == "mocss":
            if agents is not None:
                p["n_agents"] = agents
            if iterations is not None:
                p["iterations"] = iterations
            return CssParams(**p)
        if agents is not None:
            p["population_size"] = agents
        if iterations is not None:
            p["generations"] = iterations
        return Nsga2Params(**p)

    def build_problem(self):
        if not self.is_dam:
            return synthetic_problem(self.problem)
        canyon = CanyonProfile.load(self.canyon) if self.canyon else None
        spec = ProblemSpec(kind=self.problem, n_freq=self.n_freq, canyon=canyon, divisions=self.divisions,
                           material=MaterialProps(), s_abw=self.s_abw, reservoir=self.reservoir)
        return DamProblem(spec)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["divisions"] = list(self.divisions)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class RunRecord:
    config: RunConfig
    seed: int
    archive: ParetoArchive
    wall_time: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "params": asdict(self.config.optimizer_params()),
            "wall_time": self.wall_time,
            "archive": {
                "X": self.archive.X.tolist(),
                "F": self.archive.F.tolist(),
                "violation": self.archive.violation.tolist(),
                "info": [_jsonable(i) for i in self.archive.info],
            },
            "history": [np.asarray(h).tolist() for h in self.history],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        arch = data["archive"]
        n_obj = len(arch["F"][0]) if arch["F"] else _n_obj(data["config"])
        n_var = len(arch["X"][0]) if arch["X"] else 0
        info = [{k: (np.asarray(v) if isinstance(v, list) else v) for k, v in i.items()} for i in arch["info"]]
        archive = ParetoArchive(np.asarray(arch["X"], dtype=float).reshape(-1, n_var),
                                np.asarray(arch["F"], dtype=float).reshape(-1, n_obj),
                                np.asarray(arch["violation"], dtype=float), info)
        history = [np.asarray(h, dtype=float) for h in data.get("history", [])]
        return cls(RunConfig.from_dict(data["config"]), int(data["seed"]), archive, float(data["wall_time"]), history)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _n_obj(config: dict) -> int:
    problem = str(config.get("problem", "P3")).upper()
    return 1 + int(config.get("n_freq", 10)) if problem == "P1" else 2


def _jsonable(info: dict) -> dict:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in info.items()}


def run_single(config: RunConfig, seed: int, check_invariants: bool = False, workers: int | None = None) -> RunRecord:
    problem = config.build_problem()
    params = config.optimizer_params()
    run = optimize if config.method == "mocss" else nsga2_optimize
    start = time.perf_counter()
    archive = run(problem, params, seed=seed, check_invariants=check_invariants,
                  record_history=config.record_history, workers=workers)
    wall = time.perf_counter() - start
    log.info("%s on %s seed %d: %d members in %.1f s", config.method, config.problem, seed, len(archive), wall)
    return RunRecord(config, seed, archive, wall, archive.history)


def run_experiment(config: RunConfig, check_invariants: bool = False, workers: int | None = None) -> list[RunRecord]:
    """Run every seed of ``config`` and return the records in seed order."""
    return [run_single(config, s, check_invariants, workers) for s in config.seed_list()]


def replay(record: RunRecord) -> RunRecord:
    """Re-run a record's seed and settings."""
    return run_single(record.config, record.seed)


def same_archive(a: ParetoArchive, b: ParetoArchive) -> bool:
    """Bit-level equality of positions, fitness and violations."""
    return (a.X.shape == b.X.shape and a.F.shape == b.F.shape and np.array_equal(a.X, b.X)
            and np.array_equal(a.F, b.F) and np.array_equal(a.violation, b.violation))


# --------------------------------------------------------------------------
# Best-run selection
# --------------------------------------------------------------------------


def projected(F) -> np.ndarray:
    """Two-objective view of a fitness matrix: first column versus the sum of the rest."""
    F = np.asarray(F, dtype=float)
    if F.shape[1] == 2:
        return F
    return np.column_stack([F[:, 0], F[:, 1:].sum(axis=1)])


def normalized_hypervolumes(archives, ref=(1.1, 1.1)) -> np.ndarray:
    """Hypervolume of each archive's feasible members after scaling by the shared ideal and nadir points."""
    feasible = [projected(a.F[a.feasible & np.all(np.isfinite(a.F), axis=1)]) for a in archives]
    pooled = np.vstack([f for f in feasible if len(f)] or [np.zeros((0, 2))])
    if len(pooled) == 0:
        return np.zeros(len(archives))
    lo, hi = pooled.min(axis=0), pooled.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.array([hypervolume_2d((f - lo) / span, ref) if len(f) else 0.0 for f in feasible])


def best_run(records: list[RunRecord]) -> RunRecord:
    """The record whose archive has the largest normalized hypervolume."""
    if not records:
        raise ValueError("no records to choose from")
    hv = normalized_hypervolumes([r.archive for r in records])
    return records[int(np.argmax(hv))]


# --------------------------------------------------------------------------
# CSV export
# --------------------------------------------------------------------------


def csv_columns(variable_names, n_obj: int, n_freq: int | None) -> list[str]:
    cols = ["seed", "method", *variable_names]
    if n_freq:
        cols += ["volume"] + [f"fr{k + 1}" for k in range(n_freq)]
    return cols + [f"fit{k + 1}" for k in range(n_obj)] + ["violation", "rank"]


def _fmt(v: float) -> str:
    return repr(float(v))


def export_archive(archive: ParetoArchive, path, seed: int = 0, method: str = "", variable_names=None,
                   n_freq: int | None = None) -> None:
    """Write one row per archive member; floats use their shortest round-trip form."""
    n_var, n_obj = archive.X.shape[1], archive.F.shape[1]
    names = list(variable_names) if variable_names is not None else [f"x{i + 1}" for i in range(n_var)]
    rank = pareto_rank(archive.F, archive.violation)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(csv_columns(names, n_obj, n_freq))
            for i in range(len(archive)):
                row = [seed, method, *map(_fmt, archive.X[i])]
                if n_freq:
                    info = archive.info[i]
                    freqs = np.asarray(info.get("frequencies", np.full(n_freq, np.nan)), dtype=float)
                    freqs = np.pad(freqs, (0, max(0, n_freq - len(freqs))), constant_values=np.nan)[:n_freq]
                    row += [_fmt(info.get("volume", np.nan)), *map(_fmt, freqs)]
                row += [*map(_fmt, archive.F[i]), _fmt(archive.violation[i]), int(rank[i])]
                writer.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write archive to {path}: {exc}") from exc


def export_record(record: RunRecord, path) -> None:
    cfg = record.config
    problem = cfg.build_problem()
    export_archive(record.archive, path, record.seed, cfg.method, problem.variable_names,
                   cfg.n_freq if cfg.is_dam else None)


@dataclass
class ArchiveTable:
    """An archive read back from CSV together with its bookkeeping columns."""

    archive: ParetoArchive
    seeds: np.ndarray
    methods: list[str]
    variable_names: list[str]
    rank: np.ndarray


def import_archive(path) -> ArchiveTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    fit_cols = [i for i, h in enumerate(header) if h.startswith("fit")]
    fr_cols = [i for i, h in enumerate(header) if h.startswith("fr") and h[2:].isdigit()]
    vol_col = header.index("volume") if "volume" in header else None
    first_meta = vol_col if vol_col is not None else fit_cols[0]
    var_cols = list(range(2, first_meta))
    names = [header[i] for i in var_cols]
    X = np.array([[float(r[i]) for i in var_cols] for r in rows]).reshape(len(rows), len(var_cols))
    F = np.array([[float(r[i]) for i in fit_cols] for r in rows]).reshape(len(rows), len(fit_cols))
    viol = np.array([float(r[header.index("violation")]) for r in rows])
    info = []
    for r in rows:
        item = {}
        if vol_col is not None:
            item["volume"] = float(r[vol_col])
            item["frequencies"] = np.array([float(r[i]) for i in fr_cols])
        info.append(item)
    archive = ParetoArchive(X, F, viol, info)
    return ArchiveTable(archive, np.array([int(r[0]) for r in rows], dtype=np.int64), [r[1] for r in rows], names,
                        np.array([int(r[header.index("rank")]) for r in rows], dtype=np.int64))


# --------------------------------------------------------------------------
# SVG scatter
# --------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if not hi > lo:
        return np.array([lo])
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    return np.arange(math.ceil(lo / step) * step, hi + 0.5 * step, step)


def emit_plot(F, path, rank=None, labels=("fit1", "fit2"), title: str = "", size=(640, 480)) -> int:
    """Write an SVG scatter of the first two fitness columns, colored by front.

    Returns the number of markers drawn (one per row of ``F``).
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    rank = np.ones(len(F), dtype=int) if rank is None else np.asarray(rank, dtype=int)
    width, height = size
    left, right, top, bottom = 80, 20, 40, 60
    pw, ph = width - left - right, height - top - bottom
    pts = F[:, :2]
    finite = np.all(np.isfinite(pts), axis=1)
    if finite.any():
        lo, hi = pts[finite].min(axis=0), pts[finite].max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    pad = np.where(hi > lo, 0.05 * (hi - lo), 0.5 * np.maximum(np.abs(lo), 1.0))
    lo, hi = lo - pad, hi + pad

    def sx(v):
        return left + (v - lo[0]) / (hi[0] - lo[0]) * pw

    def sy(v):
        return top + ph - (v - lo[1]) / (hi[1] - lo[1]) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(lo[0], hi[0]):
        out.append(f'<text x="{sx(t):.1f}" y="{top + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(lo[1], hi[1]):
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.1f}" font-size="11" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 15}" font-size="13" text-anchor="middle">{labels[0]}</text>')
    out.append(f'<text x="18" y="{top + ph / 2}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2})">{labels[1]}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="24" font-size="14" text-anchor="middle">{title}</text>')
    for (x, y), r, ok in zip(pts, rank, finite):
        colour = _PALETTE[(int(r) - 1) % len(_PALETTE)]
        # non-finite members (failed evaluations) are pinned to the top-left corner
        cx, cy = (sx(x), sy(y)) if ok else (left, top)
        out.append(f'<circle class="member" cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{colour}" data-front="{int(r)}"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return len(pts)


def plot_record(record: RunRecord, path) -> int:
    F = record.archive.F
    return emit_plot(F, path, pareto_rank(F, record.archive.violation),
                     title=f"{record.config.method} {record.config.problem} seed {record.seed}")
