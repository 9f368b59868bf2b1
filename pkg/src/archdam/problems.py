"""Optimisation problems: the three dam objective assemblies and synthetic checks.

Every problem exposes ``lower``, ``upper``, ``n_obj``, ``variable_names`` and
``evaluate(x) -> Evaluation``. Evaluation failures are reported through
:class:`EvaluationError`; :func:`evaluate_population` turns them into an
infeasible member with infinite fitness and violation.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import geometry
from .geometry import CanyonProfile, DamShape
from .modal import DEFAULT_DIVISIONS, MaterialProps, MeshError, ModelingError, modal_analysis

log = logging.getLogger(__name__)

WORKERS_ENV = "ARCHDAM_WORKERS"


class EvaluationError(RuntimeError):
    """Fitness could not be computed for a design."""


@dataclass
class Evaluation:
    fitness: np.ndarray
    violation: float = 0.0
    info: dict = field(default_factory=dict)


def failed_evaluation(n_obj: int, reason: str) -> Evaluation:
    return Evaluation(np.full(n_obj, np.inf), float("inf"), {"error": reason})


# --------------------------------------------------------------------------
# Frequency objectives
# --------------------------------------------------------------------------


def fitness_p1(volume: float, freqs) -> np.ndarray:
    """[volume, 1/fr_1, ..., 1/fr_n]."""
    freqs = np.asarray(freqs, dtype=float)
    return np.concatenate([[volume], 1.0 / freqs])


def fitness_p2(volume: float, freqs) -> np.ndarray:
    """[volume, sum 1/fr_n]."""
    return np.array([volume, float(np.sum(1.0 / np.asarray(freqs, dtype=float)))])


def fitness_p3(volume: float, freqs) -> np.ndarray:
    """[volume, prod 1/fr_n], accumulated as exp(-sum log fr) to avoid underflow."""
    return np.array([volume, float(np.exp(-np.sum(np.log(np.asarray(freqs, dtype=float)))))])


FITNESS = {"P1": fitness_p1, "P2": fitness_p2, "P3": fitness_p3}


@dataclass
class ProblemSpec:
    kind: str = "P3"
    n_freq: int = 10
    canyon: CanyonProfile | None = None
    divisions: tuple[int, int, int] = DEFAULT_DIVISIONS
    material: MaterialProps = field(default_factory=MaterialProps)
    s_abw: float = 0.3
    reservoir: str = "full"
    incompatible: bool = True

    def __post_init__(self):
        if self.kind not in FITNESS:
            raise ValueError(f"unknown dam problem {self.kind!r}")
        if self.n_freq < 1:
            raise ValueError("n_freq must be at least 1")
        self.divisions = tuple(int(v) for v in self.divisions)


class DamProblem:
    """Volume versus natural frequencies of a parametric arch dam."""

    variable_names = geometry.VARIABLE_NAMES
    lower = geometry.LOWER
    upper = geometry.UPPER

    def __init__(self, spec: ProblemSpec | None = None):
        self.spec = spec or ProblemSpec()
        self.canyon = self.spec.canyon or geometry.morrow_point_canyon()
        self.name = self.spec.kind
        self.n_obj = 1 + self.spec.n_freq if self.spec.kind == "P1" else 2

    @property
    def n_var(self) -> int:
        return len(self.lower)

    def shape(self, x) -> DamShape:
        return geometry.make_shape(x, self.canyon, s_abw=self.spec.s_abw)

    def frequencies(self, shape: DamShape) -> np.ndarray:
        try:
            result = modal_analysis(shape, self.spec.divisions, self.spec.material, self.spec.reservoir,
                                    self.spec.n_freq, self.spec.incompatible)
        except (MeshError, ModelingError) as exc:
            raise EvaluationError(str(exc)) from exc
        if not result.converged or len(result.frequencies) < self.spec.n_freq:
            raise EvaluationError("modal analysis did not converge")
        return result.frequencies

    def evaluate(self, x) -> Evaluation:
        shape = self.shape(x)
        freqs = self.frequencies(shape)
        fit = FITNESS[self.spec.kind](shape.volume, freqs)
        return Evaluation(fit, shape.violations.total, {"volume": shape.volume, "frequencies": freqs})


# --------------------------------------------------------------------------
# Synthetic problems with closed-form Pareto sets
# --------------------------------------------------------------------------


class SpherePair:
    """f1 = |x|^2, f2 = |x - 1|^2; the Pareto set is the segment from 0 to 1."""

    name = "sphere"
    n_obj = 2

    def __init__(self, n_var: int = 2, low: float = -1.0, high: float = 2.0):
        self.lower = np.full(n_var, low)
        self.upper = np.full(n_var, high)
        self.variable_names = [f"x{i + 1}" for i in range(n_var)]

    @property
    def n_var(self) -> int:
        return len(self.lower)

    def evaluate(self, x) -> Evaluation:
        x = np.asarray(x, dtype=float)
        return Evaluation(np.array([np.sum(x**2), np.sum((x - 1.0) ** 2)]))

    @staticmethod
    def distance_to_pareto_set(X) -> np.ndarray:
        """Decision-space distance of each row of X to the segment t*(1,...,1), t in [0, 1]."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1]
        t = np.clip(X.sum(axis=1) / d, 0.0, 1.0)
        return np.linalg.norm(X - t[:, None], axis=1)


class ZDT1:
    """ZDT1 on [0, 1]^n; true front f2 = 1 - sqrt(f1)."""

    name = "zdt1"
    n_obj = 2

    def __init__(self, n_var: int = 30):
        self.lower = np.zeros(n_var)
        self.upper = np.ones(n_var)
        self.variable_names = [f"x{i + 1}" for i in range(n_var)]

    @property
    def n_var(self) -> int:
        return len(self.lower)

    def evaluate(self, x) -> Evaluation:
        x = np.asarray(x, dtype=float)
        f1 = x[0]
        g = 1.0 + 9.0 * np.sum(x[1:]) / (len(x) - 1)
        return Evaluation(np.array([f1, g * (1.0 - np.sqrt(f1 / g))]))

    @staticmethod
    def front(n_points: int = 1000) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n_points)
        return np.column_stack([t**2, 1.0 - t])

    @staticmethod
    def distance_to_front(F, samples: int = 2001) -> np.ndarray:
        """Objective-space distance of each row of F to the true front.

        The front is parametrised as (t^2, 1 - t); a coarse scan in t is
        refined by a bounded scalar minimisation around the best sample.
        """
        F = np.atleast_2d(np.asarray(F, dtype=float))
        t = np.linspace(0.0, 1.0, samples)
        ref = ZDT1.front(samples)
        out = np.empty(F.shape[0])
        for i, p in enumerate(F):
            k = int(np.argmin(np.sum((ref - p) ** 2, axis=1)))
            lo, hi = t[max(k - 1, 0)], t[min(k + 1, samples - 1)]
            res = minimize_scalar(lambda s: (s * s - p[0]) ** 2 + (1.0 - s - p[1]) ** 2, bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-12})
            out[i] = np.sqrt(max(0.0, min(res.fun, np.sum((ref[k] - p) ** 2))))
        return out


SYNTHETIC = {"sphere": SpherePair, "zdt1": ZDT1}


def synthetic_problem(name: str, **kwargs):
    try:
        return SYNTHETIC[name.lower()](**kwargs)
    except KeyError:
        raise ValueError(f"unknown synthetic problem {name!r}; choose from {sorted(SYNTHETIC)}") from None


# --------------------------------------------------------------------------
# Population evaluation
# --------------------------------------------------------------------------


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _safe_evaluate(problem, x) -> Evaluation:
    try:
        ev = problem.evaluate(x)
    except EvaluationError as exc:
        log.debug("evaluation failed: %s", exc)
        return failed_evaluation(problem.n_obj, str(exc))
    if not np.all(np.isfinite(ev.fitness)):
        return failed_evaluation(problem.n_obj, "non-finite fitness")
    return ev


def evaluate_population(problem, X, workers: int | None = None) -> list[Evaluation]:
    """Evaluate every row of X, optionally on a thread pool; order is preserved."""
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(X) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda x: _safe_evaluate(problem, x), X))
    return [_safe_evaluate(problem, x) for x in X]


def stack(evals: list[Evaluation], n_obj: int):
    F = np.array([e.fitness for e in evals], dtype=float).reshape(len(evals), n_obj)
    viol = np.array([e.violation for e in evals], dtype=float)
    return F, viol
