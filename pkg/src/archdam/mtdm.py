"""Tournament-based multi-criteria ranking of a Pareto set.

Each alternative scores, per criterion, the fraction of rivals it strictly
beats (lower is better). The global score is the weighted geometric
combination of those fractions raised to ``1/N``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    name: str
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError(f"scenario {self.name!r}: weights must be a nonempty vector")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"scenario {self.name!r}: weights must be positive and sum to 1, got {list(w)}")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    def expand(self, n_criteria: int) -> np.ndarray:
        """Weights for ``n_criteria`` criteria.

        A two-valued (volume, frequency) scenario applied to 1 + m criteria
        keeps the volume weight and splits the frequency weight evenly.
        """
        w = np.asarray(self.weights)
        if len(w) == n_criteria:
            return w
        if len(w) == 2 and n_criteria > 2:
            return np.concatenate([[w[0]], np.full(n_criteria - 1, w[1] / (n_criteria - 1))])
        raise ValueError(f"scenario {self.name!r} has {len(w)} weights for {n_criteria} criteria")


DEFAULT_SCENARIOS = (
    Scenario("A", (0.9, 0.1)),
    Scenario("B", (0.7, 0.3)),
    Scenario("C", (0.5, 0.5)),
    Scenario("D", (0.3, 0.7)),
    Scenario("E", (0.1, 0.9)),
)


@dataclass
class RankedSolution:
    index: int  # row in the ranked set
    scores: np.ndarray  # per-criterion tournament scores T_i
    global_score: float  # R
    position: int = 0  # 1-based place in the ordering


def tournament_scores(F) -> np.ndarray:
    """T[a, i]: share of the other alternatives whose criterion i is strictly larger than a's."""
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    if n < 2:
        raise ValueError("a tournament needs at least two alternatives")
    wins = (F[None, :, :] > F[:, None, :]).sum(axis=1)
    return wins / (n - 1)


def tournament_score(a: int, F, criterion: int) -> float:
    """T_i(a, A) for one alternative and one criterion."""
    F = np.asarray(F, dtype=float)
    if F.shape[0] < 2:
        raise ValueError("a tournament needs at least two alternatives")
    col = F[:, criterion]
    return float(np.sum(col > col[a]) / (F.shape[0] - 1))


def global_score(T, weights) -> np.ndarray:
    """R = (prod_i T_i^{w_i})^{1/N}; any zero score gives R = 0."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    w = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.where(T > 0, np.log(np.where(T > 0, T, 1.0)), -np.inf)
    total = np.where(np.any(T == 0, axis=1), -np.inf, (logs * w).sum(axis=1))
    return np.exp(total / T.shape[1])


def global_rank(F, scenario: Scenario) -> list[RankedSolution]:
    """Order alternatives by R descending; ties go to lower volume (column 0), then lexicographic fitness."""
    F = np.asarray(F, dtype=float)
    T = tournament_scores(F)
    R = global_score(T, scenario.expand(F.shape[1]))
    keys = [F[:, k] for k in range(F.shape[1] - 1, -1, -1)] + [-R]
    order = np.lexsort(keys)
    return [RankedSolution(int(i), T[i], float(R[i]), pos + 1) for pos, i in enumerate(order)]


def load_scenarios(path) -> list[Scenario]:
    """Read a JSON list of ``{"name": ..., "weights": [...]}`` objects."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError("scenario file must hold a list")
    return [Scenario(str(item["name"]), tuple(item["weights"])) for item in data]


def dump_scenarios(scenarios, path) -> None:
    Path(path).write_text(json.dumps([{"name": s.name, "weights": list(s.weights)} for s in scenarios], indent=2))
