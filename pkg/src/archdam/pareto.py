"""Pareto ranking, crowding distance and the 2-D hypervolume indicator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import dominance_matrix


def dominates(a, b) -> bool:
    """Plain Pareto dominance for minimisation."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_rank(F, violation=None) -> np.ndarray:
    """Front index of every member (1 = nondominated) by iterative peeling.

    Dominance is the constrained variant of :func:`archdam.kernels.dominance_matrix`.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    D = dominance_matrix(F, violation)
    count = D.sum(axis=0)
    rank = np.zeros(n, dtype=np.int64)
    current = np.flatnonzero(count == 0)
    front = 1
    while current.size:
        rank[current] = front
        count = count - D[current].sum(axis=0)
        count[rank > 0] = -1
        current = np.flatnonzero(count == 0)
        front += 1
    return rank


def nondominated(F, violation=None) -> np.ndarray:
    """Indices of rank-1 members."""
    return np.flatnonzero(pareto_rank(F, violation) == 1)


def crowding_distance(F) -> np.ndarray:
    """NSGA-II crowding distance within one front.

    Boundary members of every objective get ``inf``; interior members sum the
    normalised gaps between their neighbours, using the front's own
    per-objective range.
    """
    F = np.asarray(F, dtype=float)
    n, k = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for m in range(k):
        order = np.argsort(F[:, m], kind="stable")
        col = F[order, m]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def hypervolume_2d(F, ref=(1.1, 1.1)) -> float:
    """Area dominated by a set of 2-objective points and bounded by ``ref``."""
    F = np.asarray(F, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref, dtype=float)
    F = F[np.all(F < ref, axis=1)]
    if F.size == 0:
        return 0.0
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    area, best_f2 = 0.0, ref[1]
    for f1, f2 in F:
        if f2 < best_f2:
            area += (ref[0] - f1) * (best_f2 - f2)
            best_f2 = f2
    return float(area)


@dataclass
class ParetoArchive:
    """A set of solutions: positions, objective vectors, violations and per-member info."""

    X: np.ndarray
    F: np.ndarray
    violation: np.ndarray
    info: list = field(default_factory=list)
    history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.violation = np.asarray(self.violation, dtype=float).reshape(-1)
        self.X = np.asarray(self.X, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(len(self.violation), -1)
        if self.F.ndim == 1:
            self.F = self.F.reshape(len(self.violation), -1)
        if not self.info:
            self.info = [{} for _ in range(len(self.violation))]

    @classmethod
    def empty(cls, n_var: int, n_obj: int) -> "ParetoArchive":
        return cls(np.zeros((0, n_var)), np.zeros((0, n_obj)), np.zeros(0), [])

    def __len__(self) -> int:
        return len(self.violation)

    def subset(self, idx) -> "ParetoArchive":
        idx = np.asarray(idx, dtype=np.int64)
        return ParetoArchive(self.X[idx], self.F[idx], self.violation[idx], [self.info[i] for i in idx])

    def concat(self, other: "ParetoArchive") -> "ParetoArchive":
        return ParetoArchive(
            np.vstack([self.X, other.X]),
            np.vstack([self.F, other.F]),
            np.concatenate([self.violation, other.violation]),
            list(self.info) + list(other.info),
        )

    @property
    def feasible(self) -> np.ndarray:
        return self.violation == 0.0
