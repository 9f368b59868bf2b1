"""NSGA-II baseline: binary tournament, SBX, polynomial mutation, elitist survival."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .mocss import check_archive
from .pareto import ParetoArchive, crowding_distance, pareto_rank
from .problems import evaluate_population, stack


@dataclass
class Nsga2Params:
    population_size: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # None: 1 / n_var
    eta_c: float = 20.0
    eta_m: float = 20.0

    def __post_init__(self):
        if self.population_size < 2 or self.generations < 0:
            raise ValueError("population_size must be >= 2 and generations nonnegative")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if not (self.eta_c > 0 and self.eta_m > 0):
            raise ValueError("distribution indices must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def sbx(p1, p2, lower, upper, eta: float, rng: np.random.Generator, prob: float = 0.9):
    """Bounded simulated binary crossover; each variable crosses with probability 1/2."""
    c1, c2 = np.array(p1, dtype=float), np.array(p2, dtype=float)
    if rng.random() > prob:
        return c1, c2
    for i in range(len(c1)):
        if rng.random() > 0.5 or abs(p1[i] - p2[i]) <= 1e-14:
            continue
        y1, y2 = min(p1[i], p2[i]), max(p1[i], p2[i])
        lo, hi = lower[i], upper[i]
        u = rng.random()
        children = []
        for beta in (1.0 + 2.0 * (y1 - lo) / (y2 - y1), 1.0 + 2.0 * (hi - y2) / (y2 - y1)):
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                bq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                bq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(bq)
        a = np.clip(0.5 * ((y1 + y2) - children[0] * (y2 - y1)), lo, hi)
        b = np.clip(0.5 * ((y1 + y2) + children[1] * (y2 - y1)), lo, hi)
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x, lower, upper, eta: float, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation applied to each variable with probability ``prob``."""
    y = np.array(x, dtype=float)
    for i in range(len(y)):
        if rng.random() >= prob:
            continue
        lo, hi = lower[i], upper[i]
        span = hi - lo
        if span <= 0:
            continue
        d1, d2 = (y[i] - lo) / span, (hi - y[i]) / span
        u = rng.random()
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            dq = val**power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val**power
        y[i] = np.clip(y[i] + dq * span, lo, hi)
    return y


def tournament(rank, crowd, n: int, rng: np.random.Generator) -> np.ndarray:
    """Binary tournaments on (lower rank, larger crowding distance)."""
    size = len(rank)
    a = rng.integers(size, size=n)
    b = rng.integers(size, size=n)
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def survival(F, violation, n: int):
    """Indices of the ``n`` survivors, plus the rank and crowding of the whole pool."""
    rank = pareto_rank(F, violation)
    crowd = np.zeros(len(rank))
    chosen = []
    for front in range(1, rank.max() + 1):
        members = np.flatnonzero(rank == front)
        crowd[members] = crowding_distance(F[members]) if np.all(np.isfinite(F[members])) else np.inf
        if len(chosen) + len(members) <= n:
            chosen.extend(members)
        else:
            order = members[np.argsort(-crowd[members], kind="stable")]
            chosen.extend(order[: n - len(chosen)])
        if len(chosen) >= n:
            break
    return np.array(chosen, dtype=np.int64), rank, crowd


def _evaluate(problem, X, workers):
    evals = evaluate_population(problem, X, workers)
    F, viol = stack(evals, problem.n_obj)
    return ParetoArchive(X, F, viol, [e.info for e in evals])


def _front(pop: ParetoArchive) -> ParetoArchive:
    return pop.subset(np.flatnonzero(pareto_rank(pop.F, pop.violation) == 1))


def nsga2_optimize(problem, params: Nsga2Params | None = None, seed: int = 0, callback=None,
                   check_invariants: bool = False, record_history: bool = False,
                   workers: int | None = None) -> ParetoArchive:
    """Run NSGA-II and return the first front of the final population."""
    params = params or Nsga2Params()
    rng = np.random.default_rng(seed)
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    n, d = params.population_size, len(lower)
    pm = params.mutation_prob if params.mutation_prob is not None else 1.0 / d

    pop = _evaluate(problem, lower + rng.random((n, d)) * (upper - lower), workers)
    _, rank, crowd = survival(pop.F, pop.violation, n)
    front = _front(pop)
    history = [front.F.copy()] if record_history else []

    for gen in range(params.generations):
        parents = tournament(rank, crowd, n + (n % 2), rng)
        children = []
        for k in range(0, len(parents), 2):
            c1, c2 = sbx(pop.X[parents[k]], pop.X[parents[k + 1]], lower, upper, params.eta_c, rng,
                         params.crossover_prob)
            children.append(polynomial_mutation(c1, lower, upper, params.eta_m, pm, rng))
            children.append(polynomial_mutation(c2, lower, upper, params.eta_m, pm, rng))
        offspring = _evaluate(problem, np.array(children[:n]), workers)
        pool = pop.concat(offspring)
        keep, pool_rank, pool_crowd = survival(pool.F, pool.violation, n)
        pop = pool.subset(keep)
        rank, crowd = pool_rank[keep], pool_crowd[keep]
        previous, front = front, _front(pop)
        if check_invariants:
            check_archive(front, previous)
        if record_history:
            history.append(front.F.copy())
        if callback is not None:
            callback(gen + 1, pop, front)
    front.history = history
    return front
