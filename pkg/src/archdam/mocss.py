"""Multi-objective charged system search (MoCSS).

Agents are charged particles. Each one is pulled (or, with probability
``1 - attract_prob``, pushed) by every particle sitting in a strictly better
Pareto front, with a force that grows linearly inside the sphere radius and
decays with the inverse square outside it. Out-of-bounds coordinates are
regenerated from the charged memory (CM), a pruned archive of nondominated
solutions that is also the result of the run.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels import css_forces, dominance_matrix
from .pareto import ParetoArchive, pareto_rank
from .problems import evaluate_population, stack

log = logging.getLogger(__name__)

CHARGE_FLOOR = 1e-12


class CalibrationError(ValueError):
    """Objective scale factors cannot be derived (a worst fitness is zero)."""


class InvariantError(AssertionError):
    """An archive invariant failed while running with ``check_invariants``."""


@dataclass
class CssParams:
    n_agents: int = 100
    iterations: int = 200
    ka: float = 2.0
    kv: float = 2.0
    sphere_radius: float | None = None  # None: 0.10 * sqrt(n_var) in unit-box coordinates
    attract_prob: float = 0.8
    cmcr: float = 0.95
    par: float = 0.10
    archive_capacity: int | None = None  # None: n_agents
    alpha: float = 1.0
    kt: float = 0.75  # listed with the published settings; not used by any update rule
    scale_mode: str = "literal"  # "literal", "normalized" or "unit"
    calibration_iterations: int | None = None  # None: iterations // 10
    rank_gate: str = "better"  # "better": better fronts attract; "literal": worse fronts attract
    distance_eps: float = 1e-9

    def __post_init__(self):
        if self.n_agents < 1 or self.iterations < 0:
            raise ValueError("n_agents must be positive and iterations nonnegative")
        for name in ("ka", "kv", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("cmcr", "par", "attract_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.scale_mode not in ("literal", "normalized", "unit"):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.rank_gate not in ("better", "literal"):
            raise ValueError(f"unknown rank_gate {self.rank_gate!r}")

    def radius(self, n_var: int) -> float:
        return self.sphere_radius if self.sphere_radius is not None else 0.10 * np.sqrt(n_var)

    def capacity(self) -> int:
        return self.archive_capacity if self.archive_capacity is not None else self.n_agents

    def calibration_step(self) -> int:
        if self.calibration_iterations is not None:
            return self.calibration_iterations
        return max(1, self.iterations // 10)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    fitness: np.ndarray
    rank: int = 1
    charge: float = 0.0
    violation: float = 0.0


@dataclass
class SwarmState:
    """Snapshot handed to the optimisation callback after every iteration."""

    iteration: int
    X: np.ndarray
    V: np.ndarray
    F: np.ndarray
    violation: np.ndarray
    rank: np.ndarray
    charge: np.ndarray
    archive: ParetoArchive
    u: np.ndarray = field(repr=False, default=None)

    def particles(self) -> list[Particle]:
        return [
            Particle(self.X[i], self.V[i], self.F[i], int(self.rank[i]), float(self.charge[i]), float(self.violation[i]))
            for i in range(len(self.X))
        ]


def charge(F, floor: float = CHARGE_FLOOR) -> np.ndarray:
    """Charge in [0, 1]: product over objectives of (fit - worst)/(best - worst).

    Factors are floored at ``floor`` and multiplied in the log domain. An
    objective on which every particle ties contributes a factor of 1; rows
    with non-finite fitness get the floor in every factor.
    """
    F = np.asarray(F, dtype=float)
    n, k = F.shape
    finite = np.all(np.isfinite(F), axis=1)
    q = np.full(n, floor**k)
    if not finite.any():
        return q
    best = F[finite].min(axis=0)
    worst = F[finite].max(axis=0)
    span = best - worst
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(span < 0, (F[finite] - worst) / np.where(span < 0, span, 1.0), 1.0)
    factor = np.clip(factor, floor, 1.0)
    q[finite] = np.exp(np.sum(np.log(factor), axis=1))
    return q


def unit_positions(X, lower, upper) -> np.ndarray:
    return (np.asarray(X, dtype=float) - lower) / (upper - lower)


def force(j: int, X, q, rank, ar, a: float, lower, upper, eps: float = 1e-9, literal_gate: bool = False) -> np.ndarray:
    """Resultant force on particle j, written out term by term.

    The vectorised :func:`archdam.kernels.css_forces` computes the same sum for
    all particles at once.
    """
    X = np.asarray(X, dtype=float)
    Xn = unit_positions(X, lower, upper)
    out = np.zeros(X.shape[1])
    for i in range(X.shape[0]):
        if i == j:
            continue
        gate = rank[i] > rank[j] if literal_gate else rank[i] < rank[j]
        if not gate:
            continue
        r = float(np.linalg.norm(Xn[i] - Xn[j])) + eps
        mag = q[i] / a**3 * r if r < a else q[i] / r**2
        out += mag * ar[i][j] * (X[i] - X[j])
    return out


def forces(X, q, rank, ar, a: float, lower, upper, eps: float = 1e-9, literal_gate: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return css_forces(unit_positions(X, lower, upper), X, q, rank, ar, a, eps, literal_gate)


def move(X, V, F, ka: float, kv: float, r1, r2):
    """New positions r1*ka*F + r2*kv*V + X and velocities equal to the displacement."""
    X = np.asarray(X, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if X.ndim == 2:
        r1, r2 = r1.reshape(-1, 1), r2.reshape(-1, 1)
    X_new = r1 * ka * np.asarray(F) + r2 * kv * np.asarray(V) + X
    return X_new, X_new - X


def repair(x, lower, upper, memory, cmcr: float, par: float, rng: np.random.Generator) -> np.ndarray:
    """Regenerate out-of-bounds coordinates from the charged memory.

    With probability ``cmcr`` the coordinate is copied from a random memory
    member and then, with probability ``par``, moved a random fraction of the
    way toward that coordinate of another random member; otherwise it is
    drawn uniformly in its bounds. In-bounds coordinates are left alone.
    """
    x = np.array(x, dtype=float)
    memory = np.asarray(memory, dtype=float).reshape(-1, x.size)
    for d in np.flatnonzero((x < lower) | (x > upper)):
        if len(memory) and rng.random() < cmcr:
            x[d] = memory[rng.integers(len(memory)), d]
            if rng.random() < par:
                other = memory[rng.integers(len(memory)), d]
                x[d] += rng.random() * (other - x[d])
        else:
            x[d] = lower[d] + rng.random() * (upper[d] - lower[d])
    return x


def scale_factors(worst, alpha: float = 1.0, mode: str = "literal") -> np.ndarray:
    """Per-objective weights for archive distances.

    ``literal``: u_1 = alpha, u_k = u_{k-1} * worst_k / worst_{k-1}.
    ``normalized``: u_k = alpha * worst_1 / worst_k, which equalises u_k * worst_k.
    ``unit``: all ones.
    """
    worst = np.asarray(worst, dtype=float)
    if mode == "unit":
        return np.ones_like(worst)
    if np.any(worst == 0) or not np.all(np.isfinite(worst)):
        raise CalibrationError(f"cannot scale objectives with worst values {worst}")
    if mode == "literal":
        u = np.empty_like(worst)
        u[0] = alpha
        for k in range(1, len(worst)):
            u[k] = u[k - 1] * worst[k] / worst[k - 1]
        return u
    if mode == "normalized":
        return alpha * worst[0] / worst
    raise ValueError(f"unknown scale mode {mode!r}")


def objective_distance(F, u) -> np.ndarray:
    """Pairwise weighted Euclidean distances between objective vectors."""
    S = np.asarray(F, dtype=float) * np.asarray(u, dtype=float)
    return np.sqrt(((S[:, None, :] - S[None, :, :]) ** 2).sum(axis=2))


def prune(F, capacity: int, u) -> np.ndarray:
    """Indices kept after repeatedly dropping one member of the closest pair.

    The best member of every objective is never dropped. Of the two members
    of the closest pair, the one nearer to its next neighbour goes.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    alive = np.ones(n, dtype=bool)
    if n <= capacity:
        return np.arange(n)
    finite = np.all(np.isfinite(F), axis=1)
    protected = set()
    if finite.any():
        rows = np.flatnonzero(finite)
        protected = {int(rows[np.argmin(F[rows, k])]) for k in range(F.shape[1])}
    with np.errstate(invalid="ignore"):
        D = objective_distance(F, u)
    D[~np.isfinite(D)] = np.inf
    np.fill_diagonal(D, np.inf)
    blocked = D.copy()
    while alive.sum() > capacity:
        flat = int(np.argmin(blocked))
        i, j = divmod(flat, n)
        if not np.isfinite(blocked[i, j]):
            victims = [v for v in np.flatnonzero(alive)[::-1] if v not in protected]
            alive[victims[0]] = False
            blocked[victims[0], :] = blocked[:, victims[0]] = np.inf
            continue
        candidates = [v for v in (i, j) if v not in protected]
        if not candidates:
            blocked[i, j] = blocked[j, i] = np.inf
            continue
        if len(candidates) == 2:
            def next_gap(v, partner):
                row = D[v].copy()
                row[~alive] = np.inf
                row[partner] = np.inf
                return row.min()

            victim = i if next_gap(i, j) <= next_gap(j, i) else j
        else:
            victim = candidates[0]
        alive[victim] = False
        blocked[victim, :] = np.inf
        blocked[:, victim] = np.inf
    return np.flatnonzero(alive)


def _unique_rows(F) -> np.ndarray:
    seen, keep = set(), []
    for i, row in enumerate(np.asarray(F)):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return np.array(keep, dtype=np.int64)


def archive_update(memory: ParetoArchive, new: ParetoArchive, capacity: int, u) -> ParetoArchive:
    """Front 1 of ``memory + new`` (duplicates in objective space dropped), pruned to ``capacity``."""
    union = memory.concat(new)
    if len(union) == 0:
        return union
    union = union.subset(_unique_rows(np.column_stack([union.F, union.violation])))
    front = union.subset(np.flatnonzero(pareto_rank(union.F, union.violation) == 1))
    if len(front) > capacity:
        front = front.subset(prune(front.F, capacity, u))
    return front


def check_archive(memory: ParetoArchive, previous: ParetoArchive | None = None) -> None:
    """Raise :class:`InvariantError` if the archive holds a dominated member or regressed."""
    D = dominance_matrix(memory.F, memory.violation)
    if D.any():
        raise InvariantError(f"{int(D.sum())} dominance relations inside the archive")
    if previous is not None and len(previous):
        both = previous.concat(memory)
        cross = dominance_matrix(both.F, both.violation)[: len(previous), len(previous):]
        if cross.any():
            raise InvariantError("a member of the new archive is dominated by the previous archive")


def _evaluate(problem, X, workers):
    evals = evaluate_population(problem, X, workers)
    F, viol = stack(evals, problem.n_obj)
    return F, viol, [e.info for e in evals]


def optimize(problem, params: CssParams | None = None, seed: int = 0, callback=None,
             check_invariants: bool = False, record_history: bool = False, workers: int | None = None) -> ParetoArchive:
    """Run MoCSS and return the final charged memory.

    All random numbers are drawn in the orchestrating thread before any
    evaluation fan-out, so a seed fixes the run regardless of ``workers``.
    """
    params = params or CssParams()
    rng = np.random.default_rng(seed)
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    n, d = params.n_agents, len(lower)
    a = params.radius(d)
    capacity = params.capacity()
    literal_gate = params.rank_gate == "literal"
    u = np.ones(problem.n_obj)
    calibrate_at = params.calibration_step()

    X = lower + rng.random((n, d)) * (upper - lower)
    V = np.zeros((n, d))
    F, viol, info = _evaluate(problem, X, workers)
    rank = pareto_rank(F, viol)
    memory = archive_update(ParetoArchive.empty(d, problem.n_obj), ParetoArchive(X, F, viol, info), capacity, u)
    history = [memory.F.copy()] if record_history else []
    if check_invariants:
        check_archive(memory)

    for t in range(params.iterations):
        q = charge(F)
        ar = np.where(rng.random((n, n)) < params.attract_prob, 1.0, -1.0)
        r1, r2 = rng.random(n), rng.random(n)
        total = forces(X, q, rank, ar, a, lower, upper, params.distance_eps, literal_gate)
        X_new, _ = move(X, V, total, params.ka, params.kv, r1, r2)
        for j in np.flatnonzero(np.any((X_new < lower) | (X_new > upper), axis=1)):
            X_new[j] = repair(X_new[j], lower, upper, memory.X, params.cmcr, params.par, rng)
        # velocity is the realised displacement, after repair
        V = X_new - X
        X = X_new
        F, viol, info = _evaluate(problem, X, workers)
        rank = pareto_rank(F, viol)
        previous = memory
        memory = archive_update(memory, ParetoArchive(X, F, viol, info), capacity, u)
        if check_invariants:
            check_archive(memory, previous)
        if params.scale_mode != "unit" and t + 1 == calibrate_at:
            finite = memory.F[np.all(np.isfinite(memory.F), axis=1)]
            if len(finite):
                u = scale_factors(finite.max(axis=0), params.alpha, params.scale_mode)
                log.debug("objective scale factors %s", u)
        if record_history:
            history.append(memory.F.copy())
        if callback is not None:
            callback(SwarmState(t + 1, X, V, F, viol, rank, q, memory, u))
    memory.history = history
    return memory
