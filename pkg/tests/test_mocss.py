import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archdam import mocss
from archdam.mocss import CalibrationError, CssParams, SwarmState
from archdam.pareto import ParetoArchive, dominates, pareto_rank
from archdam.problems import ZDT1, SpherePair


# --------------------------------------------------------------------- charge

def test_charge_best_everywhere_is_one():
    F = np.array([[0.0, 0.0], [1.0, 2.0], [0.5, 1.0]])
    assert mocss.charge(F)[0] == 1.0


def test_charge_worst_in_one_objective_is_floored():
    F = np.array([[0.0, 2.0], [1.0, 0.0], [0.5, 1.0]])
    q = mocss.charge(F)
    assert q[0] < 1e-11 and q[1] < 1e-11


def test_charge_product_of_factors():
    F = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]])
    assert mocss.charge(F)[2] == pytest.approx(0.25, rel=1e-12)


def test_charge_degenerate_objective_contributes_one():
    F = np.array([[0.0, 3.0], [1.0, 3.0], [0.25, 3.0]])
    assert mocss.charge(F)[2] == pytest.approx(0.75)


def test_charge_handles_failed_members():
    F = np.array([[0.0, 0.0], [np.inf, np.inf], [1.0, 1.0]])
    q = mocss.charge(F)
    assert q[0] == 1.0 and q[1] < 1e-11


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 11))
def test_charge_bounds(seed, k):
    F = np.random.default_rng(seed).random((15, k))
    q = mocss.charge(F)
    assert np.all((q >= 0) & (q <= 1))
    best_everywhere = np.all(F == F.min(axis=0), axis=1)
    assert np.array_equal(q == 1.0, best_everywhere)


# ---------------------------------------------------------------------- force

def test_force_single_particle_zero():
    f = mocss.force(0, np.array([[0.3]]), [1.0], [1], np.ones((1, 1)), 1.0, np.zeros(1), np.ones(1))
    assert np.array_equal(f, [0.0])


def test_force_pair_inside_sphere():
    X = np.array([[0.5], [0.0]])  # particle 0 acts on particle 1
    f = mocss.force(1, X, [1.0, 0.0], [1, 2], np.ones((2, 2)), 1.0, np.zeros(1), np.ones(1))
    assert f[0] == pytest.approx(0.25, rel=1e-8)


def test_force_pair_outside_sphere():
    X = np.array([[0.5], [0.0]])
    f = mocss.force(1, X, [1.0, 0.0], [1, 2], np.ones((2, 2)), 0.25, np.zeros(1), np.ones(1))
    assert f[0] == pytest.approx(1.0 / 0.25 * 0.5, rel=1e-8)


def test_force_same_front_is_zero():
    rng = np.random.default_rng(0)
    X = rng.random((8, 3))
    F = mocss.forces(X, rng.random(8), np.ones(8, dtype=int), np.ones((8, 8)), 0.3, np.zeros(3), np.ones(3))
    assert np.all(F == 0.0)


def test_force_literal_gate_reverses_direction():
    X = np.array([[0.5], [0.0]])
    q, rank, ar = [1.0, 1.0], [1, 2], np.ones((2, 2))
    good = mocss.force(1, X, q, rank, ar, 1.0, np.zeros(1), np.ones(1))
    literal = mocss.force(1, X, q, rank, ar, 1.0, np.zeros(1), np.ones(1), literal_gate=True)
    assert good[0] > 0 and literal[0] == 0.0
    assert mocss.force(0, X, q, rank, ar, 1.0, np.zeros(1), np.ones(1), literal_gate=True)[0] < 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_vectorised_forces_match_reference(seed):
    rng = np.random.default_rng(seed)
    n, d = 12, 3
    lower, upper = np.array([0.0, -5.0, 10.0]), np.array([1.0, 5.0, 30.0])
    X = lower + rng.random((n, d)) * (upper - lower)
    q, rank = rng.random(n), rng.integers(1, 4, n)
    ar = np.where(rng.random((n, n)) < 0.8, 1.0, -1.0)
    F = mocss.forces(X, q, rank, ar, 0.4, lower, upper)
    for j in range(n):
        assert np.allclose(F[j], mocss.force(j, X, q, rank, ar, 0.4, lower, upper), rtol=1e-12, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_rank_gate_property(seed):
    # charges of particles not strictly better than j cannot influence F_j
    rng = np.random.default_rng(seed)
    n = 10
    X, q, rank = rng.random((n, 2)), rng.random(n), rng.integers(1, 4, n)
    ar = np.ones((n, n))
    j = int(rng.integers(n))
    q2 = q.copy()
    q2[rank >= rank[j]] = rng.random(int(np.sum(rank >= rank[j])))
    lo, hi = np.zeros(2), np.ones(2)
    assert np.array_equal(mocss.force(j, X, q, rank, ar, 0.3, lo, hi), mocss.force(j, X, q2, rank, ar, 0.3, lo, hi))


# ----------------------------------------------------------------------- move

def test_move_stationary():
    X = np.array([[0.3, 0.7]])
    Xn, V = mocss.move(X, np.zeros((1, 2)), np.zeros((1, 2)), 2, 2, [0.4], [0.9])
    assert np.array_equal(Xn, X) and np.all(V == 0)


def test_move_substitution():
    Xn, V = mocss.move(np.zeros((1, 2)), np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]]), 2, 2, [1.0], [1.0])
    assert np.array_equal(Xn, [[2.0, 2.0]]) and np.array_equal(V, [[2.0, 2.0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_move_velocity_is_displacement(seed):
    rng = np.random.default_rng(seed)
    X, V, F = rng.normal(size=(3, 5, 4))
    Xn, Vn = mocss.move(X, V, F, 2.0, 2.0, rng.random(5), rng.random(5))
    assert np.array_equal(Vn, Xn - X)


# --------------------------------------------------------------------- repair

LO, HI = np.zeros(3), np.ones(3)


def test_repair_in_bounds_unchanged():
    x = np.array([0.1, 0.5, 0.9])
    assert np.array_equal(mocss.repair(x, LO, HI, np.full((2, 3), 0.3), 0.95, 0.1, np.random.default_rng(0)), x)


def test_repair_cmcr_zero_uniform():
    rng = np.random.default_rng(1)
    vals = [mocss.repair(np.array([1.5, 0.5, 0.5]), LO, HI, np.full((1, 3), 0.3), 0.0, 0.0, rng)[0] for _ in range(500)]
    assert 0 <= min(vals) and max(vals) <= 1 and 0.4 < np.mean(vals) < 0.6 and np.std(vals) > 0.25


def test_repair_cmcr_one_copies_memory():
    x = mocss.repair(np.array([-0.2, 0.5, 1.3]), LO, HI, np.array([[0.11, 0.22, 0.33]]), 1.0, 0.0, np.random.default_rng(2))
    assert np.array_equal(x, [0.11, 0.5, 0.33])


def test_repair_par_stays_between_memory_values():
    rng = np.random.default_rng(3)
    memory = np.array([[0.2, 0.2, 0.2], [0.6, 0.6, 0.6]])
    for _ in range(200):
        x = mocss.repair(np.array([2.0, 0.5, 0.5]), LO, HI, memory, 1.0, 1.0, rng)
        assert 0.2 <= x[0] <= 0.6


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_repair_closure(seed, cmcr, par):
    rng = np.random.default_rng(seed)
    lo, hi = np.array([-1.0, 0.0, 5.0]), np.array([1.0, 2.0, 9.0])
    memory = lo + rng.random((4, 3)) * (hi - lo)
    x = rng.normal(scale=10, size=3)
    y = mocss.repair(x, lo, hi, memory, cmcr, par, rng)
    assert np.all((y >= lo) & (y <= hi))


# ------------------------------------------------------------ scale factors

def test_scale_literal():
    assert np.allclose(mocss.scale_factors([200000, 0.4], 1.0, "literal"), [1, 2e-6])


def test_scale_normalized():
    assert np.allclose(mocss.scale_factors([200000, 0.4], 1.0, "normalized"), [1, 5e5])


@pytest.mark.parametrize("mode", ["literal", "normalized"])
def test_scale_equal_worst(mode):
    assert np.allclose(mocss.scale_factors([3.0, 3.0, 3.0], 2.0, mode), 2.0)


def test_scale_zero_worst_fails():
    with pytest.raises(CalibrationError):
        mocss.scale_factors([1.0, 0.0])


# ------------------------------------------------------------------- archive

def test_objective_distance():
    assert mocss.objective_distance(np.array([[0.0, 0.0], [3.0, 4.0]]), [1, 1])[0, 1] == 5.0


def test_prune_removes_one_of_closest_pair():
    F = np.array([[0.0, 3.0], [1.0, 2.0], [1.2, 1.8], [3.0, 0.0]])
    kept = mocss.prune(F, 3, np.ones(2))
    D = np.sqrt(((F[:, None] - F[None]) ** 2).sum(-1)) + np.diag(np.full(4, np.inf))
    i, j = np.unravel_index(np.argmin(D), D.shape)
    removed = set(range(4)) - set(kept.tolist())
    assert len(kept) == 3 and removed <= {i, j}


def test_prune_keeps_extremes():
    rng = np.random.default_rng(4)
    t = np.sort(rng.random(40))
    F = np.column_stack([t, 1 - np.sqrt(t)])
    kept = mocss.prune(F, 5, np.ones(2))
    assert 0 in kept and 39 in kept and len(kept) == 5


def test_archive_update_no_pruning_when_small():
    F = np.array([[0.0, 1.0], [1.0, 0.0]])
    new = ParetoArchive(np.eye(2), F, np.zeros(2))
    out = mocss.archive_update(ParetoArchive.empty(2, 2), new, 10, np.ones(2))
    assert np.array_equal(out.F, F)


def test_archive_update_drops_dominated_and_duplicates():
    old = ParetoArchive(np.zeros((1, 1)), np.array([[1.0, 1.0]]), np.zeros(1))
    new = ParetoArchive(np.ones((3, 1)), np.array([[1.0, 1.0], [2.0, 2.0], [0.5, 3.0]]), np.zeros(3))
    out = mocss.archive_update(old, new, 10, np.ones(2))
    assert sorted(map(tuple, out.F)) == [(0.5, 3.0), (1.0, 1.0)]
    assert out.X[np.argmax(out.F[:, 0])][0] == 0.0  # the older copy survives


# ------------------------------------------------------------------- optimise

def test_params_validation():
    with pytest.raises(ValueError):
        CssParams(cmcr=1.5)
    with pytest.raises(ValueError):
        CssParams(ka=0)
    with pytest.raises(ValueError):
        CssParams(rank_gate="sideways")
    p = CssParams()
    assert p.capacity() == 100 and p.calibration_step() == 20 and p.radius(4) == pytest.approx(0.2)


def test_zero_iterations_returns_initial_front():
    p = ZDT1(n_var=5)
    params = CssParams(n_agents=20, iterations=0)
    out = mocss.optimize(p, params, seed=3)
    rng = np.random.default_rng(3)
    X = p.lower + rng.random((20, 5)) * (p.upper - p.lower)
    F = np.array([p.evaluate(x).fitness for x in X])
    expected = X[pareto_rank(F) == 1]
    assert sorted(map(tuple, out.X)) == sorted(map(tuple, expected))


def test_same_seed_same_archive():
    p = ZDT1(n_var=6)
    params = CssParams(n_agents=15, iterations=15)
    a = mocss.optimize(p, params, seed=9)
    b = mocss.optimize(p, params, seed=9, workers=3)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.F, b.F)


def test_invariants_hold_each_iteration():
    p = ZDT1(n_var=8)
    seen = []

    def watch(state: SwarmState):
        assert np.all((state.X >= p.lower) & (state.X <= p.upper))
        assert np.all((state.charge >= 0) & (state.charge <= 1))
        seen.append(len(state.archive))

    mocss.optimize(p, CssParams(n_agents=30, iterations=30), seed=1, callback=watch, check_invariants=True)
    assert len(seen) == 30


def test_check_archive_detects_dominance():
    bad = ParetoArchive(np.zeros((2, 1)), np.array([[0.0, 0.0], [1.0, 1.0]]), np.zeros(2))
    with pytest.raises(mocss.InvariantError):
        mocss.check_archive(bad)
    prev = ParetoArchive(np.zeros((1, 1)), np.array([[0.0, 0.0]]), np.zeros(1))
    worse = ParetoArchive(np.zeros((1, 1)), np.array([[1.0, 1.0]]), np.zeros(1))
    with pytest.raises(mocss.InvariantError):
        mocss.check_archive(worse, prev)


def test_history_recorded():
    out = mocss.optimize(ZDT1(n_var=4), CssParams(n_agents=10, iterations=5), seed=0, record_history=True)
    assert len(out.history) == 6


def test_failed_evaluations_do_not_stop_the_run():
    class Flaky(ZDT1):
        def evaluate(self, x):
            from archdam.problems import EvaluationError
            if x[1] > 0.9:
                raise EvaluationError("solver failed")
            return super().evaluate(x)

    out = mocss.optimize(Flaky(n_var=4), CssParams(n_agents=20, iterations=10), seed=2)
    assert len(out) > 0 and np.all(np.isfinite(out.F))


@pytest.mark.xfail(reason="dominance cannot separate members within ~0.09 of the segment; see decisions ledger")
def test_sphere_pair_archive_near_pareto_set():
    p = SpherePair()
    out = mocss.optimize(p, CssParams(iterations=100), seed=0)
    assert p.distance_to_pareto_set(out.X).max() < 0.05


def test_sphere_pair_archive_spans_the_segment():
    p = SpherePair()
    out = mocss.optimize(p, CssParams(iterations=100), seed=0)
    d = p.distance_to_pareto_set(out.X)
    assert np.median(d) < 0.05
    assert out.F[:, 0].min() < 0.01 and out.F[:, 1].min() < 0.01
    for a in out.F:
        assert not any(dominates(b, a) for b in out.F)
