"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import functools
import itertools
import math
import time

import numpy as np

from netgames import coalition as co
from netgames import dynamics as dy
from netgames import formation as fo
from netgames import scenarios as sc
from netgames import solvers as so
from netgames.game import (
    FiniteGame,
    JointDistribution,
    expected_utility,
    find_exact_potential,
    is_coarse_correlated_equilibrium,
    is_correlated_equilibrium,
    is_pure_ne,
    price_of_anarchy,
)

RESULTS: list = []


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                line = f"criterion {number:2d} FAIL  {title}"
                RESULTS.append(line)
                print(line)
                raise
            line = f"criterion {number:2d} PASS  {title}"
            RESULTS.append(line)
            print(line)
        return run
    return wrap


@criterion(1, "sensor dilemma: unique pure NE (sleep,sleep), only mixed NE is the pure one")
def test_sensor_dilemma_equilibria():
    for e in (0.01, 0.05, 0.2, 0.5, 0.8, 0.99):
        g = sc.sensor_dilemma(e)
        sleep, active = g.action_index(0, "sleep"), g.action_index(0, "active")
        assert so.enumerate_pure_ne(g) == [(sleep, sleep)]
        mixed = so.mixed_ne_2x2(g)
        assert len(mixed) == 1
        # probability of the active action is exactly zero for both players
        assert mixed[0][0][active] == 0.0 and mixed[0][1][active] == 0.0


@criterion(2, "CR dilemma: price of anarchy 3")
def test_cr_dilemma_poa():
    assert abs(price_of_anarchy(sc.cr_dilemma()) - 3.0) <= 1e-12


@criterion(3, "Aumann game: mixed NE payoffs, CE optimum via LP, CE hull vertices")
def test_aumann_ce():
    g = sc.aumann_coordination()
    interior = [m for m in so.mixed_ne_2x2(g) if all(0 < p[0] < 1 for p in m.strategies)]
    assert len(interior) == 1
    pay = [expected_utility(g, interior[0], k) for k in range(2)]
    np.testing.assert_allclose(pay, [2.5, 2.5], atol=1e-9)

    best = so.optimize_over_equilibrium_set(g, [1.0, 1.0], "CE")
    np.testing.assert_allclose(best.payoffs, [10 / 3, 10 / 3], atol=1e-6)
    assert is_correlated_equilibrium(g, best.distribution, 1e-9)

    vertices = {
        (5.0, 1.0): JointDistribution.point_mass((0, 0), (2, 2)),
        (1.0, 5.0): JointDistribution.point_mass((1, 1), (2, 2)),
        (2.5, 2.5): JointDistribution.from_mixed(interior[0]),
    }
    for target, q in vertices.items():
        np.testing.assert_allclose(q.expected_payoffs(g), target, atol=1e-9)
        assert is_correlated_equilibrium(g, q)


@criterion(4, "repeated CR dilemma: trigger plan averages 3, all-defect averages 1")
def test_repeated_cr_dilemma():
    g = sc.cr_dilemma()
    narrow, wide = g.action_index(0, "narrowband"), g.action_index(0, "wideband")
    sched = dy.WeightSchedule("running-average")
    plan = dy.cooperative_trigger_plan(g, (narrow, narrow), (wide, wide))
    coop = dy.repeated_game_run(g, plan, sched, 1000)
    np.testing.assert_allclose(coop.utilities, [3.0, 3.0], atol=1e-9)
    defect = dy.repeated_game_run(g, [dy.always(wide), dy.always(wide)], sched, 1000)
    np.testing.assert_allclose(defect.utilities, [1.0, 1.0], atol=1e-9)


@criterion(5, "duck foraging: 22/11 split is an NE; BRD reaches 11 at the slow site for 20/20 seeds")
def test_duck_foraging():
    g = sc.duck_foraging(33, (24.0, 12.0))
    split = tuple([0] * 22 + [1] * 11)
    assert is_pure_ne(g, split)
    for seed in range(20):
        tr = dy.brd_sequential(g, (0,) * 33, max_iters=200, seed=seed)
        assert tr.converged and tr.iterations <= 200
        assert sc.slow_site_count(tr.final) == 11
        assert is_pure_ne(g, tr.final)


@criterion(6, "MAC band selection: exact potential matches the closed form; BRD climbs it")
def test_mac_band_selection_potential():
    rng = np.random.default_rng(2024)
    for inst in range(20):
        K, N = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        ch = sc.InterferenceChannel.random(K, N, seed=1000 + inst, mac=True)
        g = sc.bs_game(ch)
        cert = find_exact_potential(g)
        assert cert is not None
        closed = np.array([sc.mac_potential(ch, sc.band_powers(ch, p)) for p in g.profiles()])
        found = np.array([cert.value(p) for p in g.profiles()])
        diff = found - closed
        assert diff.max() - diff.min() <= 1e-9
        for seed in range(3):
            init = tuple(int(x) for x in rng.integers(0, N, K))
            tr = dy.brd_sequential(g, init, max_iters=500, seed=seed, potential=cert.value)
            assert np.all(np.diff(tr.extra["potential"]) >= -1e-12)
            assert tr.converged and is_pure_ne(g, tr.final)


@criterion(7, "water-filling: budget, complementary slackness, two-band analytic case")
def test_waterfilling():
    rng = np.random.default_rng(7)
    for _ in range(100):
        levels = rng.exponential(1.0, int(rng.integers(1, 9)))
        budget = float(rng.uniform(0.1, 5.0))
        p = sc.waterfill(levels, budget)
        assert abs(p.sum() - budget) <= 1e-10
        mu = sc.water_level(levels, p)
        on = p > 0
        assert np.all(np.abs(mu - levels[on] - p[on]) <= 1e-9)
        assert np.all(levels[~on] >= mu - 1e-9)
    # full channel path: best response of one user in a random interference channel
    for seed in range(20):
        ch = sc.InterferenceChannel.random(3, 4, seed=seed, budget=2.0)
        powers = np.vstack([sc.waterfill(np.ones(4), 2.0)] * 3)
        br = sc.waterfilling_best_response(ch, 0, powers)
        assert abs(br.sum() - 2.0) <= 1e-10
    assert sc.waterfill([1.0, 2.0], 1.0).tolist() == [1.0, 0.0]


@criterion(8, "regret matching: empirical joint is a 0.05-CCE on four games, 10 seeds each, under 30 s")
def test_regret_matching_cce():
    games = [sc.sensor_dilemma(0.2), sc.cr_dilemma(), sc.aumann_coordination(), sc.matching_pennies()]
    start = time.perf_counter()
    for g in games:
        for seed in range(10):
            tr = dy.regret_matching(g, 100_000, seed)
            assert is_coarse_correlated_equilibrium(g, tr.empirical_joint, 0.05)
    assert time.perf_counter() - start <= 30.0


@criterion(9, "Bush-Mosteller on the normalized sensor dilemma: >= 90/100 runs lock into sleep")
def test_bush_mosteller_sensor():
    g = dy.normalize_utilities(sc.sensor_dilemma(0.2))
    sleep = g.action_index(0, "sleep")
    hits = 0
    for seed in range(100):
        tr = dy.bush_mosteller(g, lam=0.1, T=50_000, seed=seed)  # raises if any iterate leaves the simplex
        assert tr.extra["min_entry"] >= 0.0
        probs = tr.extra["probabilities"]
        hits += all(p[sleep] > 0.99 for p in probs)
    assert hits >= 90


def _shapley_by_orders(game):
    K = game.num_players
    total = np.zeros(K)
    for order in itertools.permutations(range(K)):
        mask = 0
        for i in order:
            total[i] += game.values[mask | 1 << i] - game.values[mask]
            mask |= 1 << i
    return total / math.factorial(K)


def _swap(mask, i, j):
    bi, bj = mask >> i & 1, mask >> j & 1
    if bi != bj:
        mask ^= (1 << i) | (1 << j)
    return mask


@criterion(10, "Shapley: majority game value, four axioms, agreement with all join orders")
def test_shapley():
    majority = co.TUGame.symmetric(3, lambda s: 1.0 if s >= 2 else 0.0)
    np.testing.assert_allclose(co.shapley(majority), [1 / 3] * 3, atol=1e-12)
    rng = np.random.default_rng(10)
    for t in range(50):
        K = int(rng.integers(2, 7))
        g = co.random_tu_game(K, seed=t)
        x = co.shapley(g)
        # efficiency
        assert abs(x.sum() - g.values[-1]) <= 1e-9
        # symmetry: symmetrize players 0 and 1
        masks = np.arange(1 << K)
        sym = g.values + g.values[[_swap(int(m), 0, 1) for m in masks]]
        xs = co.shapley(co.TUGame(K, sym))
        assert abs(xs[0] - xs[1]) <= 1e-9
        # dummy: the last player adds nothing anywhere
        d = K - 1
        dv = g.values[masks & ~(1 << d)]
        assert abs(co.shapley(co.TUGame(K, dv))[d]) <= 1e-9
        # additivity
        h = co.random_tu_game(K, seed=1000 + t)
        np.testing.assert_allclose(co.shapley(g + h), x + co.shapley(h), atol=1e-9)
        # join-order brute force
        np.testing.assert_allclose(x, _shapley_by_orders(g), atol=1e-9)


@criterion(11, "core: majority game empty with LP value 3/2, least core 1/3, Shapley in core of convex games")
def test_core():
    majority = co.TUGame.symmetric(3, lambda s: 1.0 if s >= 2 else 0.0)
    res = co.core_solve(majority)
    assert not res.nonempty
    assert abs(res.lp_value - 1.5) <= 1e-9
    eps, _ = co.least_epsilon_core(majority)
    assert abs(eps - 1 / 3) <= 1e-7
    rng = np.random.default_rng(11)
    passed = 0
    for seed in range(50):
        K = int(rng.integers(2, 9))
        g = co.random_convex_game(K, seed=seed)
        assert co.is_convex(g)[0]
        passed += co.core_solve(g).nonempty and co.in_core(g, co.shapley(g))
    assert passed == 50


@criterion(12, "beamforming: grid NE at maximum-ratio; bargaining improves on it for 10/10 seeds")
def test_beamforming_bargaining():
    for seed in range(10):
        game = sc.beamforming_game(sc.BeamformingInstance.random(4, seed))
        grid = game.discretize(21)
        assert so.enumerate_pure_ne(grid) == [(0, 0)]
        assert grid.action_labels[0][0] == "0"
        ne = game.utilities(([0.0], [0.0]))
        res = so.nash_bargaining(game, ne)
        assert np.all(res.utilities >= ne - 1e-9)
        assert np.any(res.utilities > ne + 1e-9)


@criterion(13, "merge-and-split on the CTD K=7 fixture: converges, stable, every step Pareto-improves")
def test_ctd_merge_split():
    game = sc.ctd_game(sc.ctd_fixture(7, 0))
    rule = fo.AllocationRule("ntu", game)
    for seed in range(20):
        st = fo.merge_split_run(rule, max_iters=500, seed=seed)
        assert st.converged and st.operations <= 500
        assert fo.is_merge_split_stable(st, rule)[0]
        for step in st.history:
            assert fo.pareto_preferred(step["new"], step["old"])
            recomputed = np.zeros(7)
            for block in step["to"]:
                recomputed[block] = rule.payoffs(co.to_mask(block))
            involved = sorted(i for b in step["from"] for i in b)
            np.testing.assert_array_equal(recomputed[involved], step["new"])


@criterion(14, "zero-sum 3x3: LP value agrees with support enumeration on 50 games")
def test_zero_sum_cross_check():
    rng = np.random.default_rng(14)
    for _ in range(50):
        a = rng.normal(size=(3, 3))
        g = FiniteGame(np.stack([a, -a]))
        v, _ = so.zero_sum_value(g)
        eqs = so.support_enumeration_2p(g)
        assert eqs
        for m in eqs:
            assert abs(expected_utility(g, m, 0) - v) <= 1e-6


@criterion(15, "band selection: regret-matching welfare at least the worst pure-NE welfare minus 0.05")
def test_band_selection_rm_welfare():
    for seed in range(20):
        g = sc.two_user_band_selection(seed)
        worst = min(g.payoff_vector(p).sum() for p in so.enumerate_pure_ne(g))
        tr = dy.regret_matching(g, 10_000, seed)
        assert tr.utilities.sum(axis=1).mean() >= worst - 0.05
