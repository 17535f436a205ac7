import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog
from strategies import bimatrix_games, finite_games, random_game

from netgames import scenarios as sc
from netgames.errors import DisagreementError, ShapeError, ValidationError
from netgames.game import (
    FiniteGame,
    MixedProfile,
    expected_utility,
    is_coarse_correlated_equilibrium,
    is_correlated_equilibrium,
    is_mixed_ne,
    is_pure_ne,
)
from netgames.solvers import (
    enumerate_pure_ne,
    equilibrium_constraints,
    mixed_ne_2x2,
    nash_bargaining,
    optimize_over_equilibrium_set,
    support_enumeration_2p,
    zero_sum_value,
)


def test_pure_ne_examples():
    assert enumerate_pure_ne(sc.matching_pennies()) == []
    assert enumerate_pure_ne(sc.coordination_game(1.0)) == [(0, 0), (1, 1)]


@given(finite_games())
def test_enumerated_profiles_are_ne_and_complete(g):
    found = enumerate_pure_ne(g)
    assert found == sorted(found)
    assert found == [p for p in g.profiles() if is_pure_ne(g, p)]


def test_matching_pennies_mixed():
    res = mixed_ne_2x2(sc.matching_pennies())
    assert len(res) == 1 and res[0].close_to(MixedProfile.uniform((2, 2)))


@given(st.integers(0, 2**31))
def test_2x2_closed_form_agrees_with_support_enumeration(seed):
    g = random_game(seed, (2, 2), integer=False)
    closed = mixed_ne_2x2(g)
    enum = support_enumeration_2p(g)
    assert len(closed) == len(enum)
    for m in closed:
        assert is_mixed_ne(g, m, 1e-9)
        assert any(m.close_to(e) for e in enum)


@given(bimatrix_games())
def test_support_enumeration_outputs_are_equilibria(g):
    for m in support_enumeration_2p(g):
        assert is_mixed_ne(g, m, 1e-7)


def test_two_player_only():
    with pytest.raises(ShapeError):
        support_enumeration_2p(FiniteGame(np.zeros((3, 2, 2, 2))))


def test_zero_sum_matching_pennies():
    v, prof = zero_sum_value(sc.matching_pennies())
    assert v == pytest.approx(0.0, abs=1e-12)
    assert prof.close_to(MixedProfile.uniform((2, 2)), 1e-9)


def test_zero_sum_rejects_general_sum():
    with pytest.raises(ValidationError):
        zero_sum_value(sc.cr_dilemma())


@given(st.integers(0, 2**31), st.integers(2, 5), st.integers(2, 5))
def test_zero_sum_value_matches_scipy(seed, n, m):
    a = np.random.default_rng(seed).normal(size=(n, m))
    g = FiniteGame(np.stack([a, -a]))
    v, prof = zero_sum_value(g)
    # row player's maximin LP solved independently: max t s.t. x'A >= t, sum x = 1
    c = np.r_[np.zeros(n), -1.0]
    A_ub = np.hstack([-a.T, np.ones((m, 1))])
    ref = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=[np.r_[np.ones(n), 0.0]], b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    assert v == pytest.approx(-ref.fun, abs=1e-7)
    # both security levels equal the value
    assert (prof[0] @ a).min() == pytest.approx(v, abs=1e-6)
    assert (a @ prof[1]).max() == pytest.approx(v, abs=1e-6)


def test_equilibrium_constraint_rows():
    g = sc.aumann_coordination()
    assert equilibrium_constraints(g, "CE").shape == (4, 4)
    assert equilibrium_constraints(g, "CCE").shape == (4, 4)
    with pytest.raises(ValidationError):
        equilibrium_constraints(g, "NE")


@given(finite_games(max_players=3, max_actions=3, integer=False))
def test_ce_optimum_below_cce_optimum(g):
    w = np.ones(g.num_players)
    ce = optimize_over_equilibrium_set(g, w, "CE")
    cce = optimize_over_equilibrium_set(g, w, "CCE")
    assert is_correlated_equilibrium(g, ce.distribution, 1e-6)
    assert is_coarse_correlated_equilibrium(g, cce.distribution, 1e-6)
    assert ce.objective <= cce.objective + 1e-7


def test_ce_optimum_matches_scipy():
    g = sc.aumann_coordination()
    rows = equilibrium_constraints(g, "CE")
    w = g.payoffs.reshape(2, -1).sum(axis=0)
    ref = linprog(-w, A_ub=-rows, b_ub=np.zeros(rows.shape[0]), A_eq=[np.ones(4)], b_eq=[1.0], method="highs")
    res = optimize_over_equilibrium_set(g, [1.0, 1.0], "CE")
    assert res.objective == pytest.approx(-ref.fun, abs=1e-9)
    assert res.objective == pytest.approx(20 / 3, abs=1e-9)


# -- bargaining -----------------------------------------------------------------

def test_finite_bargaining_picks_best_product():
    g = sc.cr_dilemma()
    res = nash_bargaining(g, [1.0, 1.0])
    assert res.argument == (0, 0)
    assert res.nash_product == pytest.approx(4.0)


def test_disagreement():
    with pytest.raises(DisagreementError):
        nash_bargaining(sc.cr_dilemma(), [10.0, 10.0])


@given(finite_games(max_players=3, integer=False), st.lists(st.floats(0.1, 5.0), min_size=3, max_size=3),
       st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3))
def test_bargaining_invariant_under_affine_rescaling(g, scale, shift):
    K = g.num_players
    lam = g.payoffs.reshape(K, -1).min(axis=1) - 0.5
    scale, shift = np.array(scale[:K]), np.array(shift[:K])
    base = nash_bargaining(g, lam)
    moved = nash_bargaining(g.affine(scale, shift), scale * lam + shift)
    prod = np.prod(g.payoff_vector(moved.argument) - lam)
    # same argmax up to ties in the Nash product
    assert prod == pytest.approx(base.nash_product, rel=1e-9, abs=1e-12)


def test_symmetric_continuous_game_gives_symmetric_split():
    res = nash_bargaining(sc.cournot_duopoly(), [0.0, 0.0], grid=41)
    q1, q2 = res.argument[0][0], res.argument[1][0]
    assert q1 == pytest.approx(q2, abs=1e-12)
    assert q1 == pytest.approx(0.25, abs=1e-9)


def test_bargaining_grid_refinement_is_stable():
    game = sc.beamforming_game(sc.BeamformingInstance.random(4, 0))
    ne = game.utilities(([0.0], [0.0]))
    coarse = nash_bargaining(game, ne, grid=21)
    fine = nash_bargaining(game, ne, grid=41)
    assert abs(coarse.nash_product - fine.nash_product) < 1e-3
    assert np.all(fine.utilities >= ne)


def test_status_quo_length_checked():
    with pytest.raises(ValidationError):
        nash_bargaining(sc.cr_dilemma(), [0.0])


def test_expected_payoff_of_support_equilibrium_is_value():
    g = sc.matching_pennies()
    (m,) = support_enumeration_2p(g)
    assert expected_utility(g, m, 0) == pytest.approx(0.0, abs=1e-12)
