import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netgames import coalition as co
from netgames import formation as fo
from netgames import scenarios as sc
from netgames.errors import CapacityError, ShapeError, ValidationError


def square(K):
    return co.TUGame.symmetric(K, lambda s: float(s * s), "square")


def test_pareto_order():
    assert fo.pareto_preferred([2.0, 1.0], [1.0, 1.0])
    assert not fo.pareto_preferred([1.0, 1.0], [1.0, 1.0])
    assert not fo.pareto_preferred([3.0, 0.5], [1.0, 1.0])
    with pytest.raises(ShapeError):
        fo.pareto_preferred([1.0], [1.0, 2.0])


def test_allocation_rules():
    g = square(3)
    np.testing.assert_allclose(fo.AllocationRule("equal", g).payoffs(0b111), [3.0, 3.0, 3.0])
    np.testing.assert_allclose(fo.AllocationRule("shapley", g).payoffs(0b011), [2.0, 2.0])
    np.testing.assert_allclose(fo.AllocationRule("ntu", g).payoffs(0b011), [4.0, 4.0])
    with pytest.raises(ValidationError):
        fo.AllocationRule("banzhaf", g)


@given(st.integers(0, 2**31), st.integers(2, 5))
def test_tu_rules_are_efficient(seed, K):
    g = co.random_tu_game(K, seed)
    for kind in ("equal", "shapley"):
        rule = fo.AllocationRule(kind, g)
        for m in range(1, 1 << K):
            assert rule.payoffs(m).sum() == pytest.approx(g.values[m], abs=1e-9)


def test_first_merge_under_square_game():
    rule = fo.AllocationRule("equal", square(4))
    st0 = fo.FormationState.start(co.Partition.singletons(4), rule)
    nxt = fo.merge_step(st0, rule)
    assert nxt.partition.blocks[0] == (0, 1)
    np.testing.assert_allclose(nxt.history[0]["new"], [2.0, 2.0])


def test_merge_blocked_by_detection_cap():
    net = sc.CTDNetwork([0.6, 0.6], [0.04, 0.04], 0.05)
    rule = fo.AllocationRule("ntu", sc.ctd_game(net))
    st0 = fo.FormationState.start(co.Partition.singletons(2), rule)
    assert fo.merge_step(st0, rule) is None


def test_split_never_fires_after_improving_merges():
    rule = fo.AllocationRule("equal", square(5))
    st = fo.merge_split_run(rule)
    assert all(step["op"] == "merge" for step in st.history)


def test_split_from_grand_coalition():
    lonely = co.TUGame.from_members(4, lambda c: 1.0 if len(c) == 1 else 0.0)
    st = fo.merge_split_run(fo.AllocationRule("equal", lonely), co.Partition.grand(4))
    assert st.partition == co.Partition.singletons(4)
    assert st.converged


def test_split_decision_invariant_under_relabeling():
    g = co.TUGame.symmetric(4, lambda s: [0.0, 1.0, 0.8, 0.5, 0.1][s])
    rule = fo.AllocationRule("equal", g)
    for perm in ([0, 1, 2, 3], [3, 1, 0, 2], [2, 3, 1, 0]):
        blocks = (tuple(perm[:3]), (perm[3],))
        state = fo.FormationState.start(co.Partition(blocks, 4), rule)
        hit = fo.find_split(state, rule)
        assert hit is not None
        assert sorted(len(co.members(p)) for p in hit[1]) == [1, 2]


def test_square_game_reaches_grand_coalition():
    st = fo.merge_split_run(fo.AllocationRule("equal", square(6)))
    assert st.converged and st.partition == co.Partition.grand(6)


def test_stability_witness():
    rule = fo.AllocationRule("equal", square(3))
    st0 = fo.FormationState.start(co.Partition.singletons(3), rule)
    ok, witness = fo.is_merge_split_stable(st0, rule)
    assert not ok and witness["op"] == "merge"


@given(st.integers(0, 2**31), st.integers(2, 6), st.sampled_from(["equal", "shapley", "ntu"]))
def test_runs_terminate_stable_and_improving(seed, K, kind):
    g = co.random_tu_game(K, seed)
    rule = fo.AllocationRule(kind, g)
    st = fo.merge_split_run(rule, max_iters=500)
    assert st.converged
    assert fo.is_merge_split_stable(st, rule)[0]
    for step in st.history:
        assert fo.pareto_preferred(step["new"], step["old"])
    np.testing.assert_allclose(st.payoffs, fo._payoff_vector(st.partition, rule))


def test_deterministic_histories():
    g = sc.ctd_game(sc.ctd_fixture(7, 0))
    rule = fo.AllocationRule("ntu", g)
    assert fo.merge_split_run(rule).history == fo.merge_split_run(rule).history
    assert fo.merge_split_run(rule, seed=4).history == fo.merge_split_run(rule, seed=4).history


def test_max_iters_leaves_flag_false():
    st = fo.merge_split_run(fo.AllocationRule("equal", square(6)), max_iters=2)
    assert not st.converged and st.operations == 2


def test_merge_group_limits():
    rule = fo.AllocationRule("equal", square(4))
    st0 = fo.FormationState.start(co.Partition.singletons(4), rule)
    with pytest.raises(CapacityError):
        fo.merge_step(st0, rule, max_group=5)
    three = fo.merge_step(st0, rule, max_group=3)
    assert three is not None


def test_full_split_capacity():
    rule = fo.AllocationRule("equal", square(13))
    st0 = fo.FormationState.start(co.Partition.grand(13), rule)
    with pytest.raises(CapacityError):
        fo.find_split(st0, rule, mode="full")


def test_distributed_and_centralized_differ_on_detection_instance():
    g = sc.ctd_game(sc.ctd_fixture(5, 0))
    out = fo.compare_with_centralized(g, fo.AllocationRule("ntu", g))
    assert not out["coincide"]
    assert out["distributed_total"] <= out["centralized_total"] + 1e-12
    assert out["converged"]
