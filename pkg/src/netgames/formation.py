"""Merge-and-split coalition formation under the Pareto order."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .coalition import (
    MAX_ENUM_PLAYERS,
    NTUGame,
    Partition,
    TUGame,
    _set_partitions,
    members,
    optimal_partition,
    shapley,
    to_mask,
)
from .errors import CapacityError, ShapeError, ValidationError

STRICT_MARGIN = 1e-12
MAX_MERGE_GROUP = 4
FULL_SPLIT_AUTO = 6
FULL_SPLIT_MAX = 12


def pareto_preferred(new, old, margin: float = STRICT_MARGIN) -> bool:
    """Nobody loses and somebody gains by more than ``margin``."""
    new = np.asarray(new, dtype=float).ravel()
    old = np.asarray(old, dtype=float).ravel()
    if new.shape != old.shape:
        raise ShapeError(f"payoff vectors differ in length: {new.size} vs {old.size}")
    return bool(np.all(new >= old) and np.any(new > old + margin))


class AllocationRule:
    """How a coalition's worth is shared among its members.

    ``equal``: ``v(C) / |C|`` each. ``shapley``: Shapley value of the game
    restricted to C. ``ntu``: the members' payoff vector as given by an
    NTU game (a TU game is read as "everyone receives v(C)").
    """

    KINDS = ("equal", "shapley", "ntu")

    def __init__(self, kind: str, game):
        if kind not in self.KINDS:
            raise ValidationError(f"unknown allocation rule {kind!r}; choose from {self.KINDS}")
        if kind != "ntu" and not isinstance(game, TUGame):
            raise ValidationError(f"rule {kind!r} needs a TU game")
        self.kind = kind
        self.game = game
        self._ntu = (NTUGame.from_tu(game) if isinstance(game, TUGame) else game) if kind == "ntu" else None
        self._cache: dict[int, np.ndarray] = {}

    @property
    def num_players(self) -> int:
        return self.game.num_players

    def payoffs(self, coalition: int) -> np.ndarray:
        """Per-member payoffs, members in ascending order."""
        hit = self._cache.get(coalition)
        if hit is not None:
            return hit
        mem = members(coalition)
        if self.kind == "equal":
            out = np.full(len(mem), self.game.values[coalition] / len(mem))
        elif self.kind == "shapley":
            out = shapley(_restrict(self.game, mem))
        else:
            out = self._ntu.payoffs(coalition)
        out.setflags(write=False)
        self._cache[coalition] = out
        return out


def _restrict(game: TUGame, mem: tuple) -> TUGame:
    sub = np.zeros(1 << len(mem))
    for m in range(1, sub.size):
        sub[m] = game.values[to_mask(mem[i] for i in range(len(mem)) if m >> i & 1)]
    return TUGame(len(mem), sub)


@dataclass
class FormationState:
    partition: Partition
    payoffs: np.ndarray
    history: list = field(default_factory=list)
    converged: bool = False
    operations: int = 0

    @classmethod
    def start(cls, partition: Partition, rule: AllocationRule) -> "FormationState":
        return cls(partition, _payoff_vector(partition, rule))


def _payoff_vector(partition: Partition, rule: AllocationRule) -> np.ndarray:
    x = np.zeros(partition.num_players)
    for blk in partition.blocks:
        x[list(blk)] = rule.payoffs(to_mask(blk))
    return x


def _ordered(cands: list, rng) -> list:
    if rng is None:
        return cands
    return [cands[i] for i in rng.permutation(len(cands))]


def _merge_candidates(partition: Partition, max_group: int):
    masks = partition.masks
    for size in range(2, max_group + 1):
        yield from itertools.combinations(masks, size)


def find_merge(state: FormationState, rule: AllocationRule, max_group: int = 2, rng=None):
    """First Pareto-improving merge as ``(group_masks, merged_mask, old, new)``, or None."""
    if not 2 <= max_group <= MAX_MERGE_GROUP:
        raise CapacityError(f"merge group size must lie in 2..{MAX_MERGE_GROUP}")
    for group in _ordered(list(_merge_candidates(state.partition, max_group)), rng):
        merged = 0
        for m in group:
            merged |= m
        mem = list(members(merged))
        old = state.payoffs[mem]
        new = rule.payoffs(merged)
        if pareto_preferred(new, old):
            return group, merged, old, new
    return None


def _split_candidates(coalition: int, mode: str):
    mem = members(coalition)
    n = len(mem)
    if n < 2:
        return
    full = mode == "full" or (mode == "auto" and n <= FULL_SPLIT_AUTO)
    if mode == "full" and n > FULL_SPLIT_MAX:
        raise CapacityError(f"full sub-partition enumeration limited to coalitions of {FULL_SPLIT_MAX}")
    low = 1 << mem[0]
    rest = coalition ^ low
    # 2-part splits: the part holding the lowest member, ascending submask order
    sub = 0
    while sub != rest:
        part = sub | low
        yield (part, coalition ^ part)
        sub = (sub - rest) & rest
    if full:
        for blocks in _set_partitions(list(mem)):
            if len(blocks) > 2:
                yield tuple(sorted(to_mask(b) for b in blocks))


def find_split(state: FormationState, rule: AllocationRule, mode: str = "auto", rng=None):
    """First Pareto-improving split as ``(coalition, parts, old, new)``, or None."""
    if mode not in ("auto", "pairs", "full"):
        raise ValidationError(f"unknown split mode {mode!r}")
    for coalition in _ordered(list(state.partition.masks), rng):
        mem = list(members(coalition))
        old = state.payoffs[mem]
        for parts in _ordered(list(_split_candidates(coalition, mode)), rng):
            new_full = np.zeros(rule.num_players)
            for p in parts:
                new_full[list(members(p))] = rule.payoffs(p)
            new = new_full[mem]
            if pareto_preferred(new, old):
                return coalition, parts, old, new
    return None


def _apply(state: FormationState, rule: AllocationRule, kind: str, removed, added, old, new) -> FormationState:
    masks = [m for m in state.partition.masks if m not in removed] + list(added)
    part = Partition.from_masks(masks, state.partition.num_players)
    record = {"op": kind,
              "from": [list(members(m)) for m in removed],
              "to": [list(members(m)) for m in added],
              "old": [float(v) for v in old],
              "new": [float(v) for v in new]}
    return FormationState(part, _payoff_vector(part, rule), state.history + [record], False,
                          state.operations + 1)


def merge_step(state: FormationState, rule: AllocationRule, max_group: int = 2, rng=None):
    """Apply the first Pareto-improving merge; return ``None`` when there is none."""
    hit = find_merge(state, rule, max_group, rng)
    if hit is None:
        return None
    group, merged, old, new = hit
    return _apply(state, rule, "merge", group, (merged,), old, new)


def split_step(state: FormationState, rule: AllocationRule, mode: str = "auto", rng=None):
    """Apply the first Pareto-improving split; return ``None`` when there is none."""
    hit = find_split(state, rule, mode, rng)
    if hit is None:
        return None
    coalition, parts, old, new = hit
    return _apply(state, rule, "split", (coalition,), parts, old, new)


def merge_split_run(rule: AllocationRule, init: Partition | None = None, max_iters: int = 500,
                    max_group: int = 2, split_mode: str = "auto", seed=None) -> FormationState:
    """Alternate merges and splits until a full pass changes nothing.

    ``seed=None`` scans candidates in lexicographic order; any other seed
    shuffles each scan. ``max_iters`` bounds the number of applied
    operations; hitting it leaves ``converged`` False.
    """
    K = rule.num_players
    state = FormationState.start(init if init is not None else Partition.singletons(K), rule)
    rng = None if seed is None else np.random.default_rng(seed)
    while state.operations < max_iters:
        changed = False
        while state.operations < max_iters:
            nxt = merge_step(state, rule, max_group, rng)
            if nxt is None:
                break
            state, changed = nxt, True
        while state.operations < max_iters:
            nxt = split_step(state, rule, split_mode, rng)
            if nxt is None:
                break
            state, changed = nxt, True
        if not changed:
            state.converged = True
            break
    return state


def is_merge_split_stable(state: FormationState, rule: AllocationRule, max_group: int = 2,
                          split_mode: str = "auto"):
    """``(True, None)`` or ``(False, witness)`` naming an improving merge or split."""
    hit = find_merge(state, rule, max_group)
    if hit is not None:
        return False, {"op": "merge", "coalitions": [list(members(m)) for m in hit[0]]}
    hit = find_split(state, rule, split_mode)
    if hit is not None:
        return False, {"op": "split", "coalition": list(members(hit[0])),
                       "parts": [list(members(p)) for p in hit[1]]}
    return True, None


def _pareto_optimal_partition(partition: Partition, rule: AllocationRule) -> bool:
    x = _payoff_vector(partition, rule)
    for blocks in _set_partitions(list(range(rule.num_players))):
        other = Partition(tuple(tuple(b) for b in blocks), rule.num_players)
        if pareto_preferred(_payoff_vector(other, rule), x):
            return False
    return True


def compare_with_centralized(game: TUGame, rule: AllocationRule, max_iters: int = 500, seed=None) -> dict:
    """Distributed merge-and-split outcome next to the welfare-optimal partition."""
    if game.num_players > MAX_ENUM_PLAYERS:
        raise CapacityError(f"comparison limited to {MAX_ENUM_PLAYERS} players")
    state = merge_split_run(rule, max_iters=max_iters, seed=seed)
    best, best_total = optimal_partition(game)
    return {
        "distributed": state.partition,
        "distributed_total": state.partition.total(game),
        "centralized": best,
        "centralized_total": best_total,
        "coincide": state.partition == best,
        "converged": state.converged,
        "distributed_pareto_optimal": _pareto_optimal_partition(state.partition, rule),
        "operations": state.operations,
    }
