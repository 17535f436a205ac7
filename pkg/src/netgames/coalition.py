"""Coalition-form games with transferable utility and their solution concepts.

Coalitions are bitmasks: player ``i`` belongs to coalition ``C`` when bit
``i`` of ``C`` is set. A TU game stores one value per mask.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import _kernels
from .errors import CapacityError, LPError, ShapeError, ValidationError
from .lp import LinearProgram, lp_solve

MAX_PLAYERS = 20
MAX_LP_PLAYERS = 14
MAX_EXHAUSTIVE_PLAYERS = 16
MAX_ENUM_PLAYERS = 10
TOL = 1e-9


def to_mask(members: Iterable[int]) -> int:
    m = 0
    for i in members:
        m |= 1 << int(i)
    return m


def members(mask: int) -> tuple:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcounts(num_players: int) -> np.ndarray:
    pc = np.zeros(1 << num_players, dtype=np.int64)
    for i in range(num_players):
        pc.reshape(-1, 2, 1 << i)[:, 1, :] += 1
    return pc


def coalition_sums(x) -> np.ndarray:
    """``sums[C] = sum of x_i over i in C`` for every mask C."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(1 << x.size)
    for i, xi in enumerate(x):
        out.reshape(-1, 2, 1 << i)[:, 1, :] += xi
    return out


class TUGame:
    """TU game on ``num_players`` players with all ``2^K`` values materialized."""

    def __init__(self, num_players: int, values, name: str = ""):
        K = int(num_players)
        if not 1 <= K <= MAX_PLAYERS:
            raise CapacityError(f"TU games support 1..{MAX_PLAYERS} players, got {K}")
        if callable(values):
            v = np.array([float(values(m)) for m in range(1 << K)])
        else:
            v = np.array(values, dtype=float).ravel()
        if v.size != 1 << K:
            raise ShapeError(f"need {1 << K} coalition values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"non-finite value for coalition {members(int(np.flatnonzero(~np.isfinite(v))[0]))}")
        if v[0] != 0.0:
            raise ValidationError(f"value of the empty coalition must be 0, got {v[0]}")
        v.setflags(write=False)
        self.num_players = K
        self.values = v
        self.name = name

    @classmethod
    def from_members(cls, num_players: int, fn: Callable[[tuple], float], name: str = "") -> "TUGame":
        """Build from ``fn(members_tuple)``; the empty coalition is forced to 0."""
        return cls(num_players, lambda m: 0.0 if m == 0 else fn(members(m)), name)

    @classmethod
    def additive(cls, weights, name: str = "additive") -> "TUGame":
        w = np.asarray(weights, dtype=float)
        return cls(w.size, coalition_sums(w), name)

    @classmethod
    def symmetric(cls, num_players: int, by_size: Callable[[int], float], name: str = "") -> "TUGame":
        pc = popcounts(num_players)
        table = np.array([0.0] + [float(by_size(s)) for s in range(1, num_players + 1)])
        return cls(num_players, table[pc], name)

    @property
    def grand(self) -> int:
        return (1 << self.num_players) - 1

    def value(self, coalition) -> float:
        m = coalition if isinstance(coalition, (int, np.integer)) else to_mask(coalition)
        if not 0 <= m <= self.grand:
            raise ValidationError(f"coalition mask {m} outside {self.num_players} players")
        return float(self.values[m])

    def __add__(self, other: "TUGame") -> "TUGame":
        if other.num_players != self.num_players:
            raise ShapeError("games must have the same players")
        return TUGame(self.num_players, self.values + other.values)

    def __eq__(self, other):
        if not isinstance(other, TUGame):
            return NotImplemented
        return self.num_players == other.num_players and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"<TUGame {self.name!r} K={self.num_players}>"

    def to_dict(self) -> dict:
        vals = {",".join(map(str, members(m))): float(self.values[m]) for m in range(1, self.grand + 1)}
        return {"players": self.num_players, "values": vals}

    @classmethod
    def from_dict(cls, doc: dict) -> "TUGame":
        if "players" not in doc or "values" not in doc:
            raise ValidationError("TU game needs fields 'players' and 'values'")
        K = doc["players"]
        if not isinstance(K, int) or K < 1:
            raise ValidationError("field 'players' must be a positive integer")
        if K > MAX_PLAYERS:
            raise CapacityError(f"TU games support at most {MAX_PLAYERS} players")
        default = doc.get("default")
        v = np.full(1 << K, np.nan if default is None else float(default))
        v[0] = 0.0
        for key, val in doc["values"].items():
            try:
                mem = [int(t) for t in key.split(",")] if key.strip() else []
            except ValueError:
                raise ValidationError(f"values.{key!r}: coalition keys are comma-separated player indices")
            if len(set(mem)) != len(mem) or any(not 0 <= i < K for i in mem):
                raise ValidationError(f"values.{key!r}: invalid member list")
            if not mem and float(val) != 0.0:
                raise ValidationError(f"values.{key!r}: the empty coalition must have value 0")
            v[to_mask(mem)] = float(val)
        missing = np.flatnonzero(np.isnan(v))
        if missing.size:
            raise ValidationError(f"no value for coalition {members(int(missing[0]))} and no default")
        return cls(K, v, doc.get("name", ""))


class NTUGame:
    """Coalition game returning one payoff per member (ascending player order)."""

    def __init__(self, num_players: int, payoffs: Callable[[int], np.ndarray], name: str = ""):
        self.num_players = int(num_players)
        self._fn = payoffs
        self.name = name

    @classmethod
    def from_tu(cls, game: TUGame) -> "NTUGame":
        """Every member of C receives the full ``v(C)``."""
        return cls(game.num_players, lambda m: np.full(bin(m).count("1"), game.values[m]), game.name)

    def payoffs(self, coalition: int) -> np.ndarray:
        out = np.asarray(self._fn(coalition), dtype=float).ravel()
        if out.size != bin(coalition).count("1"):
            raise ShapeError(f"coalition {members(coalition)}: got {out.size} payoffs")
        return out

    def is_symmetric_value(self, coalition: int) -> bool:
        p = self.payoffs(coalition)
        return p.size == 0 or bool(np.all(p == p[0]))


@dataclass(frozen=True)
class Partition:
    """Disjoint non-empty coalitions covering ``range(num_players)``, in canonical order."""

    blocks: tuple
    num_players: int

    def __post_init__(self):
        blocks = [tuple(sorted(int(i) for i in b)) for b in self.blocks]
        if any(not b for b in blocks):
            raise ValidationError("partition blocks must be non-empty")
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(self.num_players)):
            raise ValidationError(f"blocks {blocks} do not partition {self.num_players} players")
        object.__setattr__(self, "blocks", tuple(sorted(blocks)))

    @classmethod
    def from_masks(cls, masks, num_players: int) -> "Partition":
        return cls(tuple(members(m) for m in masks), num_players)

    @classmethod
    def singletons(cls, num_players: int) -> "Partition":
        return cls(tuple((i,) for i in range(num_players)), num_players)

    @classmethod
    def grand(cls, num_players: int) -> "Partition":
        return cls((tuple(range(num_players)),), num_players)

    @property
    def masks(self) -> tuple:
        return tuple(to_mask(b) for b in self.blocks)

    def block_of(self, player: int) -> tuple:
        return next(b for b in self.blocks if player in b)

    def total(self, game: TUGame) -> float:
        return float(sum(game.values[m] for m in self.masks))

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class CoreResult:
    nonempty: bool
    allocation: np.ndarray | None
    lp_value: float
    balancing_weights: dict  # coalition mask -> weight, from the LP dual


def _lp_cap(game: TUGame):
    if game.num_players > MAX_LP_PLAYERS:
        raise CapacityError(f"LP-based coalition solvers support at most {MAX_LP_PLAYERS} players")


def _scale(game: TUGame) -> float:
    return max(1.0, float(np.abs(game.values).max()))


def is_superadditive(game: TUGame, tol: float = TOL):
    """``(True, None)`` or ``(False, (C1, C2))`` with disjoint violating masks."""
    if game.num_players > MAX_EXHAUSTIVE_PLAYERS:
        raise CapacityError(f"exhaustive check supports at most {MAX_EXHAUSTIVE_PLAYERS} players")
    a, b = _kernels.superadditive_violation(np.ascontiguousarray(game.values), tol)
    return (True, None) if a < 0 else (False, (int(a), int(b)))


def is_convex(game: TUGame, tol: float = TOL):
    """``(True, None)`` or ``(False, (i, C1, C2))`` with ``C1 ⊂ C2`` not containing i
    where player i's marginal contribution drops."""
    if game.num_players > MAX_EXHAUSTIVE_PLAYERS:
        raise CapacityError(f"exhaustive check supports at most {MAX_EXHAUSTIVE_PLAYERS} players")
    i, c1, c2 = _kernels.convex_violation(np.ascontiguousarray(game.values), game.num_players, tol)
    return (True, None) if i < 0 else (False, (int(i), int(c1), int(c2)))


def _membership_matrix(num_players: int, masks) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(num_players)) & 1).astype(float)


def core_solve(game: TUGame, tol: float = TOL) -> CoreResult:
    """Minimize total payout subject to every coalition receiving its value.

    The core is non-empty iff that minimum does not exceed ``v(K)``. The LP
    dual weights form a balanced collection; when the core is empty they
    certify it (their weighted value sum exceeds ``v(K)``).
    """
    _lp_cap(game)
    K = game.num_players
    masks = np.arange(1, game.grand + 1)
    A = _membership_matrix(K, masks)
    res = lp_solve(LinearProgram(np.ones(K), A, game.values[1:], bounds=[(None, None)] * K))
    if not res.ok:
        raise LPError(f"core LP ended with status {res.status}")
    weights = {int(m): float(w) for m, w in zip(masks, res.duals_ge) if w > 1e-12}
    vK = float(game.values[-1])
    nonempty = res.value <= vK + tol * _scale(game)
    x = None
    if nonempty:
        x = res.x + (vK - res.x.sum()) / K
    return CoreResult(bool(nonempty), x, float(res.value), weights)


def in_core(game: TUGame, x, tol: float = TOL) -> bool:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != game.num_players:
        raise ShapeError(f"allocation has {x.size} entries for {game.num_players} players")
    _lp_cap(game)
    sums = coalition_sums(x)
    if abs(sums[-1] - game.values[-1]) > tol:
        return False
    return bool(np.all(sums >= game.values - tol))


def least_epsilon_core(game: TUGame, strong: bool = False):
    """``(eps*, x)`` minimizing the uniform (or size-scaled) core relaxation.

    One player has no proper coalitions, so the relaxation is unbounded and
    ``eps*`` is ``-inf``.
    """
    _lp_cap(game)
    K = game.num_players
    if K == 1:
        return -math.inf, np.array([game.values[-1]])
    masks = np.arange(1, game.grand)
    A = _membership_matrix(K, masks)
    slack = A.sum(axis=1, keepdims=True) if strong else np.ones((masks.size, 1))
    c = np.zeros(K + 1)
    c[-1] = 1.0
    E = np.concatenate([np.ones(K), [0.0]])[None, :]
    res = lp_solve(LinearProgram(c, np.hstack([A, slack]), game.values[1:-1], E, [game.values[-1]],
                                 [(None, None)] * (K + 1)))
    if not res.ok:
        raise LPError(f"least-core LP ended with status {res.status}")
    return float(res.x[-1]), res.x[:K]


def is_balanced(game: TUGame, tol: float = TOL) -> bool:
    """Balancedness, decided through the equivalent non-empty-core LP."""
    return core_solve(game, tol).nonempty


def shapley(game: TUGame) -> np.ndarray:
    """Exact Shapley value by the weighted sum over coalitions."""
    _lp_cap(game)
    K = game.num_players
    pc = popcounts(K)
    fact = [math.factorial(s) for s in range(K + 1)]
    weight = np.array([fact[s] * fact[K - s - 1] / fact[K] for s in range(K)] + [0.0])
    v = game.values
    masks = np.arange(1 << K)
    out = np.zeros(K)
    for i in range(K):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        out[i] = float(np.sum(weight[pc[without]] * (v[without | bit] - v[without])))
    return out


@dataclass(frozen=True)
class MonteCarloShapley:
    values: np.ndarray
    stderr: np.ndarray
    samples: int


def _marginals(v: np.ndarray, perms: np.ndarray) -> np.ndarray:
    bits = np.left_shift(1, perms)
    after = np.cumsum(bits, axis=1)
    contrib = v[after] - v[after - bits]
    out = np.empty_like(contrib)
    np.put_along_axis(out, perms, contrib, axis=1)
    return out


def shapley_monte_carlo(game: TUGame, samples: int, seed=None, exhaustive: bool = False,
                        workers: int = 1, chunk: int = 50_000) -> MonteCarloShapley:
    """Average marginal contributions over random join orders.

    With ``exhaustive=True`` every one of the K! orders is used once and the
    result is exact. Otherwise the ``samples`` are split across ``workers``
    streams spawned from ``seed`` and merged by a sample-weighted average.
    """
    K = game.num_players
    v = game.values
    if exhaustive:
        if K > MAX_ENUM_PLAYERS:
            raise CapacityError(f"exhaustive orders limited to {MAX_ENUM_PLAYERS} players")
        perms = np.array(list(itertools.permutations(range(K))), dtype=np.int64)
        m = _marginals(v, perms)
        return MonteCarloShapley(m.mean(axis=0), np.zeros(K), perms.shape[0])
    if samples < 1:
        raise ValidationError("need at least one sample")
    workers = max(1, int(workers))
    shares = [samples // workers + (1 if w < samples % workers else 0) for w in range(workers)]
    streams = np.random.SeedSequence(seed).spawn(workers)
    total, total_sq = np.zeros(K), np.zeros(K)
    for share, ss in zip(shares, streams):
        rng = np.random.default_rng(ss)
        left = share
        while left > 0:
            n = min(chunk, left)
            perms = rng.permuted(np.tile(np.arange(K, dtype=np.int64), (n, 1)), axis=1)
            m = _marginals(v, perms)
            total += m.sum(axis=0)
            total_sq += (m * m).sum(axis=0)
            left -= n
    mean = total / samples
    if samples > 1:
        var = np.clip((total_sq - samples * mean * mean) / (samples - 1), 0.0, None)
        se = np.sqrt(var / samples)
    else:
        se = np.full(K, np.inf)
    return MonteCarloShapley(mean, se, samples)


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def optimal_partition(game: TUGame, method: str = "dp", tol: float = TOL):
    """Partition maximizing the summed coalition values, with its total.

    Ties go to the lexicographically smallest canonical encoding (blocks
    sorted, ordered by their smallest member). ``method`` is ``"dp"``
    (subset dynamic program, up to 16 players) or ``"enumerate"``
    (all set partitions, up to 10 players).
    """
    K = game.num_players
    v = game.values
    eq_tol = tol * _scale(game)
    if method == "enumerate":
        if K > MAX_ENUM_PLAYERS:
            raise CapacityError(f"partition enumeration limited to {MAX_ENUM_PLAYERS} players")
        scored = []
        for part in _set_partitions(list(range(K))):
            p = Partition(tuple(tuple(b) for b in part), K)
            scored.append((p.total(game), p))
        top = max(val for val, _ in scored)
        winner = min((p for val, p in scored if val >= top - eq_tol), key=lambda p: p.blocks)
        return winner, winner.total(game)
    if method != "dp":
        raise ValidationError(f"unknown method {method!r}")
    if K > MAX_EXHAUSTIVE_PLAYERS:
        raise CapacityError(f"partition DP limited to {MAX_EXHAUSTIVE_PLAYERS} players")
    best = _kernels.partition_dp(np.ascontiguousarray(v))
    blocks, s = [], game.grand
    while s:
        low = s & -s
        rest = s ^ low
        choice = None
        t = rest
        while True:
            blk = t | low
            if v[blk] + best[s ^ blk] >= best[s] - eq_tol:
                key = members(blk)
                if choice is None or key < members(choice):
                    choice = blk
            if t == 0:
                break
            t = (t - 1) & rest
        blocks.append(members(choice))
        s ^= choice
    p = Partition(tuple(blocks), K)
    return p, p.total(game)


def coalition_structure_core_check(game: TUGame, x, tol: float = TOL) -> bool:
    """x pays out the optimal-partition total and no coalition can do better alone."""
    _lp_cap(game)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != game.num_players:
        raise ShapeError(f"allocation has {x.size} entries for {game.num_players} players")
    _, total = optimal_partition(game)
    sums = coalition_sums(x)
    return abs(sums[-1] - total) <= tol and bool(np.all(sums >= game.values - tol))


def random_convex_game(num_players: int, seed=None, terms: int | None = None) -> TUGame:
    """Additive part plus a non-negative mix of unanimity games (always convex)."""
    rng = np.random.default_rng(seed)
    K = num_players
    v = coalition_sums(rng.uniform(0.0, 1.0, K))
    masks = np.arange(1 << K)
    for _ in range(terms if terms is not None else 2 * K):
        carrier = int(rng.integers(1, 1 << K))
        v = v + rng.uniform(0.0, 2.0) * ((masks & carrier) == carrier)
    v[0] = 0.0
    return TUGame(K, v, "random-convex")


def random_tu_game(num_players: int, seed=None) -> TUGame:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << num_players)
    v[0] = 0.0
    return TUGame(num_players, v, "random")
