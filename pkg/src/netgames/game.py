"""Strategic-form games and the solution-concept predicates that run on them.

Nothing in this module searches for equilibria; it represents games and
checks candidate profiles/distributions. Searches live in ``solvers``.

Conventions
-----------
* Players and actions are 0-based indices.
* A dense payoff tensor has shape ``(K, N_1, ..., N_K)``; ``payoffs[k][s]``
  is player k's utility at pure profile ``s``.
* Joint distributions are flattened in C (lexicographic) profile order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import CapabilityError, CapacityError, ShapeError, UndefinedRatioError, ValidationError

MAX_CELLS = 10**7
DEFAULT_TOL = 1e-9
_SIMPLEX_TOL = 1e-9

Profile = tuple  # pure profile: tuple of ints


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class FiniteGame:
    """K-player game with finite action sets.

    Most games are built from a dense payoff tensor. Games too large to
    materialize (e.g. 33 ducks with two sites each) can instead be backed
    by a payoff function via :meth:`from_function`; per-profile operations
    work on both, brute-force operations need the dense tensor and raise
    :class:`CapacityError` past ``MAX_CELLS`` profiles.
    """

    def __init__(self, payoffs, player_names=None, action_labels=None, name: str = ""):
        arr = np.array(payoffs, dtype=float)
        if arr.ndim < 2 or arr.shape[0] != arr.ndim - 1:
            raise ShapeError(f"payoff tensor must have shape (K, N_1..N_K); got {arr.shape}")
        if min(arr.shape[1:]) < 1:
            raise ShapeError("every player needs at least one action")
        if not np.all(np.isfinite(arr)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
            raise ValidationError(f"non-finite payoff at (player, profile) = {bad}")
        if arr.size // arr.shape[0] > MAX_CELLS:
            raise CapacityError(f"{arr.size // arr.shape[0]} profiles exceeds cap {MAX_CELLS}")
        self._tensor = _readonly(arr)
        self._fn = None
        self.action_counts = tuple(int(n) for n in arr.shape[1:])
        self.name = name
        self._set_labels(player_names, action_labels)

    @classmethod
    def from_function(cls, action_counts: Sequence[int], fn: Callable[[int, Profile], float],
                      player_names=None, action_labels=None, name: str = "") -> "FiniteGame":
        """Game whose payoff ``fn(k, profile)`` is evaluated on demand."""
        self = cls.__new__(cls)
        counts = tuple(int(n) for n in action_counts)
        if not counts or min(counts) < 1:
            raise ShapeError("every player needs at least one action")
        self._tensor = None
        self._fn = fn
        self.action_counts = counts
        self.name = name
        self._set_labels(player_names, action_labels)
        return self

    def _set_labels(self, player_names, action_labels):
        K = len(self.action_counts)
        if player_names is not None:
            player_names = tuple(str(p) for p in player_names)
            if len(player_names) != K or len(set(player_names)) != K:
                raise ValidationError("player names must be unique, one per player")
        if action_labels is not None:
            action_labels = tuple(tuple(str(a) for a in acts) for acts in action_labels)
            if len(action_labels) != K:
                raise ValidationError("need one action-label list per player")
            for k, acts in enumerate(action_labels):
                if len(acts) != self.action_counts[k] or len(set(acts)) != len(acts):
                    raise ValidationError(f"action labels of player {k} must be unique, one per action")
        self.player_names = player_names
        self.action_labels = action_labels

    # -- shape ---------------------------------------------------------------
    @property
    def num_players(self) -> int:
        return len(self.action_counts)

    @property
    def num_profiles(self) -> int:
        return int(np.prod(self.action_counts, dtype=np.int64))

    @property
    def is_dense(self) -> bool:
        return self._tensor is not None

    @property
    def payoffs(self) -> np.ndarray:
        """Dense tensor of shape ``(K, N_1, ..., N_K)`` (materialized on demand)."""
        if self._tensor is None:
            if self.num_profiles > MAX_CELLS:
                raise CapacityError(f"{self.num_profiles} profiles exceeds cap {MAX_CELLS}")
            K = self.num_players
            arr = np.empty((K,) + self.action_counts)
            for s in self.profiles():
                for k in range(K):
                    arr[(k,) + s] = self._fn(k, s)
            self._tensor = _readonly(arr)
        return self._tensor

    def profiles(self) -> Iterator[Profile]:
        return itertools.product(*(range(n) for n in self.action_counts))

    def check_profile(self, profile) -> Profile:
        s = tuple(int(a) for a in profile)
        if len(s) != self.num_players:
            raise ShapeError(f"profile has {len(s)} entries, game has {self.num_players} players")
        for k, (a, n) in enumerate(zip(s, self.action_counts)):
            if not 0 <= a < n:
                raise ShapeError(f"action {a} out of range for player {k} ({n} actions)")
        return s

    # -- evaluation ----------------------------------------------------------
    def payoff(self, player: int, profile) -> float:
        s = self.check_profile(profile)
        if self._tensor is not None:
            return float(self._tensor[(player,) + s])
        return float(self._fn(player, s))

    def payoff_vector(self, profile) -> np.ndarray:
        return np.array([self.payoff(k, profile) for k in range(self.num_players)])

    def deviation_payoffs(self, player: int, profile) -> np.ndarray:
        """Player's utility for each own action, others fixed at ``profile``."""
        s = list(self.check_profile(profile))
        if self._tensor is not None:
            idx = tuple(slice(None) if j == player else a for j, a in enumerate(s))
            return np.array(self._tensor[player][idx], dtype=float)
        out = np.empty(self.action_counts[player])
        for a in range(self.action_counts[player]):
            s[player] = a
            out[a] = self._fn(player, tuple(s))
        return out

    def welfare(self) -> np.ndarray:
        return self.payoffs.sum(axis=0)

    def action_index(self, player: int, label) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        if self.action_labels is None:
            raise ValidationError("game has no action labels")
        return self.action_labels[player].index(str(label))

    def profile_from_labels(self, labels) -> Profile:
        return tuple(self.action_index(k, a) for k, a in enumerate(labels))

    def affine(self, scale, shift) -> "FiniteGame":
        """Per-player positive affine transform ``scale[k] * u_k + shift[k]``."""
        scale = np.broadcast_to(np.asarray(scale, float), (self.num_players,))
        shift = np.broadcast_to(np.asarray(shift, float), (self.num_players,))
        if np.any(scale <= 0):
            raise ValidationError("affine scale must be positive")
        expand = (slice(None),) + (None,) * self.num_players
        return FiniteGame(self.payoffs * scale[expand] + shift[expand],
                          self.player_names, self.action_labels, self.name)

    def __eq__(self, other):
        if not isinstance(other, FiniteGame):
            return NotImplemented
        return (self.action_counts == other.action_counts
                and self.player_names == other.player_names
                and self.action_labels == other.action_labels
                and np.array_equal(self.payoffs, other.payoffs))

    __hash__ = None

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<FiniteGame{label} K={self.num_players} actions={self.action_counts}>"

    # -- JSON ----------------------------------------------------------------
    def to_dict(self) -> dict:
        labels = self.action_labels or tuple(tuple(str(a) for a in range(n)) for n in self.action_counts)
        doc = {"players": self.num_players,
               "actions": [list(a) for a in labels],
               "payoffs": self.payoffs.tolist()}
        if self.player_names is not None:
            doc["player_names"] = list(self.player_names)
        if self.name:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FiniteGame":
        for key in ("players", "actions", "payoffs"):
            if key not in doc:
                raise ValidationError(f"missing field '{key}'")
        K = doc["players"]
        if not isinstance(K, int) or K < 1:
            raise ValidationError("field 'players' must be a positive integer")
        actions = doc["actions"]
        if not isinstance(actions, list) or len(actions) != K:
            raise ShapeError(f"field 'actions' must list {K} action arrays")
        counts = tuple(len(a) for a in actions)
        payoffs = doc["payoffs"]
        if not isinstance(payoffs, list) or len(payoffs) != K:
            raise ShapeError(f"field 'payoffs' must hold {K} per-player arrays")
        n_prof = int(np.prod(counts))
        rows = []
        for k, block in enumerate(payoffs):
            if isinstance(block, list) and len(block) == n_prof and all(
                    isinstance(v, (int, float)) for v in block) and K > 1:
                rows.append(np.array(block, float).reshape(counts))  # flat lexicographic form
            else:
                _check_nested(block, counts, (), k)
                rows.append(np.array(block, float))
        return cls(np.stack(rows), doc.get("player_names"), actions, doc.get("name", ""))


def _check_nested(block, counts, prefix, player):
    depth = len(prefix)
    if depth == len(counts):
        if not isinstance(block, (int, float)) or isinstance(block, bool):
            raise ShapeError(f"payoffs[{player}] at profile {prefix}: expected a number")
        return
    if not isinstance(block, list) or len(block) != counts[depth]:
        got = len(block) if isinstance(block, list) else type(block).__name__
        raise ShapeError(f"payoffs[{player}] at profile prefix {prefix}: "
                         f"expected {counts[depth]} entries, got {got}")
    for i, sub in enumerate(block):
        _check_nested(sub, counts, prefix + (i,), player)


@dataclass(frozen=True)
class MixedProfile:
    """One probability vector per player."""

    strategies: tuple

    def __post_init__(self):
        clean = []
        for k, p in enumerate(self.strategies):
            p = np.array(p, dtype=float).ravel()
            if p.size == 0 or np.any(p < -_SIMPLEX_TOL) or abs(p.sum() - 1.0) > _SIMPLEX_TOL:
                raise ValidationError(f"strategy of player {k} is not a probability vector: {p}")
            clean.append(_readonly(np.clip(p, 0.0, None)))
        object.__setattr__(self, "strategies", tuple(clean))

    @classmethod
    def pure(cls, profile, action_counts) -> "MixedProfile":
        return cls(tuple(np.eye(n)[a] for a, n in zip(profile, action_counts)))

    @classmethod
    def uniform(cls, action_counts) -> "MixedProfile":
        return cls(tuple(np.full(n, 1.0 / n) for n in action_counts))

    @property
    def action_counts(self) -> tuple:
        return tuple(p.size for p in self.strategies)

    def __getitem__(self, k) -> np.ndarray:
        return self.strategies[k]

    def __len__(self):
        return len(self.strategies)

    def close_to(self, other: "MixedProfile", tol: float = 1e-6) -> bool:
        return self.action_counts == other.action_counts and all(
            np.max(np.abs(a - b)) <= tol for a, b in zip(self.strategies, other.strategies))

    def __eq__(self, other):
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return self.action_counts == other.action_counts and all(
            np.array_equal(a, b) for a, b in zip(self.strategies, other.strategies))

    __hash__ = None


@dataclass(frozen=True)
class JointDistribution:
    """Probability of every pure profile, flattened in lexicographic order."""

    probs: np.ndarray
    action_counts: tuple

    def __post_init__(self):
        counts = tuple(int(n) for n in self.action_counts)
        p = np.array(self.probs, dtype=float).ravel()
        if p.size != int(np.prod(counts)):
            raise ShapeError(f"{p.size} probabilities for {int(np.prod(counts))} profiles")
        if np.any(p < -_SIMPLEX_TOL) or abs(p.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValidationError("joint distribution must be non-negative and sum to 1")
        object.__setattr__(self, "probs", _readonly(np.clip(p, 0.0, None)))
        object.__setattr__(self, "action_counts", counts)

    @classmethod
    def from_mixed(cls, profile: MixedProfile) -> "JointDistribution":
        q = np.ones(())
        for p in profile.strategies:
            q = np.multiply.outer(q, p)
        return cls(q.ravel(), profile.action_counts)

    @classmethod
    def point_mass(cls, profile, action_counts) -> "JointDistribution":
        q = np.zeros(action_counts)
        q[tuple(profile)] = 1.0
        return cls(q.ravel(), action_counts)

    @classmethod
    def uniform_over(cls, profiles, action_counts) -> "JointDistribution":
        q = np.zeros(action_counts)
        for s in profiles:
            q[tuple(s)] += 1.0
        return cls(q.ravel() / q.sum(), action_counts)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape(self.action_counts)

    def marginal(self, player: int) -> np.ndarray:
        axes = tuple(j for j in range(len(self.action_counts)) if j != player)
        return self.tensor.sum(axis=axes)

    def expected_payoffs(self, game: FiniteGame) -> np.ndarray:
        _check_counts(game, self.action_counts)
        return game.payoffs.reshape(game.num_players, -1) @ self.probs


@dataclass(frozen=True)
class ContinuousGame:
    """Game with compact box action sets (one real vector per player).

    ``utility(k, profile)`` takes a tuple of 1-D arrays. ``best_response``
    and ``gradient`` (own-action partial derivatives) are optional oracles.
    ``feasible`` optionally carves a subset out of the box (e.g. a power
    budget); the box itself must stay finite.
    """

    lower: tuple
    upper: tuple
    utility: Callable
    best_response: Callable | None = None
    gradient: Callable | None = None
    feasible: Callable | None = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lo = tuple(_readonly(np.atleast_1d(np.array(l, dtype=float))) for l in self.lower)
        hi = tuple(_readonly(np.atleast_1d(np.array(h, dtype=float))) for h in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ShapeError("need matching lower/upper bounds for at least one player")
        for k, (l, h) in enumerate(zip(lo, hi)):
            if l.shape != h.shape or not (np.all(np.isfinite(l)) and np.all(np.isfinite(h))):
                raise ValidationError(f"player {k}: bounds must be finite and equally shaped")
            if np.any(l > h):
                raise ValidationError(f"player {k}: lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def num_players(self) -> int:
        return len(self.lower)

    def as_profile(self, profile) -> tuple:
        prof = tuple(np.atleast_1d(np.array(p, dtype=float)) for p in profile)
        if len(prof) != self.num_players:
            raise ShapeError(f"profile has {len(prof)} entries, game has {self.num_players} players")
        for k, p in enumerate(prof):
            if p.shape != self.lower[k].shape:
                raise ShapeError(f"player {k}: action shape {p.shape} != {self.lower[k].shape}")
        return prof

    def utilities(self, profile) -> np.ndarray:
        prof = self.as_profile(profile)
        return np.array([self.utility(k, prof) for k in range(self.num_players)])

    def action_grid(self, player: int, levels: int) -> list:
        """All points of a ``levels``-per-coordinate lattice on the player's box."""
        axes = [np.linspace(l, h, levels) for l, h in zip(self.lower[player], self.upper[player])]
        return [np.array(p) for p in itertools.product(*axes)]

    def discretize(self, levels: int) -> FiniteGame:
        """Finite game on a lattice of each player's box (feasibility ignored)."""
        grids = [self.action_grid(k, levels) for k in range(self.num_players)]
        counts = tuple(len(g) for g in grids)
        if int(np.prod(counts)) > MAX_CELLS:
            raise CapacityError(f"{int(np.prod(counts))} lattice profiles exceeds cap {MAX_CELLS}")
        tensor = np.empty((self.num_players,) + counts)
        for s in itertools.product(*(range(n) for n in counts)):
            prof = tuple(grids[k][a] for k, a in enumerate(s))
            for k in range(self.num_players):
                tensor[(k,) + s] = self.utility(k, prof)
        labels = [[",".join(f"{v:.12g}" for v in p) for p in g] for g in grids]
        return FiniteGame(tensor, action_labels=labels, name=self.name)

    def respond(self, player: int, profile) -> np.ndarray:
        if self.best_response is None:
            raise CapabilityError(f"game {self.name or ''} has no best-response oracle")
        prof = self.as_profile(profile)
        return np.clip(np.atleast_1d(np.array(self.best_response(player, prof), float)),
                       self.lower[player], self.upper[player])


@dataclass(frozen=True)
class PotentialCertificate:
    """Exact potential values, one per pure profile (tensor of shape N_1..N_K)."""

    potential: np.ndarray

    def value(self, profile) -> float:
        return float(self.potential[tuple(profile)])

    def maximizers(self, tol: float = DEFAULT_TOL) -> list:
        top = self.potential.max()
        return [tuple(int(i) for i in s) for s in np.argwhere(self.potential >= top - tol)]


@dataclass(frozen=True)
class DSCResult:
    passed: bool
    pair: tuple | None = None
    value: float | None = None
    samples: int = 0


# ---------------------------------------------------------------------------
# Evaluators and predicates
# ---------------------------------------------------------------------------

def _check_counts(game: FiniteGame, counts):
    if tuple(counts) != game.action_counts:
        raise ShapeError(f"profile shape {tuple(counts)} does not match game {game.action_counts}")


def _contract_others(tensor: np.ndarray, profile: MixedProfile, keep: int | None) -> np.ndarray:
    # Contract every player axis except `keep` against its mixed strategy.
    out = tensor
    for j in reversed(range(len(profile))):
        if j == keep:
            continue
        out = np.tensordot(out, profile[j], axes=([j], [0]))
    return out


def expected_utility(game: FiniteGame, profile: MixedProfile, player: int) -> float:
    """Expectation of ``u_player`` under the product of the mixed strategies."""
    _check_counts(game, profile.action_counts)
    return float(_contract_others(game.payoffs[player], profile, None))


def action_values(game: FiniteGame, profile: MixedProfile, player: int) -> np.ndarray:
    """Expected utility of each pure action of ``player`` against the others' mix."""
    _check_counts(game, profile.action_counts)
    return np.asarray(_contract_others(game.payoffs[player], profile, player), dtype=float)


def best_response_set(game: FiniteGame, profile, player: int, tol: float = DEFAULT_TOL) -> list:
    """All maximizing actions of ``player``; ``profile[player]`` is ignored."""
    vals = game.deviation_payoffs(player, profile)
    return [int(a) for a in np.flatnonzero(vals >= vals.max() - tol)]


def is_pure_ne(game: FiniteGame, profile, tol: float = DEFAULT_TOL) -> bool:
    s = game.check_profile(profile)
    for k in range(game.num_players):
        vals = game.deviation_payoffs(k, s)
        if vals[s[k]] < vals.max() - tol:
            return False
    return True


def profitable_deviation(game: FiniteGame, profile, tol: float = DEFAULT_TOL):
    """First ``(player, action, gain)`` beating ``profile``, or None."""
    s = game.check_profile(profile)
    for k in range(game.num_players):
        vals = game.deviation_payoffs(k, s)
        best = int(np.argmax(vals))
        if vals[best] > vals[s[k]] + tol:
            return k, best, float(vals[best] - vals[s[k]])
    return None


def is_mixed_ne(game: FiniteGame, profile: MixedProfile, tol: float = DEFAULT_TOL) -> bool:
    # Pure deviations suffice: expected utility is linear in the own strategy.
    for k in range(game.num_players):
        vals = action_values(game, profile, k)
        if vals.max() > float(vals @ profile[k]) + tol:
            return False
    return True


def is_pareto_optimal(game: FiniteGame, profile, weak: bool = False, tol: float = DEFAULT_TOL) -> bool:
    s = game.check_profile(profile)
    W = game.payoffs.reshape(game.num_players, -1)
    target = game.payoffs[(slice(None),) + s][:, None]
    if weak:
        return not np.any(np.all(W > target + tol, axis=0))
    no_worse = np.all(W >= target - tol, axis=0)
    better = np.any(W > target + tol, axis=0)
    return not np.any(no_worse & better)


def social_optimum(game: FiniteGame) -> tuple:
    """``(profile, welfare)``; ties go to the lexicographically smallest profile."""
    w = game.welfare()
    flat = int(np.argmax(w))  # first occurrence = lexicographically smallest
    prof = tuple(int(i) for i in np.unravel_index(flat, game.action_counts))
    return prof, float(w.ravel()[flat])


def price_of_anarchy(game: FiniteGame, ne_set=None, tol: float = DEFAULT_TOL) -> float:
    """Best welfare over worst equilibrium welfare.

    ``ne_set`` defaults to every pure NE of the game. Returns ``inf`` when the
    worst equilibrium has non-positive welfare but the optimum is positive.
    """
    from .errors import NoEquilibriumError
    if ne_set is None:
        from .solvers import enumerate_pure_ne
        ne_set = enumerate_pure_ne(game, tol=tol)
    ne_set = [game.check_profile(s) for s in ne_set]
    if not ne_set:
        raise NoEquilibriumError("price of anarchy needs at least one equilibrium")
    for s in ne_set:
        if not is_pure_ne(game, s, tol):
            raise ValidationError(f"profile {s} is not a pure NE")
    w = game.welfare()
    best = float(w.max())
    worst = min(float(w[s]) for s in ne_set)
    if worst > 0:
        return best / worst
    if best > 0:
        return float("inf")
    raise UndefinedRatioError(f"PoA undefined: optimum {best} and worst NE welfare {worst} both <= 0")


def _player_major(tensor: np.ndarray, player: int) -> np.ndarray:
    return np.moveaxis(tensor, player, 0).reshape(tensor.shape[player], -1)


def ce_gains(game: FiniteGame, q: JointDistribution, player: int) -> np.ndarray:
    """Matrix ``G[s, s']`` = expected gain of obeying recommendation s over deviating to s'."""
    _check_counts(game, q.action_counts)
    Q = _player_major(q.tensor, player)
    U = _player_major(game.payoffs[player], player)
    obey = np.sum(Q * U, axis=1)
    return obey[:, None] - Q @ U.T


def is_correlated_equilibrium(game: FiniteGame, q: JointDistribution, tol: float = DEFAULT_TOL) -> bool:
    return all(ce_gains(game, q, k).min() >= -tol for k in range(game.num_players))


def cce_gains(game: FiniteGame, q: JointDistribution, player: int) -> np.ndarray:
    """Vector: expected utility under q minus utility of committing to each action."""
    _check_counts(game, q.action_counts)
    Q = _player_major(q.tensor, player)
    U = _player_major(game.payoffs[player], player)
    others = Q.sum(axis=0)
    return float(np.sum(Q * U)) - U @ others


def is_coarse_correlated_equilibrium(game: FiniteGame, q: JointDistribution, tol: float = DEFAULT_TOL) -> bool:
    return all(cce_gains(game, q, k).min() >= -tol for k in range(game.num_players))


def four_cycle_defect(game: FiniteGame) -> tuple:
    """Largest imbalance over unilateral-move 4-cycles, with its location.

    Cycles anchored at action 0 on both moving axes are enough: any other
    rectangle's cycle sum is an inclusion-exclusion combination of these.
    Returns ``(defect, (i, j, profile))``; the witness is None for K < 2.
    """
    U = game.payoffs
    K = game.num_players
    worst, witness = 0.0, None
    for i, j in itertools.combinations(range(K), 2):
        ui, uj = U[i], U[j]

        def z(t, ax):
            return np.take(t, [0], axis=ax)

        cyc = ((z(ui, j) - z(z(ui, j), i)) + (uj - z(uj, j))
               + (z(ui, i) - ui) + (z(z(uj, j), i) - z(uj, i)))
        cyc = np.broadcast_to(cyc, ui.shape)
        m = float(np.abs(cyc).max())
        if m > worst:
            flat = int(np.argmax(np.abs(cyc)))
            worst = m
            witness = (i, j, tuple(int(a) for a in np.unravel_index(flat, ui.shape)))
    return worst, witness


def find_exact_potential(game: FiniteGame, tol: float = DEFAULT_TOL) -> PotentialCertificate | None:
    """Exact potential with value 0 at the all-zeros profile, or None.

    Built by integrating unilateral payoff differences along coordinate
    paths (player 0 moves first, then player 1, ...).
    """
    U = game.payoffs
    K = game.num_players
    scale = max(1.0, float(np.abs(U).max()))
    if four_cycle_defect(game)[0] > tol * scale:
        return None
    phi = np.zeros(game.action_counts)
    for k in range(K):
        # u_k with players after k pinned at 0, as a function of (a_0..a_k)
        idx = tuple(slice(None) if j <= k else slice(0, 1) for j in range(K))
        part = U[k][idx]
        step = part - np.take(part, [0], axis=k)
        phi = phi + step
    return PotentialCertificate(_readonly(phi))


def is_supermodular(game: FiniteGame, tol: float = DEFAULT_TOL) -> bool:
    """Increasing differences with action indices as the order.

    Consecutive differences suffice: monotonicity in each coordinate gives
    monotonicity under the component-wise order by telescoping.
    """
    U = game.payoffs
    for k in range(game.num_players):
        if game.action_counts[k] < 2:
            continue
        d = np.diff(U[k], axis=k)
        for j in range(game.num_players):
            if j != k and game.action_counts[j] > 1 and np.diff(d, axis=j).min() < -tol:
                return False
    return True


def check_dsc(game: ContinuousGame, r, samples: int, seed=None, levels: int = 33,
              margin: float = 1e-12) -> DSCResult:
    """Sample pairs ``(s, s')`` and test the diagonally strict condition.

    Points are drawn uniformly from a ``levels``-point lattice on each box
    coordinate. The lattice matters: violations of a strict inequality often
    sit on a measure-zero set (e.g. ``s - s'`` along a diagonal) that
    continuous sampling never hits. A pass is evidence, not proof.
    """
    if game.gradient is None:
        raise CapabilityError("DSC check needs a gradient evaluator")
    r = np.asarray(r, dtype=float).ravel()
    if r.size != game.num_players or np.any(r <= 0):
        raise ValidationError("weights r must be strictly positive, one per player")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    grids = [[np.linspace(l, h, levels) for l, h in zip(lo, hi)]
             for lo, hi in zip(game.lower, game.upper)]

    def draw():
        return tuple(np.array([g[rng.integers(levels)] for g in gk]) for gk in grids)

    def gamma(s):
        return [r[k] * np.atleast_1d(np.asarray(game.gradient(k, s), float)) for k in range(game.num_players)]

    for _ in range(int(samples)):
        s, t = draw(), draw()
        d = [a - b for a, b in zip(s, t)]
        dist2 = sum(float(x @ x) for x in d)
        if dist2 == 0.0:
            continue
        gs, gt = gamma(s), gamma(t)
        val = sum(float(dk @ (b - a)) for dk, a, b in zip(d, gs, gt))
        if val <= margin * dist2:
            return DSCResult(False, (s, t), val, int(samples))
    return DSCResult(True, None, None, int(samples))


def sample_joint(q: JointDistribution, seed=None) -> Profile:
    """Draw one pure profile by inverse-CDF over the flattened order."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(q.probs)
    flat = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    flat = min(flat, q.probs.size - 1)
    while q.probs[flat] == 0.0 and flat > 0:  # guard against landing on a zero cell at the top
        flat -= 1
    return tuple(int(i) for i in np.unravel_index(flat, q.action_counts))
