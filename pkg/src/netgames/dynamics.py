"""Learning and iterative dynamics that drive games toward equilibria.

Every run returns a :class:`LearningTrace` and is bit-reproducible from its
seed. Randomness always comes from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._optim import maximize_scalar
from .errors import CapabilityError, ContractError, ValidationError
from .game import ContinuousGame, FiniteGame, JointDistribution, MixedProfile, action_values


@dataclass
class LearningTrace:
    """One record per iteration: the profile reached and each player's utility.

    ``profiles[t]`` is a tuple of actions (finite games), a tuple of arrays
    (continuous games) or a state vector (consensus).
    """

    algorithm: str
    seed: object
    profiles: list
    utilities: np.ndarray
    converged: bool
    iterations: int
    initial: object = None
    empirical_joint: JointDistribution | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.profiles[-1] if len(self.profiles) else self.initial

    def csv_rows(self):
        """Rows of ``(iter, player, action_or_value, utility)``."""
        for t, (prof, utils) in enumerate(zip(self.profiles, self.utilities)):
            for k, a in enumerate(prof):
                yield t, k, _fmt_action(a), float(utils[k])


def _fmt_action(a) -> str:
    arr = np.atleast_1d(np.asarray(a))
    if arr.dtype.kind in "iub":
        return ";".join(str(int(x)) for x in arr)
    return ";".join(f"{float(x):.12g}" for x in arr)


# ---------------------------------------------------------------------------
# Best-response dynamics
# ---------------------------------------------------------------------------


def _finite_choice(vals: np.ndarray, current: int, rng, tol: float = 1e-12) -> int:
    # Keep the current action when it is already a best response; otherwise
    # pick uniformly among the tied maximizers.
    ties = np.flatnonzero(vals >= vals.max() - tol)
    if current in ties:
        return int(current)
    return int(ties[0]) if ties.size == 1 else int(rng.choice(ties))


def _continuous_response(game: ContinuousGame, k: int, profile, kappa: float, levels: int = 41):
    if kappa <= 0:
        return game.respond(k, profile)
    cur = profile[k]

    def penalized(x):
        trial = list(profile)
        trial[k] = np.atleast_1d(x)
        return game.utility(k, tuple(trial)) - kappa * float(np.sum((np.atleast_1d(x) - cur) ** 2))

    lo, hi = game.lower[k], game.upper[k]
    if lo.size == 1:
        return np.array([maximize_scalar(penalized, float(lo[0]), float(hi[0]))])
    # multi-coordinate actions: lattice search over the box
    best, best_x = -np.inf, cur
    for x in game.action_grid(k, levels):
        trial = list(profile)
        trial[k] = x
        if game.feasible is not None and not game.feasible(tuple(trial)):
            continue
        val = penalized(x)
        if val > best:
            best, best_x = val, x
    return best_x


def _check_continuous(game: ContinuousGame, kappa: float = 0.0):
    if game.best_response is None and kappa <= 0:
        raise CapabilityError(f"continuous game {game.name!r} has no best-response oracle")


def brd_sequential(game, init, eps: float = 0.0, max_iters: int = 1000, seed=None,
                   potential: Callable | None = None) -> LearningTrace:
    """Round-robin best responses; one record per full round.

    Stops after a round in which no coordinate moved by more than ``eps``
    (finite games need ``eps = 0``: an unchanged round). ``potential``,
    when given, is evaluated after every single update and stored in
    ``extra["potential"]``.
    """
    if eps < 0:
        raise ValidationError("eps must be non-negative")
    rng = np.random.default_rng(seed)
    finite = isinstance(game, FiniteGame)
    if finite:
        prof = list(game.check_profile(init))
    else:
        _check_continuous(game)
        prof = list(game.as_profile(init))
    K = game.num_players
    profiles, utils, pot = [], [], []
    if potential is not None:
        pot.append(float(potential(tuple(prof))))
    converged = False
    for _ in range(max_iters):
        moved = 0.0
        for k in range(K):
            if finite:
                new = _finite_choice(game.deviation_payoffs(k, prof), prof[k], rng)
                moved = max(moved, float(new != prof[k]))
            else:
                new = game.respond(k, tuple(prof))
                moved = max(moved, float(np.max(np.abs(new - prof[k]))))
            prof[k] = new
            if potential is not None:
                pot.append(float(potential(tuple(prof))))
        snap = tuple(prof)
        profiles.append(snap)
        utils.append(game.payoff_vector(snap) if finite else game.utilities(snap))
        if moved <= eps:
            converged = True
            break
    extra = {"potential": np.array(pot)} if potential is not None else {}
    return LearningTrace("brd-seq", seed, profiles, np.array(utils).reshape(len(profiles), K), converged,
                         len(profiles), tuple(init) if finite else game.as_profile(init), extra=extra)


def brd_simultaneous(game, init, eps: float = 0.0, max_iters: int = 1000, kappa: float = 0.0,
                     seed=None) -> LearningTrace:
    """Every player best-responds to the previous profile at once.

    With ``kappa > 0`` each player also pays ``kappa`` times the squared
    distance from its previous action (for finite games: ``kappa`` for any
    change), which damps oscillations.
    """
    if eps < 0 or kappa < 0:
        raise ValidationError("eps and kappa must be non-negative")
    rng = np.random.default_rng(seed)
    finite = isinstance(game, FiniteGame)
    if finite:
        prof = game.check_profile(init)
    else:
        _check_continuous(game, kappa)
        prof = game.as_profile(init)
    K = game.num_players
    profiles, utils = [], []
    converged = False
    for _ in range(max_iters):
        new = []
        for k in range(K):
            if finite:
                vals = game.deviation_payoffs(k, prof).copy()
                if kappa > 0:
                    vals -= kappa
                    vals[prof[k]] += kappa
                new.append(_finite_choice(vals, prof[k], rng))
            else:
                new.append(_continuous_response(game, k, prof, kappa))
        new = tuple(new)
        if finite:
            moved = max(float(a != b) for a, b in zip(new, prof))
        else:
            moved = max(float(np.max(np.abs(a - b))) for a, b in zip(new, prof))
        prof = new
        profiles.append(prof)
        utils.append(game.payoff_vector(prof) if finite else game.utilities(prof))
        if moved <= eps:
            converged = True
            break
    return LearningTrace("brd-sim", seed, profiles, np.array(utils).reshape(len(profiles), K), converged,
                         len(profiles), tuple(init) if finite else game.as_profile(init),
                         extra={"kappa": kappa})


# ---------------------------------------------------------------------------
# Fictitious play, reinforcement, regret matching
# ---------------------------------------------------------------------------


def fictitious_play(game: FiniteGame, init, T: int, seed=None, keep_history: bool = False) -> LearningTrace:
    """Each player best-responds (lowest index on ties) to the others' empirical marginals.

    The initial profile counts as the first play. Frequencies follow the
    recursion ``f <- f + (e_a - f) / (t + 1)``. ``converged`` reports whether
    play stayed on one profile over the last tenth of the run.
    """
    prof = game.check_profile(init)
    K = game.num_players
    counts = game.action_counts
    freqs = [np.eye(n)[a] for n, a in zip(counts, prof)]
    profiles = [prof]
    utils = [game.payoff_vector(prof)]
    history = [[f.copy()] for f in freqs] if keep_history else None
    for t in range(1, T):
        mixed = MixedProfile(tuple(freqs))
        prof = tuple(int(np.argmax(action_values(game, mixed, k))) for k in range(K))
        step = 1.0 / (t + 1)
        for k in range(K):
            e = np.zeros(counts[k])
            e[prof[k]] = 1.0
            freqs[k] = freqs[k] + step * (e - freqs[k])
            if keep_history:
                history[k].append(freqs[k].copy())
        profiles.append(prof)
        utils.append(game.payoff_vector(prof))
    tail = profiles[-max(1, len(profiles) // 10):]
    extra = {"frequencies": [f.copy() for f in freqs]}
    if keep_history:
        extra["frequency_history"] = [np.array(h) for h in history]
    return LearningTrace("fp", seed, profiles, np.array(utils), all(p == tail[0] for p in tail),
                         len(profiles), tuple(init), extra=extra)


def normalize_utilities(game: FiniteGame) -> FiniteGame:
    """Per-player affine rescale to [0, 1]; constant players map to 0."""
    U = game.payoffs
    out = np.empty_like(U)
    for k in range(game.num_players):
        lo, hi = U[k].min(), U[k].max()
        out[k] = (U[k] - lo) / (hi - lo) if hi > lo else 0.0
    return FiniteGame(out, game.player_names, game.action_labels, game.name)


def _flat_layout(game: FiniteGame):
    counts = np.array(game.action_counts, dtype=np.int64)
    strides = np.ones_like(counts)
    for k in range(counts.size - 2, -1, -1):
        strides[k] = strides[k + 1] * counts[k + 1]
    flat = np.ascontiguousarray(game.payoffs.reshape(game.num_players, -1))
    return flat, counts, strides


def _empirical_joint(profiles: np.ndarray, strides, counts) -> JointDistribution:
    idx = profiles @ strides
    freq = np.bincount(idx, minlength=int(np.prod(counts))) / profiles.shape[0]
    return JointDistribution(freq, tuple(int(n) for n in counts))


def _step_schedule(lam, T: int) -> np.ndarray:
    if callable(lam):
        steps = np.array([float(lam(t)) for t in range(T)])
    else:
        steps = np.broadcast_to(np.asarray(lam, dtype=float), (T,)).copy()
    if np.any(steps <= 0) or np.any(steps >= 1):
        raise ValidationError("learning rates must lie strictly inside (0, 1)")
    return steps


def bush_mosteller(game: FiniteGame, init: MixedProfile | None = None, lam=0.1, T: int = 10_000,
                   seed=None) -> LearningTrace:
    """Each player samples from its mixed strategy and reinforces by the realized utility.

    Utilities must lie in [0, 1] (see :func:`normalize_utilities`); that is
    what keeps every iterate on the simplex, and it is checked anyway.
    ``converged`` means every player ends with some action above 0.99.
    """
    U = game.payoffs
    if U.min() < 0.0 or U.max() > 1.0:
        raise ContractError("reinforcement learning needs utilities in [0, 1]; normalize first")
    K = game.num_players
    if init is None:
        init = MixedProfile.uniform(game.action_counts)
    if init.action_counts != game.action_counts:
        raise ValidationError("initial strategies do not match the game's action counts")
    flat, counts, strides = _flat_layout(game)
    probs = np.zeros((K, int(counts.max())))
    for k in range(K):
        probs[k, :counts[k]] = init[k]
    rng = np.random.default_rng(seed)
    uniforms = rng.random((T, K))
    profiles, utils, final, min_entry, sum_err = _kernels.bush_mosteller_loop(
        flat, counts, strides, uniforms, probs, _step_schedule(lam, T))
    if min_entry < -1e-12 or sum_err > 1e-9:
        raise ContractError(f"iterate left the simplex (min entry {min_entry}, sum error {sum_err})")
    final_probs = [final[k, :counts[k]].copy() for k in range(K)]
    converged = all(p.max() > 0.99 for p in final_probs)
    return LearningTrace("rl", seed, profiles, utils, converged, T, init,
                         _empirical_joint(profiles, strides, counts),
                         {"probabilities": final_probs, "min_entry": float(min_entry)})


def regret_matching(game: FiniteGame, T: int = 10_000, seed=None) -> LearningTrace:
    """Play proportionally to positive cumulative regrets (uniform when none).

    Counterfactual payoffs come from the full tensor. ``extra["max_regret"]``
    holds the largest positive average regret after every step.
    """
    K = game.num_players
    flat, counts, strides = _flat_layout(game)
    rng = np.random.default_rng(seed)
    uniforms = rng.random((T, K))
    profiles, utils, regret, max_regret = _kernels.regret_matching_loop(
        flat, counts, strides, uniforms, np.zeros((K, int(counts.max()))))
    joint = _empirical_joint(profiles, strides, counts)
    return LearningTrace("rm", seed, profiles, utils, True, T, None, joint,
                         {"regrets": [regret[k, :counts[k]] / T for k in range(K)],
                          "max_regret": max_regret})


# ---------------------------------------------------------------------------
# Consensus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusNetwork:
    """``weights[k][j]`` is node k's weight on neighbor j (only for neighbors)."""

    weights: tuple

    def __post_init__(self):
        clean = []
        for k, row in enumerate(self.weights):
            row = {int(j): float(b) for j, b in dict(row).items()}
            for j, b in row.items():
                if j == k or not 0 <= j < len(self.weights):
                    raise ValidationError(f"node {k}: invalid neighbor {j}")
                if b < 0 or not np.isfinite(b):
                    raise ValidationError(f"node {k}: weight on {j} must be finite and >= 0")
            clean.append(row)
        object.__setattr__(self, "weights", tuple(clean))

    @classmethod
    def complete(cls, K: int, beta: float | None = None) -> "ConsensusNetwork":
        b = 1.0 / K if beta is None else beta
        return cls(tuple({j: b for j in range(K) if j != k} for k in range(K)))

    @classmethod
    def from_matrix(cls, B) -> "ConsensusNetwork":
        B = np.asarray(B, dtype=float)
        return cls(tuple({j: B[k, j] for j in range(B.shape[0]) if j != k and B[k, j] != 0}
                         for k in range(B.shape[0])))

    @property
    def size(self) -> int:
        return len(self.weights)

    def neighbors(self, k: int) -> tuple:
        return tuple(sorted(self.weights[k]))

    def update_matrix(self) -> np.ndarray:
        n = self.size
        M = np.eye(n)
        for k, row in enumerate(self.weights):
            for j, b in row.items():
                M[k, j] += b
                M[k, k] -= b
        return M


def consensus(network: ConsensusNetwork, init, eps: float = 1e-9, max_iters: int = 10_000) -> LearningTrace:
    """Synchronous neighbor averaging until no state moves by more than ``eps``.

    ``extra["converged_at"]`` is the step index whose update was below
    ``eps``; ``extra["second_modulus"]`` is the second-largest eigenvalue
    modulus of the update matrix, reported for diagnosis only.
    """
    a = np.asarray(init, dtype=float).ravel()
    if a.size != network.size:
        raise ValidationError(f"{a.size} initial states for {network.size} nodes")
    M = network.update_matrix()
    states = []
    converged, at = False, None
    for t in range(max_iters):
        nxt = M @ a
        step = float(np.max(np.abs(nxt - a)))
        a = nxt
        states.append(a.copy())
        if step <= eps:
            converged, at = True, t
            break
    mods = np.sort(np.abs(np.linalg.eigvals(M)))[::-1]
    extra = {"converged_at": at, "second_modulus": float(mods[1]) if mods.size > 1 else 0.0}
    return LearningTrace("consensus", None, states, np.array(states).reshape(len(states), network.size),
                         converged, len(states), np.asarray(init, dtype=float), extra=extra)


# ---------------------------------------------------------------------------
# Repeated games
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSchedule:
    """Stage weights for long-run utilities.

    ``finite-average``: 1/T with a fixed horizon. ``running-average``: 1/T
    over whatever horizon is played. ``discounted``: ``(1 - d) d^(t - 1)``
    for stages t = 1..T (the tail beyond T is dropped).
    """

    kind: str
    horizon: int | None = None
    discount: float | None = None

    def __post_init__(self):
        if self.kind not in ("finite-average", "running-average", "discounted"):
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "finite-average" and (self.horizon is None or self.horizon < 1):
            raise ValidationError("finite-average schedule needs a positive horizon")
        if self.kind == "discounted" and (self.discount is None or not 0 <= self.discount < 1):
            raise ValidationError("discount must lie in [0, 1)")

    def weights(self, T: int) -> np.ndarray:
        if self.kind == "finite-average":
            if T != self.horizon:
                raise ValidationError(f"schedule horizon {self.horizon} does not match T={T}")
            return np.full(T, 1.0 / T)
        if self.kind == "running-average":
            return np.full(T, 1.0 / T)
        d = self.discount
        return (1.0 - d) * d ** np.arange(T)


@dataclass(frozen=True)
class RepeatedGameResult:
    utilities: np.ndarray
    history: np.ndarray
    stage_payoffs: np.ndarray


def grim_trigger(cooperate: int, punish: int, cooperative_profile: Sequence[int]) -> Callable:
    """Cooperate while every past profile was fully cooperative, then punish forever."""
    target = tuple(cooperative_profile)

    def strategy(history, player):
        return cooperate if all(tuple(p) == target for p in history) else punish

    return strategy


def always(action: int) -> Callable:
    return lambda history, player: action


def repeated_game_run(stage: FiniteGame, strategies: Sequence[Callable], schedule: WeightSchedule,
                      T: int) -> RepeatedGameResult:
    """Play T stages under perfect monitoring; ``strategies[k](history, k)`` sees only past profiles."""
    if len(strategies) != stage.num_players:
        raise ValidationError("need one strategy per player")
    w = schedule.weights(T)
    history: list[tuple] = []
    payoffs = np.zeros((T, stage.num_players))
    for t in range(T):
        past = tuple(history)
        prof = stage.check_profile([strategies[k](past, k) for k in range(stage.num_players)])
        history.append(prof)
        payoffs[t] = stage.payoff_vector(prof)
    return RepeatedGameResult(w @ payoffs, np.array(history), payoffs)


def cooperative_trigger_plan(game: FiniteGame, cooperate_profile, punish_profile) -> list:
    """Grim-trigger strategies for every player around a cooperative profile."""
    return [grim_trigger(c, p, cooperate_profile) for c, p in zip(cooperate_profile, punish_profile)]
