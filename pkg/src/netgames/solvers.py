"""Equilibrium and bargaining searches built on ``game`` and ``lp``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DisagreementError, LPError, ShapeError, ValidationError
from .game import (
    DEFAULT_TOL,
    ContinuousGame,
    FiniteGame,
    JointDistribution,
    MixedProfile,
    is_coarse_correlated_equilibrium,
    is_correlated_equilibrium,
    is_mixed_ne,
)
from .lp import LinearProgram, lp_solve

SUPPORT_ENUM_MAX_ACTIONS = 8
DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class NashBargainingResult:
    argument: tuple
    utilities: np.ndarray
    status_quo: np.ndarray
    nash_product: float


@dataclass(frozen=True)
class EquilibriumOptimum:
    distribution: JointDistribution
    objective: float
    payoffs: np.ndarray


def enumerate_pure_ne(game: FiniteGame, tol: float = DEFAULT_TOL) -> list:
    """All pure NE in lexicographic order (possibly none)."""
    U = game.payoffs
    mask = np.ones(game.action_counts, dtype=bool)
    for k in range(game.num_players):
        mask &= U[k] >= U[k].max(axis=k, keepdims=True) - tol
    return [tuple(int(a) for a in s) for s in np.argwhere(mask)]


def _require_two_players(game: FiniteGame):
    if game.num_players != 2:
        raise ShapeError(f"two-player solver called on a {game.num_players}-player game")


def mixed_ne_2x2(game: FiniteGame, tol: float = DEFAULT_TOL) -> list:
    """NE of a 2x2 game by intersecting the best-response correspondences.

    Returns the pure NE (lexicographic) followed by the interior point where
    each player makes the other indifferent, when that point lies strictly
    inside the unit square. In degenerate games with a continuum of
    equilibria only these isolated representatives are reported.
    """
    _require_two_players(game)
    if game.action_counts != (2, 2):
        raise ShapeError(f"expected a 2x2 game, got actions {game.action_counts}")
    u1, u2 = game.payoffs
    out = [MixedProfile.pure(s, (2, 2)) for s in enumerate_pure_ne(game, tol)]
    # p: row's weight on action 0 making column indifferent; q: vice versa
    d2 = (u2[0, 0] - u2[1, 0]) - (u2[0, 1] - u2[1, 1])
    d1 = (u1[0, 0] - u1[0, 1]) - (u1[1, 0] - u1[1, 1])
    if abs(d1) > tol and abs(d2) > tol:
        p = (u2[1, 1] - u2[1, 0]) / d2
        q = (u1[1, 1] - u1[0, 1]) / d1
        if tol < p < 1 - tol and tol < q < 1 - tol:
            prof = MixedProfile((np.array([p, 1 - p]), np.array([q, 1 - q])))
            if is_mixed_ne(game, prof, 1e-9):
                out.append(prof)
    return out


def _indifferent_mix(M: np.ndarray, rows, cols):
    """Weights on ``cols`` equalizing the ``rows`` payoffs of M, or None."""
    sub = M[np.ix_(rows, cols)]
    r, c = sub.shape
    # unknowns: weights (c) and common value v
    A = np.zeros((r + 1, c + 1))
    A[:r, :c] = sub
    A[:r, c] = -1.0
    A[r, :c] = 1.0
    b = np.zeros(r + 1)
    b[r] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ sol - b)) > 1e-9:
        return None
    w = sol[:c]
    if np.any(w < -1e-12):
        return None
    return np.clip(w, 0.0, None)


def support_enumeration_2p(game: FiniteGame, max_support: int | None = None,
                           tol: float = 1e-9) -> list:
    """Mixed NE of a bimatrix game by enumerating support pairs.

    Every candidate is confirmed with :func:`is_mixed_ne` before it is kept,
    so degenerate games yield a finite, verified subset of their equilibria.
    """
    _require_two_players(game)
    n1, n2 = game.action_counts
    if max(n1, n2) > SUPPORT_ENUM_MAX_ACTIONS:
        raise CapacityError(f"support enumeration limited to {SUPPORT_ENUM_MAX_ACTIONS} actions per player")
    A, B = game.payoffs
    top = max(n1, n2) if max_support is None else int(max_support)
    found: list[MixedProfile] = []
    for s1 in range(1, min(top, n1) + 1):
        for s2 in range(1, min(top, n2) + 1):
            for I in itertools.combinations(range(n1), s1):
                for J in itertools.combinations(range(n2), s2):
                    y = _indifferent_mix(A, I, J)
                    if y is None:
                        continue
                    x = _indifferent_mix(B.T, J, I)
                    if x is None:
                        continue
                    xf, yf = np.zeros(n1), np.zeros(n2)
                    xf[list(I)], yf[list(J)] = x, y
                    if abs(xf.sum() - 1) > 1e-9 or abs(yf.sum() - 1) > 1e-9:
                        continue
                    prof = MixedProfile((xf / xf.sum(), yf / yf.sum()))
                    if not is_mixed_ne(game, prof, tol):
                        continue
                    if not any(prof.close_to(f, DEDUP_TOL) for f in found):
                        found.append(prof)
    return found


def _zero_sum_scale(game: FiniteGame, tol: float):
    # Find a > 0, b with u2 = -(a*u1) + b, so the game is zero-sum after rescaling.
    u1, u2 = (game.payoffs[k].ravel() for k in range(2))
    if np.allclose(u1 + u2, 0.0, rtol=0.0, atol=tol):
        return 1.0, 0.0
    if np.ptp(u1) <= tol:
        if np.ptp(u2) <= tol:
            return 1.0, float(u1[0] + u2[0])
        raise ValidationError("game is not zero-sum after positive affine normalization")
    X = np.column_stack([-u1, np.ones_like(u1)])
    (a, b), *_ = np.linalg.lstsq(X, u2, rcond=None)
    if a <= 0 or np.max(np.abs(X @ np.array([a, b]) - u2)) > tol * max(1.0, np.abs(u2).max()):
        raise ValidationError("game is not zero-sum after positive affine normalization")
    return float(a), float(b)


def zero_sum_value(game: FiniteGame, tol: float = DEFAULT_TOL):
    """Value (in player 0's utility units) and an optimal maximin profile."""
    _require_two_players(game)
    _zero_sum_scale(game, tol)
    A = game.payoffs[0]
    n1, n2 = A.shape
    # variables: x (n1) and v (free); max v s.t. x @ A[:, j] >= v, sum x = 1
    c = np.zeros(n1 + 1)
    c[-1] = 1.0
    G = np.hstack([A.T, -np.ones((n2, 1))])
    E = np.concatenate([np.ones(n1), [0.0]])[None, :]
    res = lp_solve(LinearProgram(c, G, np.zeros(n2), E, [1.0],
                                 [(0.0, None)] * n1 + [(None, None)], maximize=True))
    if not res.ok:
        raise LPError(f"maximin LP ended with status {res.status}")
    x = np.clip(res.x[:n1], 0.0, None)
    x /= x.sum()
    y = np.clip(-res.duals_ge, 0.0, None)
    if y.sum() <= 0:
        raise LPError("maximin LP returned no column strategy")
    y /= y.sum()
    v = res.value
    sec1 = float((x @ A).min())
    sec2 = float((A @ y).max())
    if abs(sec1 - v) > 1e-6 or abs(sec2 - v) > 1e-6:
        raise LPError(f"security levels {sec1}, {sec2} disagree with value {v}")
    return v, MixedProfile((x, y))


def equilibrium_constraints(game: FiniteGame, concept: str = "CE") -> np.ndarray:
    """Rows R with ``R @ q >= 0`` describing the CE (or CCE) polytope."""
    U = game.payoffs
    counts = game.action_counts
    rows = []
    for k in range(game.num_players):
        Uk = np.moveaxis(U[k], k, 0)
        other_shape = Uk.shape[1:]
        Uk = Uk.reshape(counts[k], -1)
        for dev in range(counts[k]):
            if concept == "CE":
                for rec in range(counts[k]):
                    if rec == dev:
                        continue
                    R = np.zeros_like(Uk)
                    R[rec] = Uk[rec] - Uk[dev]
                    rows.append(np.moveaxis(R.reshape((counts[k],) + other_shape), 0, k).ravel())
            elif concept == "CCE":
                R = Uk - Uk[dev][None, :]
                rows.append(np.moveaxis(R.reshape((counts[k],) + other_shape), 0, k).ravel())
            else:
                raise ValidationError(f"unknown concept {concept!r}; use 'CE' or 'CCE'")
    return np.array(rows).reshape(len(rows), game.num_profiles)


def optimize_over_equilibrium_set(game: FiniteGame, weights, concept: str = "CE") -> EquilibriumOptimum:
    """Maximize ``sum_k w_k E_q[u_k]`` over correlated (or coarse correlated) equilibria."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != game.num_players or not np.all(np.isfinite(w)):
        raise ValidationError("need one finite weight per player")
    concept = concept.upper()
    W = game.payoffs.reshape(game.num_players, -1)
    R = equilibrium_constraints(game, concept)
    P = game.num_profiles
    res = lp_solve(LinearProgram(w @ W, R if R.size else None, np.zeros(R.shape[0]) if R.size else None,
                                 np.ones((1, P)), [1.0], maximize=True))
    if not res.ok:
        raise LPError(f"{concept} LP ended with status {res.status}")
    q = np.clip(res.x, 0.0, None)
    dist = JointDistribution(q / q.sum(), game.action_counts)
    check = is_correlated_equilibrium if concept == "CE" else is_coarse_correlated_equilibrium
    if not check(game, dist, 1e-6):
        raise LPError(f"{concept} LP solution fails the {concept} inequalities")
    pay = W @ dist.probs
    return EquilibriumOptimum(dist, float(w @ pay), pay)


def _nash_product(utils: np.ndarray, lam: np.ndarray) -> float:
    if np.any(utils < lam):
        return -np.inf
    return float(np.prod(utils - lam))


def nash_bargaining(game, status_quo, grid: int = 51, rounds: int = 3) -> NashBargainingResult:
    """Maximize the Nash product over pure profiles or a parameter box.

    For a :class:`ContinuousGame` all players' coordinates are gridded
    jointly (``grid`` points per coordinate), then the search box shrinks
    to one cell around the incumbent for ``rounds`` refinement passes.
    Points where some player falls below its status quo are discarded;
    ties keep the lowest cell index.
    """
    lam = np.asarray(status_quo, dtype=float).ravel()
    if lam.size != game.num_players:
        raise ValidationError("status quo needs one entry per player")

    if isinstance(game, FiniteGame):
        best, best_s, best_u = -np.inf, None, None
        for s in game.profiles():
            u = game.payoff_vector(s)
            val = _nash_product(u, lam)
            if val > best:
                best, best_s, best_u = val, s, u
        if best_s is None:
            raise DisagreementError("no profile gives every player at least its status quo")
        return NashBargainingResult(best_s, best_u, lam, best)

    if not isinstance(game, ContinuousGame):
        raise ValidationError("nash_bargaining needs a FiniteGame or ContinuousGame")
    if grid < 2:
        raise ValidationError("grid needs at least 2 points per axis")
    sizes = [lo.size for lo in game.lower]
    lo0 = np.concatenate(game.lower)
    hi0 = np.concatenate(game.upper)

    def split(z):
        return tuple(np.array(part) for part in np.split(z, np.cumsum(sizes)[:-1]))

    def evaluate(z):
        prof = split(z)
        if game.feasible is not None and not game.feasible(prof):
            return -np.inf, None
        u = game.utilities(prof)
        return _nash_product(u, lam), u

    best, best_z, best_u = -np.inf, None, None
    lo, hi = lo0.copy(), hi0.copy()
    for _ in range(rounds + 1):
        axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
        for z in itertools.product(*axes):
            z = np.array(z)
            val, u = evaluate(z)
            if val > best:
                best, best_z, best_u = val, z, u
        if best_z is None:
            raise DisagreementError("no grid point gives every player at least its status quo")
        width = (hi - lo) / (grid - 1)
        lo = np.maximum(lo0, best_z - width)
        hi = np.minimum(hi0, best_z + width)
    return NashBargainingResult(split(best_z), best_u, lam, best)
