"""Worked-example games: dilemmas, wireless power/beam games, foraging, detection.

Every constructor returns a game object that the solver, learning and
coalition modules consume directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coalition import TUGame, members
from .errors import CapabilityError, ContractError, DegenerateChannelError, ValidationError
from ._optim import maximize_scalar
from .game import ContinuousGame, FiniteGame

# ---------------------------------------------------------------------------
# Small matrix games
# ---------------------------------------------------------------------------

SLEEP, ACTIVE = 0, 1
NARROWBAND, WIDEBAND = 0, 1


def sensor_dilemma(e: float = 0.2) -> FiniteGame:
    """Two fusion centers choosing to sleep or sense; sensing costs ``e``.

    Sleeping while the other senses is free-riding (payoff 1); sensing
    alone earns ``-e``; both sensing earns ``1 - e``.
    """
    if not 0.0 <= e <= 1.0:
        raise ValidationError(f"sensing cost e must lie in [0, 1], got {e}")
    u1 = np.array([[0.0, 1.0], [-e, 1.0 - e]])
    return FiniteGame([u1, u1.T], ("FC1", "FC2"), [("sleep", "active")] * 2, "sensor-dilemma")


def cr_dilemma() -> FiniteGame:
    """Cognitive-radio band choice; wideband is strictly dominant."""
    u1 = np.array([[3.0, 0.0], [4.0, 1.0]])
    return FiniteGame([u1, u1.T], ("radio1", "radio2"), [("narrowband", "wideband")] * 2, "cr-dilemma")


def aumann_coordination() -> FiniteGame:
    """Classic 2x2 game whose correlated equilibria beat every Nash equilibrium."""
    u1 = np.array([[5.0, 0.0], [4.0, 1.0]])
    u2 = np.array([[1.0, 0.0], [4.0, 5.0]])
    return FiniteGame([u1, u2], ("row", "col"), [("a", "b")] * 2, "aumann")


def matching_pennies() -> FiniteGame:
    u1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return FiniteGame([u1, -u1], ("row", "col"), [("heads", "tails")] * 2, "matching-pennies")


def coordination_game(bonus: float = 1.0) -> FiniteGame:
    """Both players gain ``bonus`` only when they pick the same action."""
    u = np.array([[bonus, 0.0], [0.0, bonus]])
    return FiniteGame([u, u], ("p1", "p2"), [("x", "y")] * 2, "coordination")


def duck_foraging(K: int = 33, rates=(24.0, 12.0)) -> FiniteGame:
    """Each of K foragers picks site 0 (fast) or 1 (slow); supply is shared equally."""
    if K < 1:
        raise ValidationError("need at least one forager")
    rates = tuple(float(r) for r in rates)
    if len(rates) != 2 or min(rates) <= 0:
        raise ValidationError("need two positive supply rates")

    def payoff(k, profile):
        site = profile[k]
        crowd = sum(1 for a in profile if a == site)
        return rates[site] / crowd

    return FiniteGame.from_function((2,) * K, payoff, None, [("fast", "slow")] * K, "ducks")


def slow_site_count(profile) -> int:
    return int(sum(profile))


# ---------------------------------------------------------------------------
# Multi-band interference channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterferenceChannel:
    """``gains[l, k, n]`` is the power gain from transmitter l to receiver k on band n."""

    gains: np.ndarray
    noise: float = 1.0
    budget: float = 1.0
    mac: bool = False

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 3 or g.shape[0] != g.shape[1]:
            raise ValidationError(f"gains must have shape (K, K, N); got {g.shape}")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValidationError("gains must be finite and non-negative")
        if self.noise <= 0 or self.budget <= 0:
            raise ValidationError("noise and budget must be positive")
        if self.mac and not np.allclose(g, g[:, :1, :], rtol=0.0, atol=0.0):
            raise ValidationError("MAC channel gains must not depend on the receiver")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def multiple_access(cls, gains, noise: float = 1.0, budget: float = 1.0) -> "InterferenceChannel":
        """One shared receiver; ``gains[k, n]`` from transmitter k on band n."""
        g = np.asarray(gains, dtype=float)
        K = g.shape[0]
        return cls(np.repeat(g[:, None, :], K, axis=1), noise, budget, True)

    @classmethod
    def random(cls, K: int, N: int, seed=None, cross: float = 1.0, noise: float = 1.0,
               budget: float = 1.0, mac: bool = False) -> "InterferenceChannel":
        """Exponential (Rayleigh-power) gains; cross links scaled by ``cross``."""
        rng = np.random.default_rng(seed)
        if mac:
            return cls.multiple_access(rng.exponential(size=(K, N)), noise, budget)
        g = rng.exponential(size=(K, K, N))
        g[~np.eye(K, dtype=bool)] *= cross
        return cls(g, noise, budget, False)

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_bands(self) -> int:
        return self.gains.shape[2]

    def direct(self) -> np.ndarray:
        """``(K, N)`` direct-link gains."""
        K = self.num_users
        return self.gains[np.arange(K), np.arange(K), :]

    def interference(self, powers) -> np.ndarray:
        """``(K, N)`` noise plus received power from other users."""
        p = np.asarray(powers, dtype=float)
        total = np.einsum("lkn,ln->kn", self.gains, p)
        own = self.direct() * p
        return self.noise + total - own

    def sinr(self, powers) -> np.ndarray:
        p = np.asarray(powers, dtype=float)
        return self.direct() * p / self.interference(p)

    def rates(self, powers) -> np.ndarray:
        return np.log2(1.0 + self.sinr(powers)).sum(axis=1)


def waterfill(levels, budget: float) -> np.ndarray:
    """Pour ``budget`` over bands with floor ``levels``; infinite levels get nothing.

    The water level is found exactly from the sorted floors, so the budget
    is met to rounding error and active bands sit exactly at the level.
    """
    lv = np.asarray(levels, dtype=float).ravel()
    ok = np.isfinite(lv)
    if not ok.any():
        raise DegenerateChannelError("no band with a usable direct gain")
    order = np.argsort(lv[ok], kind="stable")
    floors = lv[ok][order]
    csum = np.cumsum(floors)
    n = floors.size
    level = (budget + csum[-1]) / n
    for j in range(n):
        cand = (budget + csum[j]) / (j + 1)
        if cand > floors[j] and (j + 1 == n or cand <= floors[j + 1]):
            level = cand
            break
    p_ok = np.clip(level - floors, 0.0, None)
    out = np.zeros(lv.size)
    out[np.flatnonzero(ok)[order]] = p_ok
    return out


def water_level(levels, powers) -> float:
    lv = np.asarray(levels, dtype=float)
    on = powers > 0
    return float(np.mean(lv[on] + powers[on]))


def effective_noise(channel: InterferenceChannel, k: int, powers) -> np.ndarray:
    """Per-band interference-plus-noise over the direct gain (inf where the gain is 0)."""
    p = np.array(powers, dtype=float)
    p[k] = 0.0
    inter = channel.noise + np.einsum("ln,ln->n", channel.gains[:, k, :], p)
    h = channel.gains[k, k, :]
    with np.errstate(divide="ignore"):
        return np.where(h > 0, inter / np.where(h > 0, h, 1.0), np.inf)


def waterfilling_best_response(channel: InterferenceChannel, k: int, powers) -> np.ndarray:
    """Rate-maximizing power split of user k against the others' powers."""
    return waterfill(effective_noise(channel, k, powers), channel.budget)


def pa_game(channel: InterferenceChannel) -> ContinuousGame:
    """Power-allocation game: each user splits its budget over the bands."""
    K, N, P = channel.num_users, channel.num_bands, channel.budget

    def stack(profile):
        return np.vstack([np.asarray(p, float) for p in profile])

    def utility(k, profile):
        return float(channel.rates(stack(profile))[k])

    def best_response(k, profile):
        return waterfilling_best_response(channel, k, stack(profile))

    def gradient(k, profile):
        p = stack(profile)
        h = channel.direct()[k]
        return h / (math.log(2) * (channel.interference(p)[k] + h * p[k]))

    def feasible(profile):
        return all(np.sum(p) <= P * (1 + 1e-12) for p in profile)

    return ContinuousGame(tuple(np.zeros(N) for _ in range(K)), tuple(np.full(N, P) for _ in range(K)),
                          utility, best_response, gradient, feasible, "power-allocation",
                          {"channel": channel})


def band_powers(channel: InterferenceChannel, profile) -> np.ndarray:
    """Power matrix when user k puts its whole budget on band ``profile[k]``."""
    p = np.zeros((channel.num_users, channel.num_bands))
    p[np.arange(channel.num_users), list(profile)] = channel.budget
    return p


def bs_game(channel: InterferenceChannel) -> FiniteGame:
    """Band-selection game: each user puts its whole budget on one band."""
    K, N = channel.num_users, channel.num_bands
    tensor = np.empty((K,) + (N,) * K)
    for s in np.ndindex(*(N,) * K):
        tensor[(slice(None),) + s] = channel.rates(band_powers(channel, s))
    labels = [[f"band{n}" for n in range(N)]] * K
    return FiniteGame(tensor, action_labels=labels, name="band-selection")


def mac_potential(channel: InterferenceChannel, powers) -> float:
    """Shared potential of the multiple-access power games."""
    if not channel.mac:
        raise ContractError("potential function only defined for a multiple-access channel")
    p = np.asarray(powers, dtype=float)
    g = channel.gains[:, 0, :]
    return float(np.sum(np.log2(channel.noise + np.sum(g * p, axis=0))))


@dataclass(frozen=True)
class SpectralReport:
    radii: np.ndarray  # one spectral radius per band
    holds: bool
    diagnostic: str = ""


def _perron_radius(A: np.ndarray, iters: int = 200, tol: float = 1e-10) -> float:
    # Power iteration on I + A: same Perron vector, no oscillation on periodic A.
    n = A.shape[0]
    B = np.eye(n) + A
    v = np.ones(n) / n
    lam = 0.0
    for _ in range(iters):
        w = B @ v
        new = float(np.linalg.norm(w, 1))
        v = w / new
        if abs(new - lam) <= tol * max(1.0, new):
            lam = new
            break
        lam = new
    return lam - 1.0


def spectral_radius_condition(channel: InterferenceChannel) -> SpectralReport:
    """Per-band interference-to-signal matrices and the test ``rho < 1`` on every band.

    Band n's matrix has entry ``gains[l, k, n] / gains[k, k, n]`` in row k,
    column l (l != k): interference from l relative to k's direct link.
    """
    K, N = channel.num_users, channel.num_bands
    h = channel.direct()
    radii = np.zeros(N)
    for n in range(N):
        if np.any(h[:, n] == 0):
            k = int(np.flatnonzero(h[:, n] == 0)[0])
            radii[n] = np.inf
            return SpectralReport(radii, False, f"user {k} has zero direct gain on band {n}")
        H = channel.gains[:, :, n].T / h[:, n][:, None]
        np.fill_diagonal(H, 0.0)
        radii[n] = _perron_radius(np.abs(H)) if K > 1 else 0.0
    return SpectralReport(radii, bool(np.all(radii < 1.0)))


def two_user_band_selection(seed=None, snr_db: float = 10.0, cross: float = 0.5) -> FiniteGame:
    """2 users, 2 bands, one band each, random gains at the given SNR."""
    channel = InterferenceChannel.random(2, 2, seed, cross=cross, noise=10 ** (-snr_db / 10))
    return bs_game(channel)


# ---------------------------------------------------------------------------
# Energy efficiency, Cournot, linear systems
# ---------------------------------------------------------------------------


def energy_efficiency_game(K: int, f_kind: str = "exp", param: float = 1.0, p_max: float = 1.0,
                           pricing=0.0, noise: float = 1.0) -> ContinuousGame:
    """Bits-per-joule game: ``u_k = f(p_k / (noise + others)) / p_k - c_k p_k``.

    ``f_kind`` is ``"exp"`` for ``exp(-a/x)`` (param a) or ``"sigmoid"`` for
    ``(1 - exp(-x))^M`` (param M). Powers live on ``[1e-6 p_max, p_max]``.
    """
    if param <= 0 or p_max <= 0 or noise <= 0:
        raise ValidationError("param, p_max and noise must be positive")
    c = np.broadcast_to(np.asarray(pricing, dtype=float), (K,)).copy()
    if np.any(c < 0):
        raise ValidationError("pricing must be non-negative")
    if f_kind == "exp":
        def f(x):
            return math.exp(-param / x) if x > 0 else 0.0
    elif f_kind == "sigmoid":
        def f(x):
            return (1.0 - math.exp(-x)) ** param
    else:
        raise ValidationError(f"unknown efficiency function {f_kind!r}")
    p_min = 1e-6 * p_max

    def own_utility(k, p, others):
        return f(p / (noise + others)) / p - c[k] * p

    def utility(k, profile):
        s = np.array([float(q[0]) for q in profile])
        return own_utility(k, s[k], s.sum() - s[k])

    def best_response(k, profile):
        s = np.array([float(q[0]) for q in profile])
        others = s.sum() - s[k]
        return np.array([maximize_scalar(lambda p: own_utility(k, p, others), p_min, p_max)])

    return ContinuousGame(tuple([p_min]) * K, tuple([p_max]) * K, utility, best_response,
                          name="energy-efficiency",
                          meta={"f_kind": f_kind, "param": param, "pricing": c, "noise": noise})


def cournot_duopoly() -> ContinuousGame:
    """Quantities in [0, 1], inverse demand ``1 - q1 - q2``, no cost."""

    def utility(k, profile):
        q = [float(x[0]) for x in profile]
        return q[k] * (1.0 - q[0] - q[1])

    def best_response(k, profile):
        return np.array([max(0.0, (1.0 - float(profile[1 - k][0])) / 2.0)])

    def gradient(k, profile):
        q = [float(x[0]) for x in profile]
        return np.array([1.0 - 2.0 * q[k] - q[1 - k]])

    return ContinuousGame(([0.0], [0.0]), ([1.0], [1.0]), utility, best_response, gradient, name="cournot")


def linear_system_game(A, y, bound: float = 100.0) -> ContinuousGame:
    """Player k picks ``x_k`` to minimize ``((A x)_k - y_k)^2``; BRD is Gauss-Seidel.

    Non-diagonally-dominant matrices are accepted and flagged in ``meta``.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if A.shape != (n, n):
        raise ValidationError(f"A must be {n}x{n}")
    if np.any(np.diag(A) == 0):
        raise CapabilityError("zero diagonal entry: no best response for that player")
    off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
    dominant = bool(np.all(np.abs(np.diag(A)) > off))

    def stack(profile):
        return np.array([float(x[0]) for x in profile])

    def utility(k, profile):
        x = stack(profile)
        return -float(A[k] @ x - y[k]) ** 2

    def best_response(k, profile):
        x = stack(profile)
        rest = A[k] @ x - A[k, k] * x[k]
        return np.array([(y[k] - rest) / A[k, k]])

    def gradient(k, profile):
        x = stack(profile)
        return np.array([-2.0 * A[k, k] * (A[k] @ x - y[k])])

    return ContinuousGame(tuple([-bound]) * n, tuple([bound]) * n, utility, best_response, gradient,
                          name="linear-system", meta={"diagonally_dominant": dominant})


# ---------------------------------------------------------------------------
# Two-user MISO beamforming
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamformingInstance:
    """``channels[i][j]``: vector from transmitter i to receiver j (complex, length N)."""

    channels: tuple
    power: float = 1.0

    def __post_init__(self):
        ch = tuple(tuple(np.asarray(h, dtype=complex).ravel() for h in row) for row in self.channels)
        if len(ch) != 2 or any(len(row) != 2 for row in ch):
            raise ValidationError("need a 2x2 table of channel vectors")
        N = ch[0][0].size
        for i in range(2):
            for j in range(2):
                if ch[i][j].size != N or np.linalg.norm(ch[i][j]) == 0:
                    raise DegenerateChannelError(f"channel {i}->{j} is empty or mis-sized")
        for i in range(2):
            if np.linalg.norm(_project_out(ch[i][i], ch[i][1 - i])) <= 1e-9 * np.linalg.norm(ch[i][i]):
                raise DegenerateChannelError(f"transmitter {i}: direct and cross channels are colinear")
        object.__setattr__(self, "channels", ch)

    @classmethod
    def random(cls, N: int = 4, seed=None, power: float = 1.0) -> "BeamformingInstance":
        rng = np.random.default_rng(seed)
        draw = lambda: (rng.normal(size=N) + 1j * rng.normal(size=N)) / math.sqrt(2)  # noqa: E731
        return cls(((draw(), draw()), (draw(), draw())), power)

    @property
    def antennas(self) -> int:
        return self.channels[0][0].size


def _project_out(h, g):
    return h - g * (np.vdot(g, h) / np.vdot(g, g))


def mrt_beam(inst: BeamformingInstance, i: int) -> np.ndarray:
    h = inst.channels[i][i]
    return h / np.linalg.norm(h)


def zf_beam(inst: BeamformingInstance, i: int) -> np.ndarray:
    z = _project_out(inst.channels[i][i], inst.channels[i][1 - i])
    return z / np.linalg.norm(z)


def beam(inst: BeamformingInstance, i: int, alpha: float) -> np.ndarray:
    """Unit-norm blend: ``alpha = 0`` is maximum-ratio, ``alpha = 1`` zero-forcing."""
    w = alpha * zf_beam(inst, i) + (1.0 - alpha) * mrt_beam(inst, i)
    return w / np.linalg.norm(w)


def beam_gains(inst: BeamformingInstance, alphas) -> tuple:
    """``(direct, cross)``: ``direct[i] = |h_ii^H w_i|^2``, ``cross[i] = |h_ij^H w_i|^2``."""
    w = [beam(inst, i, float(alphas[i])) for i in range(2)]
    direct = np.array([abs(np.vdot(inst.channels[i][i], w[i])) ** 2 for i in range(2)])
    cross = np.array([abs(np.vdot(inst.channels[i][1 - i], w[i])) ** 2 for i in range(2)])
    return direct, cross


def beamforming_game(inst: BeamformingInstance) -> ContinuousGame:
    """Each transmitter picks its blend weight; utility is ``ln(1 + SINR)`` at its receiver."""

    def utilities(alphas):
        direct, cross = beam_gains(inst, alphas)
        sinr = direct * inst.power / (1.0 + cross[::-1] * inst.power)
        return np.log1p(sinr)

    def utility(k, profile):
        return float(utilities([float(profile[0][0]), float(profile[1][0])])[k])

    def best_response(k, profile):
        # own utility depends on own weight only through the direct gain,
        # which the maximum-ratio beam maximizes
        return np.array([0.0])

    return ContinuousGame(([0.0], [0.0]), ([1.0], [1.0]), utility, best_response,
                          name="beamforming", meta={"instance": inst})


# ---------------------------------------------------------------------------
# Collaborative target detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CTDNetwork:
    """Monitoring stations with detection / false-alarm probabilities and a network-wide cap."""

    p_detect: np.ndarray
    p_false: np.ndarray
    alpha: float

    def __post_init__(self):
        pd = np.array(self.p_detect, dtype=float).ravel()
        pf = np.array(self.p_false, dtype=float).ravel()
        if pd.size != pf.size or pd.size == 0:
            raise ValidationError("need matching, non-empty probability vectors")
        if np.any((pd < 0) | (pd > 1)) or np.any((pf < 0) | (pf > 1)):
            raise ValidationError("probabilities must lie in [0, 1]")
        if not 0 < self.alpha < 1:
            raise ValidationError("false-alarm cap must lie in (0, 1)")
        pd.setflags(write=False)
        pf.setflags(write=False)
        object.__setattr__(self, "p_detect", pd)
        object.__setattr__(self, "p_false", pf)

    @classmethod
    def random(cls, M: int, seed=None, alpha: float = 0.05, pd_range=(0.3, 0.9),
               pf_range=(0.005, 0.03)) -> "CTDNetwork":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(*pd_range, M), rng.uniform(*pf_range, M), alpha)

    @property
    def size(self) -> int:
        return self.p_detect.size


def _as_members(coalition) -> tuple:
    if isinstance(coalition, (int, np.integer)):
        return members(int(coalition))
    return tuple(sorted(int(i) for i in coalition))


def ctd_value(net: CTDNetwork, coalition) -> float:
    """Fused detection probability of the coalition, or 0 when its false alarms exceed the cap."""
    idx = list(_as_members(coalition))
    if not idx:
        return 0.0
    q_d = 1.0 - float(np.prod(1.0 - net.p_detect[idx]))
    q_f = 1.0 - float(np.prod(1.0 - net.p_false[idx]))
    return q_d if q_f <= net.alpha else 0.0


def ctd_game(net: CTDNetwork) -> TUGame:
    return TUGame(net.size, lambda m: ctd_value(net, m), "ctd")


def ctd_fixture(M: int = 7, seed: int = 0) -> CTDNetwork:
    """Seeded network whose false-alarm cap binds (the grand coalition is worthless)."""
    rng = np.random.default_rng(seed)
    while True:
        net = CTDNetwork.random(M, rng)
        if ctd_value(net, range(M)) == 0.0 and max(ctd_value(net, [i]) for i in range(M)) > 0:
            return net

