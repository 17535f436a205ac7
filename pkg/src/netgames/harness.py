"""Command-line entry point, run configuration, JSON/CSV I/O and batch execution.

Examples::

    netgames solve --scenario cr-dilemma --concept poa
    netgames learn --scenario ducks --algo brd-seq --seed 7
    netgames coalition --scenario majority --solve least-core
    netgames formation --scenario ctd --params '{"M": 7}' --rule ntu --shuffle
    netgames scenario sensor-dilemma --params '{"e": 0.3}'
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import coalition as co
from . import dynamics as dy
from . import formation as fo
from . import scenarios as sc
from . import solvers as so
from .errors import CapacityError, ContractError, GameError, ShapeError, ValidationError
from .game import (
    ContinuousGame,
    FiniteGame,
    JointDistribution,
    MixedProfile,
    find_exact_potential,
    is_supermodular,
    price_of_anarchy,
    social_optimum,
)

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_NONCONVERGED = 0, 1, 2, 3, 4
COMMANDS = ("solve", "learn", "coalition", "formation", "scenario")
CONCEPTS = ("pure-ne", "mixed-ne-2x2", "support-enum", "zero-sum", "ce", "cce", "poa",
            "social-optimum", "potential", "supermodular", "nbs")
ALGOS = ("brd-seq", "brd-sim", "fp", "rl", "rm", "consensus", "repeated")
COALITION_SOLVERS = ("core", "least-core", "shapley", "shapley-mc", "partition",
                     "superadditive", "convex", "balanced")
RULES = ("equal", "shapley", "ntu")
SIG_DIGITS = 12

# ---------------------------------------------------------------------------
# Seeds and serialization
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 generator (state advance plus output mix)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, index: int) -> int:
    """Per-run seed: ``splitmix64(root + (index + 1) * golden_gamma)`` truncated to 63 bits."""
    return splitmix64((int(root) + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64) >> 1


def round_sig(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def to_jsonable(obj):
    """Plain JSON types; floats rounded to 12 significant digits, non-finite as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, co.Partition):
        return [list(b) for b in obj.blocks]
    if isinstance(obj, MixedProfile):
        return [to_jsonable(p) for p in obj.strategies]
    if isinstance(obj, JointDistribution):
        return {"action_counts": list(obj.action_counts), "probs": to_jsonable(obj.probs)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return round_sig(x)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# Game files
# ---------------------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return doc


def game_from_document(doc: dict):
    """FiniteGame, TUGame, or (for ``channel`` / ``ctd`` sections) the derived game."""
    if "channel" in doc:
        ch = doc["channel"]
        if "gains" not in ch:
            raise ValidationError("channel.gains: missing")
        channel = sc.InterferenceChannel(np.asarray(ch["gains"], dtype=float), ch.get("noise", 1.0),
                                         ch.get("budget", 1.0), bool(ch.get("mac", False)))
        return sc.pa_game(channel)
    if "ctd" in doc:
        c = doc["ctd"]
        for key in ("p_detect", "p_false", "alpha"):
            if key not in c:
                raise ValidationError(f"ctd.{key}: missing")
        return sc.ctd_game(sc.CTDNetwork(c["p_detect"], c["p_false"], c["alpha"]))
    if "values" in doc:
        return co.TUGame.from_dict(doc)
    if "payoffs" in doc:
        return FiniteGame.from_dict(doc)
    raise ValidationError("unrecognized game document: expected 'payoffs', 'values', 'channel' or 'ctd'")


def load_game(path: str):
    if not os.path.exists(path):
        raise ValidationError(f"{path}: no such file")
    try:
        return game_from_document(_read_json(path))
    except (ValidationError, ShapeError, CapacityError) as exc:
        raise type(exc)(f"{path}: {exc}") from None


def game_document(game) -> dict:
    if isinstance(game, (FiniteGame, co.TUGame)):
        return game.to_dict()
    if isinstance(game, ContinuousGame) and "channel" in game.meta:
        ch = game.meta["channel"]
        return {"channel": {"gains": ch.gains.tolist(), "noise": ch.noise, "budget": ch.budget, "mac": ch.mac}}
    raise ValidationError(f"no file format for {type(game).__name__}")


def save_game(game, path: str):
    with open(path, "w") as fh:
        fh.write(canonical_json(game_document(game)))


# ---------------------------------------------------------------------------
# Scenario registry
# ---------------------------------------------------------------------------


def _beamforming(p):
    return sc.beamforming_game(sc.BeamformingInstance.random(p.get("N", 4), p.get("seed", 0), p.get("power", 1.0)))


SCENARIOS = {
    "sensor-dilemma": lambda p: sc.sensor_dilemma(p.get("e", 0.2)),
    "cr-dilemma": lambda p: sc.cr_dilemma(),
    "aumann": lambda p: sc.aumann_coordination(),
    "matching-pennies": lambda p: sc.matching_pennies(),
    "coordination": lambda p: sc.coordination_game(p.get("bonus", 1.0)),
    "ducks": lambda p: sc.duck_foraging(p.get("K", 33), p.get("rates", (24.0, 12.0))),
    "band-selection": lambda p: sc.two_user_band_selection(p.get("seed", 0), p.get("snr_db", 10.0),
                                                           p.get("cross", 0.5)),
    "mac-band-selection": lambda p: sc.bs_game(sc.InterferenceChannel.random(
        p.get("K", 3), p.get("N", 3), p.get("seed", 0), mac=True)),
    "power-allocation": lambda p: sc.pa_game(sc.InterferenceChannel.random(
        p.get("K", 2), p.get("N", 2), p.get("seed", 0), cross=p.get("cross", 0.1))),
    "energy-efficiency": lambda p: sc.energy_efficiency_game(
        p.get("K", 3), p.get("f_kind", "exp"), p.get("param", 0.2), p.get("p_max", 1.0), p.get("pricing", 0.0)),
    "cournot": lambda p: sc.cournot_duopoly(),
    "linear-system": lambda p: sc.linear_system_game(p.get("A", [[2, 1], [1, 2]]), p.get("y", [3, 3])),
    "beamforming": _beamforming,
    "ctd": lambda p: sc.ctd_game(sc.ctd_fixture(p.get("M", 7), p.get("seed", 0))),
    "majority": lambda p: co.TUGame.symmetric(p.get("K", 3), lambda s: 1.0 if 2 * s > p.get("K", 3) else 0.0,
                                             "majority"),
    "square": lambda p: co.TUGame.symmetric(p.get("K", 4), lambda s: float(s * s), "square"),
}


def build_scenario(name: str, params: dict | None = None):
    if name not in SCENARIOS:
        raise ValidationError(f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}")
    return SCENARIOS[name](params or {})


# ---------------------------------------------------------------------------
# Configuration and records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """What to run. ``method`` is the concept, algorithm, coalition solver or allocation rule."""

    command: str
    method: str | None = None
    scenario: str | None = None
    game_path: str | None = None
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    seed: int | None = 0
    tol: float = 1e-9
    out: str | None = None
    fmt: str = "json"

    def validate(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"command must be one of {COMMANDS}")
        if self.scenario is not None and self.game_path is not None:
            raise ValidationError("give either a scenario or a game file, not both")
        if self.game_path is not None and not os.path.exists(self.game_path):
            raise ValidationError(f"game file {self.game_path} does not exist")
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if self.fmt not in ("json", "csv"):
            raise ValidationError("format must be json or csv")
        for key in ("iters", "samples", "max_iters", "grid"):
            if key in self.options and int(self.options[key]) < 1:
                raise ValidationError(f"{key} must be at least 1")
        for key in ("eps", "kappa"):
            if key in self.options and float(self.options[key]) < 0:
                raise ValidationError(f"{key} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ResultRecord:
    config: dict
    kind: str
    outputs: dict
    converged: bool | None = None
    wall_time: float = 0.0
    error: str | None = None

    def to_dict(self, include_time: bool = True) -> dict:
        doc = {"config": self.config, "kind": self.kind, "outputs": self.outputs,
               "converged": self.converged, "error": self.error}
        if include_time:
            doc["wall_time"] = self.wall_time
        return doc

    def to_json(self, include_time: bool = True) -> str:
        return canonical_json(self.to_dict(include_time))

    @classmethod
    def from_dict(cls, doc: dict) -> "ResultRecord":
        return cls(doc["config"], doc["kind"], doc["outputs"], doc.get("converged"),
                   doc.get("wall_time", 0.0), doc.get("error"))


def _source(config: RunConfig):
    if config.game_path is not None:
        return load_game(config.game_path)
    if config.scenario is not None:
        return build_scenario(config.scenario, config.params)
    raise ValidationError("need a scenario name or a game file")


def _finite(game) -> FiniteGame:
    if not isinstance(game, FiniteGame):
        raise ValidationError(f"this operation needs a finite strategic-form game, got {type(game).__name__}")
    return game


def _tu(game) -> co.TUGame:
    if not isinstance(game, co.TUGame):
        raise ValidationError(f"this operation needs a TU coalition game, got {type(game).__name__}")
    return game


def _run_solve(config: RunConfig, game):
    c = config.method or "pure-ne"
    tol = config.tol
    opts = config.options
    if c == "nbs":
        sq = opts.get("status_quo")
        if sq is None:
            if isinstance(game, ContinuousGame) and game.name == "beamforming":
                sq = game.utilities(([0.0], [0.0]))
            else:
                raise ValidationError("nbs needs options.status_quo")
        res = so.nash_bargaining(game, sq, int(opts.get("grid", 51)))
        return {"concept": c, "argument": list(res.argument), "values": res.utilities,
                "nash_product": res.nash_product}, None
    g = _finite(game)
    if c == "pure-ne":
        ne = so.enumerate_pure_ne(g, tol)
        return {"concept": c, "argument": ne, "values": [g.payoff_vector(s) for s in ne]}, None
    if c == "mixed-ne-2x2":
        ne = so.mixed_ne_2x2(g, tol)
        return {"concept": c, "argument": ne, "values": [_mixed_payoffs(g, m) for m in ne]}, None
    if c == "support-enum":
        ne = so.support_enumeration_2p(g, opts.get("max_support"))
        return {"concept": c, "argument": ne, "values": [_mixed_payoffs(g, m) for m in ne]}, None
    if c == "zero-sum":
        v, prof = so.zero_sum_value(g, tol)
        return {"concept": c, "argument": prof, "value": v}, None
    if c in ("ce", "cce"):
        w = opts.get("weights", [1.0] * g.num_players)
        res = so.optimize_over_equilibrium_set(g, w, c.upper())
        return {"concept": c, "argument": res.distribution, "values": res.payoffs,
                "value": res.objective}, None
    if c == "poa":
        return {"concept": c, "argument": so.enumerate_pure_ne(g, tol), "value": price_of_anarchy(g, tol=tol)}, None
    if c == "social-optimum":
        prof, w = social_optimum(g)
        return {"concept": c, "argument": prof, "value": w}, None
    if c == "potential":
        cert = find_exact_potential(g, tol)
        return {"concept": c, "argument": None if cert is None else cert.maximizers(),
                "value": None if cert is None else cert.potential}, None
    if c == "supermodular":
        return {"concept": c, "argument": None, "value": is_supermodular(g, tol)}, None
    raise ValidationError(f"unknown concept {c!r}; choose from {CONCEPTS}")


def _mixed_payoffs(g: FiniteGame, m: MixedProfile):
    from .game import expected_utility
    return [expected_utility(g, m, k) for k in range(g.num_players)]


def _default_init(game):
    if isinstance(game, FiniteGame):
        return (0,) * game.num_players
    return tuple(lo.copy() for lo in game.lower)


def _parse_init(game, init):
    if init is None:
        return _default_init(game)
    if isinstance(game, FiniteGame):
        return tuple(game.action_index(k, a) for k, a in enumerate(init))
    return tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in init)


def _run_learn(config: RunConfig, game):
    algo = config.method or "brd-seq"
    opts = config.options
    iters = int(opts.get("iters", 1000))
    eps = float(opts.get("eps", 0.0))
    seed = config.seed
    if algo == "consensus":
        net = opts.get("network")
        if net is None:
            raise ValidationError("consensus needs options.network (weight matrix)")
        tr = dy.consensus(dy.ConsensusNetwork.from_matrix(net), opts.get("init"), eps or 1e-9, iters)
        return {"algorithm": algo, "final": tr.final, "iterations": tr.iterations}, tr
    if algo == "repeated":
        g = _finite(game)
        coop = tuple(opts.get("cooperate", social_optimum(g)[0]))
        punish = tuple(opts.get("punish", so.enumerate_pure_ne(g)[0]))
        plan = opts.get("plan", "trigger")
        if plan == "trigger":
            strategies = dy.cooperative_trigger_plan(g, coop, punish)
        elif plan == "defect":
            strategies = [dy.always(a) for a in punish]
        else:
            raise ValidationError("plan must be 'trigger' or 'defect'")
        sched = dy.WeightSchedule(opts.get("schedule", "running-average"), opts.get("horizon"), opts.get("discount"))
        res = dy.repeated_game_run(g, strategies, sched, iters)
        return {"algorithm": algo, "values": res.utilities, "plan": plan}, None
    if game is None:
        raise ValidationError("need a game")
    if algo == "brd-seq":
        tr = dy.brd_sequential(game, _parse_init(game, opts.get("init")), eps, iters, seed)
    elif algo == "brd-sim":
        tr = dy.brd_simultaneous(game, _parse_init(game, opts.get("init")), eps, iters,
                                 float(opts.get("kappa", 0.0)), seed)
    elif algo == "fp":
        tr = dy.fictitious_play(_finite(game), _parse_init(game, opts.get("init")), iters, seed)
    elif algo == "rl":
        g = dy.normalize_utilities(_finite(game)) if opts.get("normalize", True) else _finite(game)
        tr = dy.bush_mosteller(g, None, float(opts.get("lam", 0.1)), iters, seed)
    elif algo == "rm":
        tr = dy.regret_matching(_finite(game), iters, seed)
    else:
        raise ValidationError(f"unknown algorithm {algo!r}; choose from {ALGOS}")
    out = {"algorithm": algo, "final": tr.final, "iterations": tr.iterations,
           "final_utilities": tr.utilities[-1] if len(tr.utilities) else None}
    if tr.empirical_joint is not None:
        out["empirical_joint"] = tr.empirical_joint
    if "probabilities" in tr.extra:
        out["probabilities"] = tr.extra["probabilities"]
    if config.scenario == "ducks":
        out["slow_site_count"] = sc.slow_site_count(tr.final)
    return out, tr


def _run_coalition(config: RunConfig, game):
    g = _tu(game)
    s = config.method or "core"
    opts = config.options
    if s == "core":
        r = co.core_solve(g, config.tol)
        return {"solver": s, "nonempty": r.nonempty, "allocation": r.allocation, "lp_value": r.lp_value,
                "balancing_weights": {",".join(map(str, co.members(m))): w
                                      for m, w in sorted(r.balancing_weights.items())}}
    if s == "least-core":
        eps, x = co.least_epsilon_core(g, bool(opts.get("strong", False)))
        return {"solver": s, "epsilon": eps, "allocation": x, "strong": bool(opts.get("strong", False))}
    if s == "shapley":
        return {"solver": s, "allocation": co.shapley(g)}
    if s == "shapley-mc":
        r = co.shapley_monte_carlo(g, int(opts.get("samples", 10_000)), config.seed,
                                   workers=int(opts.get("workers", 1)))
        return {"solver": s, "allocation": r.values, "stderr": r.stderr, "samples": r.samples}
    if s == "partition":
        p, total = co.optimal_partition(g)
        return {"solver": s, "partition": p, "value": total}
    if s == "superadditive":
        ok, w = co.is_superadditive(g, config.tol)
        return {"solver": s, "value": ok, "witness": None if w is None else [co.members(m) for m in w]}
    if s == "convex":
        ok, w = co.is_convex(g, config.tol)
        return {"solver": s, "value": ok,
                "witness": None if w is None else [w[0], co.members(w[1]), co.members(w[2])]}
    if s == "balanced":
        return {"solver": s, "value": co.is_balanced(g, config.tol)}
    raise ValidationError(f"unknown coalition solver {s!r}; choose from {COALITION_SOLVERS}")


def _run_formation(config: RunConfig, game):
    opts = config.options
    rule = fo.AllocationRule(config.method or "equal", game)
    K = rule.num_players
    init = opts.get("init", "singletons")
    if init == "singletons":
        part = co.Partition.singletons(K)
    elif init == "grand":
        part = co.Partition.grand(K)
    elif init == "file":
        path = opts.get("init_file")
        if not path:
            raise ValidationError("init 'file' needs options.init_file")
        part = co.Partition(tuple(tuple(b) for b in _read_json(path)["partition"]), K)
    else:
        raise ValidationError("init must be singletons, grand or file")
    seed = config.seed if opts.get("shuffle", False) else None
    st = fo.merge_split_run(rule, part, int(opts.get("max_iters", 500)), int(opts.get("max_group", 2)),
                            opts.get("split_mode", "auto"), seed)
    stable, witness = fo.is_merge_split_stable(st, rule, int(opts.get("max_group", 2)), opts.get("split_mode", "auto"))
    return {"rule": rule.kind, "partition": st.partition, "payoffs": st.payoffs, "history": st.history,
            "operations": st.operations, "stable": stable}, st.converged


def run(config: RunConfig) -> ResultRecord:
    """Dispatch one configuration. Module errors are re-raised with the config attached."""
    config.validate()
    start = time.perf_counter()
    trace = None
    converged = None
    try:
        if config.command == "scenario":
            if config.scenario is None:
                raise ValidationError("scenario command needs a scenario name")
            game = build_scenario(config.scenario, config.params)
            try:
                doc = game_document(game)
            except ValidationError:
                doc = {"name": getattr(game, "name", ""), "players": game.num_players,
                       "lower": list(game.lower), "upper": list(game.upper)}
            outputs, kind = {"game": doc}, config.scenario
        elif config.command == "solve":
            outputs, _ = _run_solve(config, _source(config))
            kind = outputs["concept"]
        elif config.command == "learn":
            game = None
            if config.method != "consensus":
                game = _source(config)
            outputs, trace = _run_learn(config, game)
            converged = None if trace is None else bool(trace.converged)
            kind = outputs["algorithm"]
        elif config.command == "coalition":
            outputs = _run_coalition(config, _source(config))
            kind = outputs["solver"]
        else:
            outputs, converged = _run_formation(config, _source(config))
            kind = outputs["rule"]
    except GameError as exc:
        exc.args = (f"[{config.command} {config.scenario or config.game_path} {config.method}] {exc}",)
        raise
    rec = ResultRecord(to_jsonable(config.to_dict()), kind, to_jsonable(outputs), converged,
                       time.perf_counter() - start)
    if config.out:
        _write_outputs(config, rec, trace)
    return rec


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter", "player", "action_or_value", "utility"])
    for t, k, a, u in trace.csv_rows():
        w.writerow([t, k, a, f"{u:.{SIG_DIGITS}g}"])
    return buf.getvalue()


def _flat_rows(prefix, obj):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flat_rows(f"{prefix}.{k}" if prefix else str(k), obj[k])
    else:
        yield prefix, json.dumps(obj)


def _write_outputs(config: RunConfig, rec: ResultRecord, trace):
    if config.fmt == "json":
        with open(config.out, "w") as fh:
            fh.write(rec.to_json())
        return
    with open(config.out, "w") as fh:
        if trace is not None:
            fh.write(trace_csv(trace))
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(_flat_rows("", rec.outputs))


def _error_record(config: RunConfig, exc: Exception) -> ResultRecord:
    cfg = to_jsonable(config.to_dict()) if isinstance(config, RunConfig) else {"raw": str(config)}
    return ResultRecord(cfg, "error", {}, None, 0.0, f"{type(exc).__name__}: {exc}")


def batch(configs, parallelism: int = 1, seed: int | None = None) -> list:
    """Run independent configs; results keep input order, failures become error records.

    With a top-level ``seed``, config i runs with ``derive_seed(seed, i)``
    so results do not depend on ``parallelism``.
    """
    configs = list(configs)
    if seed is not None:
        configs = [RunConfig(**{**c.to_dict(), "seed": derive_seed(seed, i)}) for i, c in enumerate(configs)]

    def one(cfg):
        try:
            return run(cfg)
        except Exception as exc:  # isolate per-config failures
            return _error_record(cfg, exc)

    if parallelism <= 1 or len(configs) <= 1:
        return [one(c) for c in configs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, configs))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc.msg}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="write the record (json) or trace/table (csv) here")
    common.add_argument("--tol", type=float, default=1e-9, help="numerical tolerance")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--strict", action="store_true", help="exit 4 when a run does not converge")
    common.add_argument("--params", type=_json_arg, default={}, help="scenario parameters as JSON")

    source = argparse.ArgumentParser(add_help=False)
    src = source.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="built-in scenario name")
    src.add_argument("--game", dest="game_path", help="path to a game JSON file")

    parser = argparse.ArgumentParser(prog="netgames", description="Game-theory toolkit for networked agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common, source], help="equilibria, PoA, bargaining")
    p.add_argument("--concept", choices=CONCEPTS, default="pure-ne")
    p.add_argument("--weights", type=_json_arg)
    p.add_argument("--status-quo", type=_json_arg)
    p.add_argument("--grid", type=int)
    p.add_argument("--max-support", type=int)

    p = sub.add_parser("learn", parents=[common, source], help="learning dynamics")
    p.add_argument("--algo", choices=ALGOS, default="brd-seq")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--kappa", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--init", type=_json_arg)
    p.add_argument("--network", type=_json_arg, help="consensus weight matrix")
    p.add_argument("--plan", choices=("trigger", "defect"))

    p = sub.add_parser("coalition", parents=[common, source], help="core, Shapley, partitions")
    p.add_argument("--solve", choices=COALITION_SOLVERS, default="core")
    p.add_argument("--strong", action="store_true")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("formation", parents=[common, source], help="merge-and-split")
    p.add_argument("--rule", choices=RULES, default="equal")
    p.add_argument("--init", choices=("singletons", "grand", "file"), default="singletons")
    p.add_argument("--init-file")
    p.add_argument("--max-group", type=int, default=2)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--split-mode", choices=("auto", "pairs", "full"), default="auto")
    p.add_argument("--shuffle", action="store_true", help="seeded random scan order")

    p = sub.add_parser("scenario", parents=[common], help="print a built-in scenario as JSON")
    p.add_argument("name", choices=sorted(SCENARIOS))
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cmd = ns.command
    opts = {}
    if cmd == "solve":
        method = ns.concept
        for key in ("weights", "status_quo", "grid", "max_support"):
            if getattr(ns, key) is not None:
                opts[key] = getattr(ns, key)
    elif cmd == "learn":
        method = ns.algo
        opts.update(iters=ns.iters, eps=ns.eps)
        for key in ("kappa", "lam", "init", "network", "plan"):
            if getattr(ns, key) is not None:
                opts[key] = getattr(ns, key)
    elif cmd == "coalition":
        method = ns.solve
        opts["strong"] = ns.strong
        if ns.samples is not None:
            opts["samples"] = ns.samples
    elif cmd == "formation":
        method = ns.rule
        opts.update(init=ns.init, max_group=ns.max_group, max_iters=ns.max_iters,
                    split_mode=ns.split_mode, shuffle=ns.shuffle)
        if ns.init_file:
            opts["init_file"] = ns.init_file
    else:
        method = None
    scenario = ns.name if cmd == "scenario" else ns.scenario
    return RunConfig(cmd, method, scenario, getattr(ns, "game_path", None), ns.params, opts,
                     ns.seed, ns.tol, ns.out, ns.fmt)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        rec = run(config_from_args(ns))
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValidationError, ShapeError, ContractError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(rec.to_json())
    if ns.strict and rec.converged is False:
        print("run did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
