import csv
import json
import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from netgames import coalition as co
from netgames import scenarios as sc
from netgames.errors import ShapeError, ValidationError
from netgames.game import ContinuousGame, FiniteGame
from netgames.harness import (
    EXIT_CAPACITY,
    EXIT_NONCONVERGED,
    EXIT_OK,
    EXIT_VALIDATION,
    ResultRecord,
    RunConfig,
    batch,
    canonical_json,
    derive_seed,
    load_game,
    main,
    run,
    save_game,
    splitmix64,
    to_jsonable,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


# -- game files -------------------------------------------------------------------------

def test_load_sensor_fixture():
    g = load_game(fixture("sensor_dilemma.json"))
    assert isinstance(g, FiniteGame) and g == sc.sensor_dilemma(0.2)


def test_load_tu_and_ctd_sections():
    assert load_game(fixture("majority.json")) == co.TUGame.symmetric(3, lambda s: 1.0 if s >= 2 else 0.0)
    ctd = load_game(fixture("ctd_small.json"))
    assert ctd.value([0, 1]) == pytest.approx(0.99)


def test_load_channel_section(tmp_path):
    ch = sc.InterferenceChannel.random(2, 3, seed=0)
    path = tmp_path / "channel.json"
    save_game(sc.pa_game(ch), str(path))
    g = load_game(str(path))
    assert isinstance(g, ContinuousGame)
    assert g.meta["channel"].gains.shape == (2, 2, 3)


def test_missing_payoff_row(tmp_path):
    doc = json.load(open(fixture("sensor_dilemma.json")))
    doc["payoffs"][0][1] = [0.5]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ShapeError, match=r"profile prefix \(1,\)"):
        load_game(str(path))


def test_tu_nonzero_empty_coalition(tmp_path):
    path = tmp_path / "tu.json"
    path.write_text(json.dumps({"players": 2, "values": {"": 1, "0": 1, "1": 1, "0,1": 2}}))
    with pytest.raises(ValidationError, match="empty coalition"):
        load_game(str(path))


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "players": 2,\n  "actions": [,]\n}')
    with pytest.raises(ValidationError, match="line 3"):
        load_game(str(path))


@pytest.mark.parametrize("name", ["sensor_dilemma.json", "majority.json"])
def test_save_load_round_trip_is_byte_stable(tmp_path, name):
    g = load_game(fixture(name))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_game(g, str(a))
    save_game(load_game(str(a)), str(b))
    assert a.read_bytes() == b.read_bytes()


# -- serialization helpers --------------------------------------------------------------------

def test_splitmix_reference_value():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derived_seeds_distinct():
    seeds = {derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000 and all(0 <= s < 2**63 for s in seeds)


def test_float_rounding_and_nonfinite():
    assert to_jsonable(1 / 3) == 0.333333333333
    assert to_jsonable(float("inf")) == "inf"
    assert json.loads(canonical_json({"b": 1, "a": [0.1 + 0.2]})) == {"a": [0.3], "b": 1}


# -- run ------------------------------------------------------------------------------------------

def test_poa_record():
    rec = run(RunConfig("solve", "poa", scenario="cr-dilemma"))
    assert rec.outputs["value"] == 3.0


def test_ducks_record():
    rec = run(RunConfig("learn", "brd-seq", scenario="ducks", seed=7))
    assert rec.converged and rec.outputs["slow_site_count"] == 11


def test_same_config_same_bytes():
    cfg = RunConfig("learn", "rm", scenario="aumann", options={"iters": 2000}, seed=3)
    assert run(cfg).to_json(include_time=False) == run(cfg).to_json(include_time=False)


def test_record_round_trip():
    rec = run(RunConfig("coalition", "least-core", scenario="majority"))
    doc = json.loads(rec.to_json())
    assert ResultRecord.from_dict(doc).to_json() == rec.to_json()


def test_config_validation():
    with pytest.raises(ValidationError):
        run(RunConfig("dance", scenario="cr-dilemma"))
    with pytest.raises(ValidationError):
        run(RunConfig("solve", game_path="/no/such/file.json"))
    with pytest.raises(ValidationError):
        run(RunConfig("learn", "brd-seq", scenario="ducks", options={"iters": 0}))
    with pytest.raises(ValidationError):
        run(RunConfig("coalition", "core", scenario="cr-dilemma"))


def test_errors_carry_config_context():
    with pytest.raises(ValidationError, match="solve cr-dilemma nbs"):
        run(RunConfig("solve", "nbs", scenario="cr-dilemma"))


def test_trace_csv(tmp_path):
    out = tmp_path / "trace.csv"
    run(RunConfig("learn", "brd-seq", scenario="sensor-dilemma", options={"init": ["active", "active"]},
                  out=str(out), fmt="csv"))
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["iter", "player", "action_or_value", "utility"]
    assert rows[1] == ["0", "0", "0", "0"]


@pytest.mark.parametrize("cfg", [
    RunConfig("solve", "ce", scenario="aumann"),
    RunConfig("solve", "zero-sum", scenario="matching-pennies"),
    RunConfig("solve", "support-enum", scenario="aumann"),
    RunConfig("solve", "potential", scenario="mac-band-selection"),
    RunConfig("learn", "fp", scenario="matching-pennies", options={"iters": 500}),
    RunConfig("learn", "rl", scenario="sensor-dilemma", options={"iters": 2000}),
    RunConfig("learn", "consensus", options={"network": [[0, 0.5], [0.5, 0]], "init": [0, 2]}),
    RunConfig("learn", "repeated", scenario="cr-dilemma", options={"iters": 100}),
    RunConfig("learn", "brd-seq", scenario="cournot", options={"eps": 1e-10, "init": [[1.0], [0.0]]}),
    RunConfig("coalition", "shapley-mc", scenario="square", options={"samples": 1000}),
    RunConfig("coalition", "partition", scenario="ctd", params={"M": 5}),
    RunConfig("coalition", "core", game_path=fixture("majority.json")),
    RunConfig("formation", "ntu", scenario="ctd", options={"shuffle": True}, seed=2),
    RunConfig("scenario", scenario="power-allocation"),
])
def test_dispatch_produces_json(cfg):
    rec = run(cfg)
    doc = json.loads(rec.to_json())
    assert doc["error"] is None and doc["outputs"]


def test_repeated_trigger_average():
    rec = run(RunConfig("learn", "repeated", scenario="cr-dilemma", options={"iters": 1000}))
    assert rec.outputs["values"] == [3.0, 3.0]


# -- batch ---------------------------------------------------------------------------------------

def test_empty_batch():
    assert batch([]) == []


def test_failures_isolated():
    cfgs = [RunConfig("solve", "poa", scenario="cr-dilemma"),
            RunConfig("solve", "poa", scenario="no-such-scenario"),
            RunConfig("solve", "pure-ne", scenario="aumann")]
    out = batch(cfgs, parallelism=2)
    assert [r.error is None for r in out] == [True, False, True]
    assert "no-such-scenario" in out[1].error


@given(st.integers(0, 2**32), st.integers(1, 4))
def test_batch_order_independent_of_parallelism(root, workers):
    cfgs = [RunConfig("learn", "rm", scenario="matching-pennies", options={"iters": 300}) for _ in range(4)]
    serial = [r.to_json(include_time=False) for r in batch(cfgs, 1, seed=root)]
    parallel = [r.to_json(include_time=False) for r in batch(cfgs, workers, seed=root)]
    assert serial == parallel
    assert [json.loads(s)["config"]["seed"] for s in serial] == [derive_seed(root, i) for i in range(4)]


def test_reinforcement_batch_on_sensor_dilemma():
    cfgs = [RunConfig("learn", "rl", scenario="sensor-dilemma", options={"iters": 50_000, "lam": 0.1}, seed=s)
            for s in range(100)]
    out = batch(cfgs, parallelism=2)
    assert len(out) == 100
    sleep_locked = sum(all(p[0] > 0.99 for p in r.outputs["probabilities"]) for r in out)
    assert sleep_locked >= 90


# -- CLI -------------------------------------------------------------------------------------------

def test_cli_success(capsys):
    assert main(["solve", "--scenario", "cr-dilemma", "--concept", "poa"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["outputs"]["value"] == 3.0


def test_cli_validation_exit():
    assert main(["solve", "--game", "/no/such/file.json"]) == EXIT_VALIDATION


def test_cli_capacity_exit():
    assert main(["scenario", "ducks", "--params", '{"K": 40}']) == EXIT_CAPACITY


def test_cli_strict_nonconvergence(capsys):
    args = ["learn", "--scenario", "coordination", "--algo", "brd-sim", "--iters", "20", "--init", "[0, 1]"]
    assert main(args) == EXIT_OK
    assert main(args + ["--strict"]) == EXIT_NONCONVERGED


def test_cli_writes_out_file(tmp_path, capsys):
    out = tmp_path / "rec.json"
    assert main(["coalition", "--scenario", "majority", "--solve", "shapley", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["outputs"]["allocation"] == [0.333333333333] * 3


def test_cli_formation_from_file(tmp_path, capsys):
    init = tmp_path / "init.json"
    init.write_text(json.dumps({"partition": [[0, 1, 2, 3]]}))
    rc = main(["formation", "--scenario", "square", "--rule", "equal", "--init", "file",
               "--init-file", str(init)])
    assert rc == EXIT_OK
    assert json.loads(capsys.readouterr().out)["outputs"]["partition"] == [[0, 1, 2, 3]]
