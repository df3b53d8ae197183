import json
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from delegsim import rng as crng
from delegsim.cli import main
from delegsim.config import validate
from delegsim.engine import (
    CollectiveEquilibriumLabel as L,
    classify_collective,
    compile_scenario,
    load_preset,
    run_canonical_path,
    run_isolated_agent,
    run_scenario,
    sweep,
)
from delegsim.errors import StateError
from delegsim.output import POPULATION_HEADER, write_outputs, write_sweep
from delegsim.strategy_core import (
    InteractionHistory,
    Reliability,
    SignalVector,
    Strategy,
    error_detected,
    sample_outcome,
    signal_from_outcome,
    transition_deterministic,
)

SMALL = {"population": 20, "horizon": 40}


# ---- counter rng


def test_splitmix_reference_value():
    # first output of the published SplitMix64 generator for state 0
    assert crng._mix(0) == 0xE220A8397B1DCDAF


def test_counter_streams_agree():
    ids = np.arange(50)
    vec = crng.counter_uniforms(9, ids, 4, crng.OUTCOME, 2)
    assert vec.tolist() == [crng.counter_uniform(9, i, 4, crng.OUTCOME, 2) for i in ids]
    assert np.all((vec >= 0) & (vec < 1))
    s = crng.CounterStream(9, 3, 4, crng.OUTCOME)
    assert [s.random() for _ in range(3)] == [crng.counter_uniform(9, 3, 4, crng.OUTCOME, k) for k in range(3)]


def test_counter_uniform_spread():
    u = crng.counter_uniforms(1, np.arange(100_000), 1, crng.THETA)
    assert abs(u.mean() - 0.5) < 0.01
    assert np.histogram(u, 10, (0, 1))[0].min() > 9_500


# ---- runs


def test_base_case_matches_strategy_core():
    cfg = validate({"population": 1, "horizon": 1, "seed": 5})
    res = run_scenario(cfg)
    sc = compile_scenario(cfg)
    omega = sc.user_types["throughput"]
    z0 = SignalVector(0.6, 0.1, 0.5)
    theta = Reliability.RELIABLE if crng.counter_uniform(5, 0, 1, crng.THETA) < 0.8 else Reliability.ERROR_PRONE
    out = sample_outcome(Strategy.BETA, theta, crng.CounterStream(5, 0, 1, crng.OUTCOME), sc.outcome_table)
    det = error_detected(Strategy.BETA, theta, crng.CounterStream(5, 0, 1, crng.DETECT), sc.outcome_table)
    z = signal_from_outcome(out, theta, z0, detected=det, learning_rate=0.3)
    nxt = transition_deterministic(Strategy.BETA, z, InteractionHistory(16, 0.9), omega)
    assert res.agent_trajectory(0) == [Strategy.BETA, nxt]
    assert np.allclose(res.signals[0], z.as_tuple(), atol=1e-15)
    assert res.payoff[0] == pytest.approx(out.quality - out.effort_cost, abs=1e-12)


def test_counts_conserved_and_contiguous():
    res = run_scenario(load_preset("stratified"), seed=3)
    assert res.counts.shape == (res.horizon + 1, 5)
    assert np.all(res.counts.sum(axis=1) == res.population)
    assert np.all(res.omega >= 0) and np.all(res.omega <= 1)


def test_same_seed_same_result_and_seed_matters():
    cfg = validate({**SMALL, "dynamics": {"mode": "stochastic"}})
    a, b = run_scenario(cfg, seed=1), run_scenario(cfg, seed=1)
    assert np.array_equal(a.strategies, b.strategies) and a.events == b.events
    c = run_scenario(cfg, seed=2)
    assert not np.array_equal(a.strategies, c.strategies)


@pytest.mark.parametrize("mode", ["deterministic", "stochastic"])
def test_isolated_reference_matches(mode):
    cfg = validate({**SMALL, "dynamics": {"mode": mode}, "institution": {"audit_probability": 0.3,
                                                                         "penalty_defect": 1.0}})
    res = run_scenario(cfg, seed=4)
    sc = compile_scenario(cfg)
    for i in range(cfg.population):
        traj, sigs = run_isolated_agent(sc, i, 4)
        assert traj == res.agent_trajectory(i)
        assert np.allclose(sigs[-1].as_tuple(), res.signals[i], atol=1e-12)


def test_adding_agents_does_not_perturb_others():
    a = run_scenario(validate({**SMALL, "population": 10}), seed=8)
    b = run_scenario(validate({**SMALL, "population": 30}), seed=8)
    assert np.array_equal(a.strategies, b.strategies[:, :10])


def test_events_carry_causes():
    res = run_scenario(load_preset("pd_institution"), seed=1)
    kinds = Counter(e["kind"] for e in res.events)
    assert kinds["audit"] > 0 and kinds["sanction"] > 0 and kinds["transition"] > 0
    assert all({"episode", "agent", "cause"} <= set(e) for e in res.events)
    assert int(res.sanctions.sum()) == kinds["sanction"]


def test_throughput_cohort_locks_in():
    res = run_scenario(load_preset("throughput_cohort"))
    tli = sum(r is not None and r.value == "ThroughputLockIn" for r in res.regimes)
    assert tli >= 0.9 * res.population
    assert res.classification.label is L.DELEGATION_LOCK_IN


def test_provenance_preset_is_high_integrity():
    res = run_scenario(load_preset("provenance"))
    assert res.classification.label is L.HIGH_INTEGRITY_PROVENANCE
    assert res.shares[-1][4] <= 0.2 and res.disclosure_rate >= 0.8


def test_stratified_seed_batch():
    raw = {"preset": "stratified"}
    from delegsim.config import resolve_preset

    rows = sweep(resolve_preset(raw), {"seed": list(range(1, 31))})
    labels = Counter(r.label for r in rows)
    assert sum(labels.values()) == 30
    assert labels["StratifiedAssurance"] >= 27


# ---- classification


def fake(res, shares_row, n_rows=60):
    counts = np.tile(np.array(shares_row) * res.population, (n_rows, 1)).astype(np.int64)
    return replace(res, counts=counts, horizon=n_rows - 1, classification=None)


@pytest.fixture(scope="module")
def base_result():
    return run_scenario(validate({"population": 10, "horizon": 5}))


def test_classify_all_delta(base_result):
    c = classify_collective(fake(base_result, [0, 0, 0, 0, 1.0]))
    assert c.label is L.DELEGATION_LOCK_IN
    assert c.cutoffs["lockin_delta_share"] == 0.8


def test_classify_stratified(base_result):
    # order alpha, gamma, beta, epsilon, delta
    c = classify_collective(fake(base_result, [0.2, 0.0, 0.2, 0.4, 0.2]))
    assert c.label is L.STRATIFIED_ASSURANCE
    assert c.predicates["StratifiedAssurance"] and not c.predicates["DelegationLockIn"]


def test_classify_non_stationary_is_unclassified(base_result):
    rows = np.array([[2, 0, 2, 4, 2]] * 30 + [[0, 0, 2, 2, 6]] * 30)
    c = classify_collective(replace(base_result, counts=rows, horizon=59, classification=None))
    assert c.label is L.UNCLASSIFIED


def test_classify_incomplete_raises(base_result):
    with pytest.raises(StateError):
        classify_collective(replace(base_result, completed=False))


# ---- canonical paths


def test_canonical_paths():
    for key, want in (("A", "AdaptiveRecalibration"), ("B", "ThroughputLockIn"), ("C", "MixedAssurance")):
        traj, regime = run_canonical_path(key, seed=1)
        assert regime is not None and regime.value == want
        assert all(abs(int(a) - int(b)) <= 1 for a, b in zip(traj, traj[1:]))
    with pytest.raises(KeyError):
        run_canonical_path("D")


# ---- sweeps


def test_one_point_sweep_equals_run():
    raw = dict(SMALL)
    rows = sweep(raw, {"institution.audit_probability": [0.0]})
    res = run_scenario(validate(raw))
    assert rows[0].status == "ok" and rows[0].label == res.classification.label.value
    assert rows[0].stats["share_delta"] == float(res.shares[-1][4])


def test_pd_audit_sweep_monotone():
    from delegsim.config import preset_raw

    rows = sweep(preset_raw("pd_institution"), {"institution": {"audit_probability": [0.0, 0.5, 1.0]}})
    d = [r.stats["share_delta"] for r in rows]
    assert all(r.status == "ok" for r in rows)
    assert d[0] >= d[1] >= d[2] and d[0] > d[2]


def test_sweep_records_failures(tmp_path):
    rows = sweep(dict(SMALL), {"horizon": [5, 0], "bogus_key": [1]})
    assert [r.status for r in rows] == ["invalid", "invalid"]
    rows = sweep(dict(SMALL), {"horizon": [5, 0]})
    assert [r.status for r in rows] == ["ok", "invalid"]
    assert "horizon" in rows[1].error
    text = write_sweep(rows, tmp_path / "s.csv").read_text().splitlines()
    assert text[0].startswith("point,horizon,status,label")
    assert len(text) == 3


# ---- outputs and cli


def test_outputs_are_schema_correct(tmp_path):
    cfg = validate({**SMALL, "thinning": 7})
    res = run_scenario(cfg)
    write_outputs(res, tmp_path, thinning=7)
    pop = (tmp_path / "population.csv").read_text().splitlines()
    assert pop[0].split(",") == POPULATION_HEADER
    assert [int(r.split(",")[0]) for r in pop[1:]] == [0, 7, 14, 21, 28, 35, 40]
    assert len((tmp_path / "agents.csv").read_text().splitlines()) == 21
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert summ["label"] == res.classification.label.value and len(summ["config_hash"]) == 64
    for line in (tmp_path / "events.jsonl").read_text().splitlines():
        json.loads(line)


def test_cli_round_trip(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text("population = 10\nhorizon = 20\n")
    assert main(["validate", str(cfg)]) == 0
    assert main(["run", str(cfg), "--seed", "3", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "population.csv").exists()
    capsys.readouterr()
    assert main(["path", "B", "--seed", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["regime"] == "ThroughputLockIn"
    grid = tmp_path / "g.toml"
    grid.write_text("seed = [1, 2]\n")
    assert main(["sweep", str(cfg), "--grid", str(grid), "--out", str(tmp_path / "sw")]) == 0
    assert (tmp_path / "sw" / "sweep.csv").exists()
    assert main(["validate", "throughput_cohort"]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("horizon = 0\nwhatever = 1\n")
    assert main(["validate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "horizon" in err and "whatever: unknown key" in err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    good = tmp_path / "g.toml"
    good.write_text("population = 3\nhorizon = 2\n")
    assert main(["sweep", str(good), "--grid", str(tmp_path / "nogrid.toml")]) == 2
    (tmp_path / "blocker").write_text("")
    assert main(["run", str(good), "--out", str(tmp_path / "blocker" / "x")]) == 1
