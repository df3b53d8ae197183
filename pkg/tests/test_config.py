import pytest

from delegsim.config import (
    config_hash,
    deep_merge,
    list_presets,
    load_config,
    set_dotted,
    validate,
)
from delegsim.errors import ConfigValidationError


def problems(raw, base_dir=None):
    with pytest.raises(ConfigValidationError) as exc:
        validate(raw, base_dir)
    return dict(exc.value.problems)


def test_defaults_validate():
    cfg = validate({})
    assert cfg.population == 100 and cfg.horizon == 300
    assert cfg.user_types.throughput.weights == (0.4, 0.3, 0.3)


def test_every_preset_validates():
    names = list_presets()
    assert {"path_a", "path_b", "path_c", "throughput_cohort", "stratified", "pd_institution", "provenance"} <= set(names)
    from delegsim.engine import load_preset

    for n in names:
        assert load_preset(n).name == n


def test_unknown_key_is_error():
    p = problems({"dynamics": {"temprature": 0.2}})
    assert p == {"dynamics.temprature": "unknown key"}
    assert "bogus" in problems({"bogus": 1})


def test_all_problems_reported_with_locations():
    p = problems({"horizon": 0, "institution": {"audit_probability": 1.5},
                  "games": {"pd": {"T": 1.0}}, "cohorts": [{"user_type": "throughput", "share": 1.0,
                                                          "initial_strategy": "omega"}]})
    assert "horizon" in p
    assert "institution.audit_probability" in p
    assert "games.pd" in p and "T > R > P > S" in p["games.pd"]
    assert "cohorts[0].initial_strategy" in p


def test_weights_must_sum_to_one():
    p = problems({"user_types": {"reflective": {"weights": [0.5, 0.5, 0.5]}}})
    assert any(k.startswith("user_types.reflective.weights") for k in p)


def test_cross_checks():
    p = problems({"cohorts": [{"user_type": "throughput", "share": 0.5}, {"user_type": "assurance", "share": 0.3}]})
    assert "cohorts" in p
    p = problems({"population": 4, "graph": {"kind": "ring", "degree": 4}})
    assert "graph.degree" in p
    p = problems({"graph": {"kind": "edgelist", "path": "missing.txt"}})
    assert "graph.path" in p
    p = problems({"graph": {"degree": 3}})
    assert "graph.degree" in p
    p = problems({"dynamics": {"history_capacity": 1}})
    assert "dynamics.history_capacity" in p


def test_load_config_with_preset(tmp_path):
    f = tmp_path / "s.toml"
    f.write_text('preset = "stratified"\nseed = 7\n[graph]\nweight = 0.0\n')
    cfg, raw = load_config(f)
    assert cfg.seed == 7 and cfg.graph.kind == "watts_strogatz" and cfg.graph.weight == 0.0
    assert len(cfg.cohorts) == 3


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigValidationError, match="not found"):
        load_config(tmp_path / "nope.toml")
    f = tmp_path / "bad.toml"
    f.write_text("horizon = = 3\n")
    with pytest.raises(ConfigValidationError) as exc:
        load_config(f)
    assert "TOML syntax error" in exc.value.problems[0][1]
    f.write_text('preset = "nonexistent"\n')
    with pytest.raises(ConfigValidationError):
        load_config(f)


def test_edgelist_relative_to_config(tmp_path):
    (tmp_path / "g.txt").write_text("0 1 0.5\n1 0 0.5\n")
    f = tmp_path / "s.toml"
    f.write_text('population = 2\n[graph]\nkind = "edgelist"\npath = "g.txt"\n')
    cfg, _ = load_config(f)
    assert cfg.graph.kind == "edgelist"


def test_deep_merge_and_set_dotted():
    base = {"a": {"b": 1, "c": [1, 2]}, "d": 1}
    out = deep_merge(base, {"a": {"c": [3]}, "e": 2})
    assert out == {"a": {"b": 1, "c": [3]}, "d": 1, "e": 2}
    assert base["a"]["c"] == [1, 2]
    assert set_dotted({"x": {"y": 1}}, "x.z.w", 5) == {"x": {"y": 1, "z": {"w": 5}}}


def test_config_hash_is_stable_and_sensitive():
    assert config_hash(validate({})) == config_hash(validate({}))
    assert config_hash(validate({})) != config_hash(validate({"seed": 1}))
    assert len(config_hash(validate({}))) == 64
