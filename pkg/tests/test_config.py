"""Config loading, validation, overrides, and the packaged scenarios."""

import pytest

from elqrsim import config as cm


def test_default_values_spot_check():
    cfg = cm.ScenarioConfig()
    assert cfg.nodes == 9 and cfg.protocol == "elqr"
    assert cfg.alpha_j == 14400.0 and cfg.capacity_j == 23760.0
    assert cfg.beta0_deci == 50 and cfg.beta_max_deci == 500
    assert cfg.epoch_rounds == 100 and cfg.hysteresis_deci == 15
    assert cfg.max_retries == 5 and cfg.queue_capacity == 12
    assert cfg.window == 5 and cfg.unicast_fold == 5
    assert cfg.root_powered is True


def test_protocol_id():
    assert cm.ScenarioConfig(protocol="ctp").protocol_id == 0
    assert cm.ScenarioConfig(protocol="elqr").protocol_id == 1


def test_packaged_scenarios_load():
    names = cm.packaged_config_names()
    assert "paper_9node.cfg" in names and "paper_100node.cfg" in names
    nine = cm.load_config(cm.resolve_config_path("paper_9node"))
    assert nine.nodes == 9 and nine.duration_s == 10000.0
    assert nine.alpha_j == 25.0 and nine.capacity_j == 30.0
    big = cm.load_config(cm.resolve_config_path("paper_100node.cfg"))
    assert big.nodes == 100 and big.area_w == 500.0


def test_resolve_prefers_existing_files(tmp_path):
    p = tmp_path / "paper_9node"
    p.write_text("[scenario]\nnodes = 3\n")
    assert cm.resolve_config_path(str(p)) == p
    # unknown bare names fall through unchanged
    assert str(cm.resolve_config_path("no_such_scenario")) == "no_such_scenario"


def test_missing_file_is_a_config_error():
    with pytest.raises(cm.ConfigError, match="config file not found"):
        cm.load_config("/nonexistent/path.cfg")


def test_load_collects_all_problems(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text(
        "[scenario]\n"
        "nodes = twelve\n"
        "window = 5\n"
        "mystery = 1\n"
        "[nonsense]\n"
        "x = 1\n"
    )
    with pytest.raises(cm.ConfigError) as ei:
        cm.load_config(p)
    text = str(ei.value)
    assert "bad value 'twelve'" in text
    assert "belongs in [estimator]" in text
    assert "unknown key 'mystery'" in text
    assert "unknown section [nonsense]" in text
    assert len(ei.value.problems) == 4


def test_load_valid_file(tmp_path):
    p = tmp_path / "ok.cfg"
    p.write_text(
        "[scenario]\n"
        "nodes = 4\n"
        "duration_s = 30\n"
        "protocol = ctp\n"
        "[energy]\n"
        "root_powered = off\n"
    )
    cfg = cm.load_config(p)
    assert cfg.nodes == 4 and cfg.duration_s == 30.0
    assert cfg.protocol == "ctp" and cfg.root_powered is False
    # untouched keys keep defaults
    assert cfg.alpha_j == 14400.0


def test_apply_overrides():
    cfg = cm.ScenarioConfig()
    out = cm.apply_overrides(cfg, ["nodes=12", "protocol=ctp",
                                   "root_powered=no", "alpha_j = 30"])
    assert out.nodes == 12 and out.protocol == "ctp"
    assert out.root_powered is False and out.alpha_j == 30.0
    assert cfg.nodes == 9  # original untouched

    with pytest.raises(cm.ConfigError, match="unknown override key"):
        cm.apply_overrides(cfg, ["bogus=1"])
    with pytest.raises(cm.ConfigError, match="not key=value"):
        cm.apply_overrides(cfg, ["nodes"])
    with pytest.raises(cm.ConfigError, match="bad value"):
        cm.apply_overrides(cfg, ["nodes=one"])
    with pytest.raises(cm.ConfigError, match="nodes must be >= 2"):
        cm.apply_overrides(cfg, ["nodes=1"])


def test_validate_lists_every_problem():
    cfg = cm.ScenarioConfig(nodes=1, traffic_period_s=0.0, protocol="dsr",
                            capacity_j=-1.0)
    with pytest.raises(cm.ConfigError) as ei:
        cm.validate(cfg)
    probs = ei.value.problems
    assert len(probs) >= 4
    assert any("nodes" in s for s in probs)
    assert any("traffic_period_s" in s for s in probs)
    assert any("protocol" in s for s in probs)
    assert any("capacity_j" in s for s in probs)


def test_config_text_round_trip(tmp_path):
    cfg = cm.ScenarioConfig(nodes=25, protocol="ctp", root_powered=False,
                            alpha_j=5.5, seed=42)
    text = cm.config_as_text(cfg)
    assert text.startswith("[scenario]")
    assert "root_powered = false" in text
    p = tmp_path / "dump.cfg"
    p.write_text(text)
    assert cm.load_config(p) == cfg
