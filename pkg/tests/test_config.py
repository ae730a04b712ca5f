import pytest
import yaml

from tpmarket.config import (
    ConfigError,
    EquilibriumConfig,
    EvolutionConfig,
    PartitionConfig,
    list_presets,
    load_config,
    parse_config,
    preset_path,
)
from tpmarket.evolution import Scenario

EXPECTED_PRESETS = {"fig04", "fig05", "fig15"} | {
    f"fig{n:02d}{s}" for n in range(7, 15) for s in "abc"} | {
    f"fig{n}{s}" for n in (16, 17, 18) for s in "ab"}


def _eq(**model):
    return {"kind": "equilibrium", "model": model}


def test_every_figure_has_a_preset():
    assert set(list_presets()) == EXPECTED_PRESETS


@pytest.mark.parametrize("name", sorted(EXPECTED_PRESETS))
def test_presets_parse(name):
    cfg = load_config(preset_path(name))
    assert isinstance(cfg, (EquilibriumConfig, PartitionConfig, EvolutionConfig))


def test_benchmark_preset_is_the_default_scenario():
    assert load_config(preset_path("fig15")).scenario() == Scenario(grid_step=0.01)


def test_unknown_key_names_the_path():
    data = yaml.safe_load(preset_path("fig07a").read_text())
    data["model"]["segments"][1]["capacity_tbps"] = 0.3
    with pytest.raises(ConfigError, match=r"model\.segments\.1\.capacity_tbps: unknown key"):
        parse_config(data)


def test_negative_capacity_names_the_path():
    with pytest.raises(ConfigError, match=r"model\.segments\.0\.effective_capacity_tbps"):
        parse_config(_eq(segments=[{"name": "A", "quality": 1.0, "effective_capacity_tbps": -1}]))


def test_unknown_kind_and_axis():
    with pytest.raises(ConfigError, match="kind"):
        parse_config({"kind": "plot"})
    data = yaml.safe_load(preset_path("fig08a").read_text())
    data["run"]["sweep"]["axis"] = "speed"
    with pytest.raises(ConfigError, match="run.sweep"):
        parse_config(data)


def test_capacity_sources_are_exclusive():
    seg = {"name": "A", "quality": 1.0, "effective_capacity_tbps": 1.0}
    with pytest.raises(ConfigError, match="capacity_shares"):
        parse_config(_eq(segments=[seg], capacity_shares=[1.0], rho=0.5))
    with pytest.raises(ConfigError):
        parse_config(_eq(segments=[{"name": "A", "quality": 1.0}]))
    with pytest.raises(ConfigError, match="quality_model"):
        parse_config(_eq(segments=[{"name": "A", "quality": 1.0, "raw_capacity_tbps": 2.0}]))


def test_raw_capacity_with_queue_model():
    cfg = parse_config(_eq(segments=[{"name": "A", "quality": 1.0, "raw_capacity_tbps": 10.0,
                                      "quality_model": {"kind": "mg1_fifo", "mean_service_time": 1.0}}]))
    market, _ = cfg.build()
    assert market.mu[0] == pytest.approx(5.0)


def test_explicit_ap_types():
    cfg = parse_config({**_eq(segments=[{"name": "A", "quality": 1.0, "effective_capacity_tbps": 1.0}]),
                        "population": {"types": [{"alpha_tbps": 1.0, "beta": 0.5, "v_usd_per_mbps_month": 0.8}]}})
    _, pop = cfg.build()
    assert len(pop) == 1 and pop.v[0] == 0.8


def test_shares_config_builds_the_system():
    cfg = load_config(preset_path("fig08a"))
    market, pop = cfg.build()
    assert market.total_mu == pytest.approx(0.5)
    assert list(market.mu / market.total_mu) == pytest.approx([1 / 9, 3 / 9, 5 / 9])


def test_point_ranges_expand():
    spec = load_config(preset_path("fig07a")).sweep_spec()
    assert len(spec.points) == 51 and spec.points[0] == 0.0 and spec.points[-1] == 1.0


def test_bad_yaml_and_missing_file(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: [unclosed")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError, match="unknown preset"):
        preset_path("fig99")


def test_evolution_ordering_and_decision_values():
    data = yaml.safe_load(preset_path("fig15").read_text())
    data["model"]["cdn"]["quality"] = 2.0
    with pytest.raises(ConfigError, match="cdn.quality"):
        parse_config(data)
    cfg = load_config(preset_path("fig18b"))
    assert cfg.run.decision.values() == [(3.0, 1.0), (2.0, 1.0), (3.0, 2.0)]
