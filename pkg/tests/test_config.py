from __future__ import annotations

import json

import pytest

from netreduce import (
    ConfigError,
    NetworkSpec,
    RunManifest,
    config_to_dict,
    default_ratio_grid,
    parse_config,
    preset_config,
)
from netreduce.presets import PRESET_NAMES


def _base_doc() -> dict:
    return {
        "model": "sis",
        "network": {"kind": "er", "sizes": [100, 200], "c": 0.5},
        "mu_e": 100.0,
        "p": [0.25, 0.5, 0.75],
        "net_seeds": [0, 1, 2],
    }


def test_parse_minimal_config():
    cfg = parse_config(json.dumps(_base_doc()))
    assert cfg.model == "sis"
    assert cfg.network.kind == "er"
    assert cfg.network.sizes == (100, 200)
    assert cfg.p_values == (0.25, 0.5, 0.75)
    assert cfg.mode == "closed_form_paper"
    assert cfg.edge_types == "quenched"
    assert cfg.init_regimes == ("low", "high")
    assert cfg.dyn_seeds == (0,)


def test_default_ratio_grid_shape():
    grid = default_ratio_grid()
    assert len(grid) == 24
    assert grid[0] == pytest.approx(0.2)
    assert grid[-1] == pytest.approx(5.0)
    steps = [b - a for a, b in zip(grid, grid[1:])]
    assert max(steps) - min(steps) < 1e-12  # uniform spacing


def test_scalar_p_promoted_to_list():
    doc = _base_doc()
    doc["p"] = 0.5
    assert parse_config(doc).p_values == (0.5,)


def test_error_messages_carry_key_paths():
    doc = _base_doc()
    doc["p"] = [0.5, 1.5]
    with pytest.raises(ConfigError, match=r"p\[1\]"):
        parse_config(doc)
    doc = _base_doc()
    doc["network"]["c"] = 2.0
    with pytest.raises(ConfigError, match="network.c"):
        parse_config(doc)
    doc = _base_doc()
    doc["mu_e"] = -3.0
    with pytest.raises(ConfigError, match="mu_e"):
        parse_config(doc)


def test_unknown_keys_rejected():
    doc = _base_doc()
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="extra"):
        parse_config(doc)
    doc = _base_doc()
    doc["network"]["m"] = 3  # BA parameter on an ER network
    with pytest.raises(ConfigError, match="network.m"):
        parse_config(doc)


def test_invalid_json_reported():
    with pytest.raises(ConfigError, match="JSON"):
        parse_config("{not json")


def test_seeds_must_be_nonnegative():
    doc = _base_doc()
    doc["net_seeds"] = [0, -1]
    with pytest.raises(ConfigError, match="net_seeds"):
        parse_config(doc)


def test_file_network_takes_single_seed():
    doc = _base_doc()
    doc["network"] = {"kind": "file", "path": "x.edges"}
    doc["net_seeds"] = [0, 1]
    with pytest.raises(ConfigError, match="net_seeds"):
        parse_config(doc)
    doc["net_seeds"] = [0]
    cfg = parse_config(doc)
    assert cfg.network.path == "x.edges"
    assert cfg.network.binarize is False


def test_ratio_grid_forms():
    doc = _base_doc()
    doc["ratio_grid"] = [1.0, 2.0, 3.0]
    assert parse_config(doc).ratio_grid == (1.0, 2.0, 3.0)
    doc["ratio_grid"] = {"lo": 0.5, "hi": 2.0, "count": 4}
    assert parse_config(doc).ratio_grid == pytest.approx((0.5, 1.0, 1.5, 2.0))
    doc["ratio_grid"] = [0.0]
    with pytest.raises(ConfigError, match=r"ratio_grid\[0\]"):
        parse_config(doc)


def test_mode_aliases_and_validation():
    doc = _base_doc()
    doc["mode"] = "mixture"
    assert parse_config(doc).mode == "closed_form_mixture"
    doc["mode"] = "spectral"
    with pytest.raises(ConfigError, match="mode"):
        parse_config(doc)


def test_integrator_block():
    doc = _base_doc()
    doc["integrator"] = {"rel_tol": 1e-7, "t_max": 25.0}
    cfg = parse_config(doc)
    assert cfg.integrator.rel_tol == 1e-7
    assert cfg.integrator.t_max == 25.0
    assert cfg.integrator.abs_tol == 1e-9  # untouched default
    doc["integrator"] = {"rel_tol": 0.0}
    with pytest.raises(ConfigError, match="integrator.rel_tol"):
        parse_config(doc)


def test_sigma_e_recorded_but_optional():
    doc = _base_doc()
    cfg = parse_config(doc)
    assert cfg.sigma_e is None
    doc["sigma_e"] = 57.7
    assert parse_config(doc).sigma_e == 57.7


def test_config_echo_reparses_equal():
    doc = _base_doc()
    doc["sigma_e"] = 57.7
    doc["mode"] = "mixture"
    doc["integrator"] = {"t_max": 30.0}
    cfg = parse_config(doc)
    assert parse_config(config_to_dict(cfg)) == cfg


def test_network_descriptions():
    assert NetworkSpec(kind="er", sizes=(10,), c=0.5).describe() == "er(c=0.5)"
    assert NetworkSpec(kind="ba", sizes=(10,), m=25).describe() == "ba(m=25)"
    assert NetworkSpec(kind="sw", sizes=(10,), k=4, beta=0.1).describe() == "sw(k=4,beta=0.1)"
    assert NetworkSpec(kind="file", path="/a/b/net.edges").describe() == "file(net.edges)"


def test_manifest_round_trip():
    m = RunManifest(
        config={"model": "sis"},
        version="0.1.0",
        timestamp="2024-01-01T00:00:00Z",
        cell_counts={"total": 4, "converged": 4, "not_converged": 0, "hard_errors": 0},
        runtime_seconds=1.25,
    )
    doc = json.loads(m.to_json())
    assert doc["cell_counts"]["total"] == 4
    assert doc["config"] == {"model": "sis"}
    assert doc["runtime_seconds"] == 1.25


# ------------------------------------------------------------------ presets


def test_preset_names_cover_the_published_panels():
    assert PRESET_NAMES == ("fig1", "fig2", "fig3", "fig4", "fig5")


def test_preset_synthetic_defaults():
    cfg = preset_config("fig1")
    assert cfg.model == "sis"
    assert cfg.network.kind == "er"
    assert cfg.network.sizes == (100, 200, 300)
    assert cfg.mu_e == 100.0
    assert cfg.p_values == (0.25, 0.5, 0.75)
    assert len(cfg.net_seeds) == 50
    cfg2 = preset_config("fig2")
    assert cfg2.network.kind == "ba" and cfg2.network.m == 25
    cfg3 = preset_config("fig3")
    assert cfg3.network.kind == "sw"
    assert cfg3.network.k == 100 and cfg3.network.beta == 0.1
    assert all(n > 100 for n in cfg3.network.sizes)


def test_preset_overrides():
    cfg = preset_config("fig1", sizes=(50,), num_seeds=3, mode="mixture")
    assert cfg.network.sizes == (50,)
    assert cfg.net_seeds == (0, 1, 2)
    assert cfg.mode == "closed_form_mixture"


def test_preset_empirical_requires_dataset():
    with pytest.raises(ConfigError, match="dataset"):
        preset_config("fig4")
    cfg = preset_config("fig4", dataset="contacts.edges", num_seeds=5)
    assert cfg.network.kind == "file"
    assert cfg.network.binarize is True
    assert cfg.model == "sis" and cfg.mu_e == 100.0
    assert cfg.net_seeds == (0,)
    assert cfg.dyn_seeds == (1, 2, 3, 4, 5)
    cfg5 = preset_config("fig5", dataset="disease.edges", num_seeds=2)
    assert cfg5.model == "mm" and cfg5.mu_e == 8.0
    assert cfg5.integrator.t_max is not None  # slow Hill relaxations need room


def test_preset_rejects_misapplied_flags():
    with pytest.raises(ConfigError):
        preset_config("fig1", dataset="x.edges")
    with pytest.raises(ConfigError):
        preset_config("fig4", dataset="x.edges", sizes=(100,))
    with pytest.raises(ConfigError):
        preset_config("fig9")
