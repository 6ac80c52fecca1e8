import json

import numpy as np
import pytest

from coinccl.collection import ParametricMirror, TabulatedMirror
from coinccl.config import RunConfig, config_hash, example_config, example_names, load_config
from coinccl.errors import ConfigError
from coinccl.optics import permittivity


def test_examples_load_and_build():
    for name in example_names():
        rc = example_config(name)
        rc.slab()
        rc.collection()
        rc.image_spec()
        rc.generator()
        rc.analysis()
    with pytest.raises(ConfigError):
        example_config("nope")


def test_schema_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="slab"):
        RunConfig({"slab": {"thickness_nm": -1}})
    with pytest.raises(ConfigError):
        RunConfig({"slab": {"thickness": 100}})
    with pytest.raises(ConfigError):
        RunConfig({"generator": {"pair_detect_prob": 2.0}})
    with pytest.raises(ConfigError):
        RunConfig({"collection": {"mirror": {"type": "tabulated"}}})


def test_hash_is_canonical():
    a = {"slab": {"thickness_nm": 100, "dielectric": "silicon"}, "seed": 1}
    b = {"seed": 1, "slab": {"dielectric": "silicon", "thickness_nm": 100}}
    assert config_hash(a) == config_hash(b) == RunConfig(a).hash
    assert RunConfig(a).with_overrides(seed=2).hash != RunConfig(a).hash


def test_overrides_skip_none():
    rc = example_config("fig4")
    rc2 = rc.with_overrides(seed=None, generator__duration_s=0.5)
    assert rc2.generator().duration == 0.5 and rc2.seed == rc.seed
    assert rc.generator().duration == 5.0


def test_builders_map_fields():
    rc = RunConfig({
        "seed": 9,
        "slab": {"dielectric": "vacuum", "thickness_nm": 50, "beam_energy_eV": 100000},
        "collection": {"mirror": {"type": "parametric", "gap_halfwidth": 0.2},
                       "electron_filter": {"center_eV": 2.0, "halfwidth_eV": 0.1, "enabled": True}},
        "generator": {"beam_current_A": 1.602176634e-13, "column_offsets_ns": {"12": 4.0}},
        "analysis": {"tau_ns": 30, "p_coh_in_window": 0.01},
    })
    cfg = rc.slab()
    assert cfg.thickness_d == 50 and cfg.kinematics.kinetic_energy == 100000
    m = rc.mirror()
    assert isinstance(m, ParametricMirror) and m.gap_halfwidth == 0.2
    g = rc.generator()
    assert g.electron_rate == pytest.approx(1e6) and g.seed == 9
    assert g.column_offsets == ((12, 4.0),) and g.electron_filter.enabled
    a = rc.analysis(g)
    assert a.tau == 30 and a.column_offsets == {12: 4.0}
    assert a.physics == {"p_coh_in_window": 0.01, "alpha_e": 0.26, "electron_rate": pytest.approx(1e6)}


def test_paths_resolve_relative_to_config(tmp_path):
    rows = ["khat_x,khat_y,value"] + [f"{a},{b},1" for a in (-1, 1) for b in (-1, 1)]
    (tmp_path / "mirror.csv").write_text("\n".join(rows))
    doc = {"collection": {"mirror": {"type": "tabulated", "path": "mirror.csv"}}}
    (tmp_path / "run.json").write_text(json.dumps(doc))
    rc = load_config(tmp_path / "run.json")
    assert isinstance(rc.mirror(), TabulatedMirror)
    doc["collection"]["mirror"]["path"] = "missing.csv"
    (tmp_path / "run.json").write_text(json.dumps(doc))
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "run.json").mirror()
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_dielectric_sources(tmp_path):
    assert permittivity(RunConfig({"slab": {"dielectric": "vacuum"}}).dielectric(), 2.0) == 1.0
    with pytest.raises(FileNotFoundError):
        RunConfig({"slab": {"dielectric": "nothing.csv"}}, str(tmp_path)).dielectric()
