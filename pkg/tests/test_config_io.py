import json
from pathlib import Path

import numpy as np
import pytest

from surfelast import config as cfgmod
from surfelast import experiments as ex
from surfelast.fem import mesh as msh
from surfelast.fem import elements as el
from surfelast.io import read_csv, read_vtk_counts, write_csv, write_vtk

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.json"))


def test_bundled_configs_in_sync_with_builders():
    built = ex.bundled_configs()
    assert sorted(p.name for p in CONFIGS) == sorted(built)
    for p in CONFIGS:
        assert json.loads(p.read_text()) == built[p.name], f"{p.name}: rerun scripts/make_configs.py"


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_bundled_config_valid_with_mapping(path):
    cfg = cfgmod.load(path)
    h = cfg.header
    assert h["experiment"] and h["discretization"] and h["mapping"]
    assert isinstance(h["desk_scale"], bool)
    mesh = ex.build_mesh(cfg)
    assert mesh.n_bulk > 0 and mesh.n_surface > 0


def test_reference_discretizations_flagged():
    built = ex.bundled_configs()
    assert not built["bridge_gamma.json"]["header"]["desk_scale"]
    assert not built["cylinder_lam0.6_alpha0_L30.json"]["header"]["desk_scale"]
    assert built["cube_gamma.json"]["header"]["desk_scale"]
    assert built["sphere_gamma_eta_1.5.json"]["header"]["desk_scale"]
    assert not built["sphere_gamma_eta_1.5_n15_tet4.json"]["header"]["desk_scale"]


def test_phase_steps_carry_previous_values():
    ph = cfgmod.Phase("eta_t", [1.0, 2.0], also={"kappa_t": [5.0, 6.0]})
    assert ph.steps({"gamma_t": 3.0}) == [{"gamma_t": 3.0, "eta_t": 1.0, "kappa_t": 5.0},
                                         {"gamma_t": 3.0, "eta_t": 2.0, "kappa_t": 6.0}]


def test_validation_collects_all_errors():
    d = ex.bridge_config()
    d["schema_version"] = 2
    d["params"]["kappa_t"] = -1.0
    d["phases"][0]["also"] = {"kappa_t": [1.0]}
    with pytest.raises(cfgmod.ConfigError) as ei:
        cfgmod.validate(d)
    locs = [loc for loc, _ in ei.value.diagnostics]
    assert "schema_version" in locs and "params/kappa_t" in locs and "phases/0/also/kappa_t" in locs


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load(tmp_path / "nope.json")


def test_prestretch_two_phase_schedule():
    d = ex.bridge_config("isopoly", 1.5)
    assert [p["control"] for p in d["phases"]] == ["stretch", "alpha_t"]
    assert d["phases"][0]["values"][-1] == pytest.approx(1.5)
    assert d["geometry"]["L"] == pytest.approx(2.0)


# --- VTK ------------------------------------------------------------------------------------------

@pytest.mark.parametrize("desc,types", [
    ({"type": "axisym-rect", "L": 1, "R": 1, "nx": 2, "ny": 2}, {9, 3}),
    ({"type": "cube", "a": 1.0, "n": 1, "kind": "hex8"}, {12, 9}),
    ({"type": "cube", "a": 1.0, "n": 1, "kind": "tet4"}, {10, 5}),
    ({"type": "sphere-octant", "r": 1.0, "n": 1, "kind": "tet10"}, {24, 22}),
])
def test_vtk_cell_types(tmp_path, desc, types):
    m = msh.generate_mesh(desc)
    p = tmp_path / "m.vtk"
    ncell = m.n_bulk + m.n_surface
    write_vtk(p, m, point_data={"u": np.zeros((m.n_nodes, m.dim))}, cell_data={"s": np.arange(ncell, dtype=float)})
    npts, nc, t = read_vtk_counts(p)
    assert (npts, nc) == (m.n_nodes, ncell) and set(t) == types
    text = p.read_text()
    assert text.startswith("# vtk DataFile Version 3.0") and "DATASET UNSTRUCTURED_GRID" in text
    assert "CELL_DATA" in text and "POINT_DATA" in text


def test_vtk_ids_match_standard():
    ids = {k: el.get(k).vtk_id for k in ("line2", "tri3", "quad4", "tet4", "hex8", "tri6", "tet10")}
    assert ids == {"line2": 3, "tri3": 5, "quad4": 9, "tet4": 10, "hex8": 12, "tri6": 22, "tet10": 24}


def test_csv_roundtrip_rfc4180(tmp_path):
    p = tmp_path / "a.csv"
    write_csv(p, [{"a": 0.1, "b": "x,y"}, {"a": np.float64(2.5), "b": 'q"'}], ["a", "b"])
    raw = p.read_bytes()
    assert raw.count(b"\r\n") == 3
    r = read_csv(p)
    assert r == [{"a": "0.1", "b": "x,y"}, {"a": "2.5", "b": 'q"'}]
