import json

import numpy as np
import pytest

from closedchar import geometry as g
from closedchar import index as ix
from closedchar import symplectic as sp
from closedchar.cli import main
from closedchar.paths import normal_form_path

R6 = [1.0, 1.2345, 1.5678]


def write_config(path, **kw):
    cfg = {"body": {"type": "ellipsoid", "r": R6}, "m_max": 6, "direct_max": 2, "samples": 64,
           "morse_cutoffs": [50, 100, 200]}
    cfg.update(kw)
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def run(cfg, out, *cmds, extra=()):
    rc = 0
    for c in cmds:
        rc = main([c, "--config", cfg, "--out", str(out), "--workers", "1", *extra])
        if rc:
            return rc
    return rc


@pytest.fixture(scope="module")
def r6_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("r6")
    cfg = write_config(out / "cfg.json")
    assert run(cfg, out, "orbits", "indices", "resonance") == 0
    return out, cfg


def load(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_r6_pipeline(r6_run):
    out, _ = r6_run
    orbits = load(out / "orbits.json")
    assert len(orbits["orbits"]) == 3
    res = load(out / "resonance.json")
    assert res["resonance"]["residual"] <= 1e-9
    assert res["audit"]["checks"]["at_least_three_orbits"] == "PASS"
    assert res["morse"]["bound_ok"]
    for name in ("resonance.csv", "morse.csv", "series.csv", "body.json", "indices.json"):
        assert (out / name).exists()


def test_outputs_are_deterministic(r6_run, tmp_path):
    out, cfg = r6_run
    assert run(cfg, tmp_path, "orbits", "indices", "resonance") == 0
    for name in ("orbits.json", "indices.json", "resonance.json", "morse.csv", "resonance.csv"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_json_keys_sorted(r6_run):
    text = (r6_run[0] / "resonance.json").read_text(encoding="utf-8")
    doc = json.loads(text)
    assert text == json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def test_indices_roundtrip_schema(r6_run):
    doc = load(r6_run[0] / "indices.json")
    for e in doc["orbits"]:
        prof = ix.IndexProfile.from_json(e["profile"])
        assert prof.to_json() == e["profile"]
        assert e["ekeland"] == [list(r) for r in ix.ekeland_index(prof)]
        assert e["tangent_checks_pass"]


def test_empty_body_exits_1(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", body={})
    assert run(cfg, tmp_path, "orbits") == 1
    assert "body" in capsys.readouterr().err


@pytest.mark.parametrize("kw, field", [({"m_max": 1}, "m_max"), ({"solvers": ["magic"]}, "solvers"),
                                       ({"tolerances": {"bogus": 1.0}}, "tolerances.bogus"),
                                       ({"alpha": 2.5}, "alpha"),
                                       ({"body": {"type": "ellipsoid"}}, "body.r")])
def test_malformed_config_names_field(tmp_path, capsys, kw, field):
    cfg = write_config(tmp_path / "cfg.json", **kw)
    assert run(cfg, tmp_path, "orbits") == 1
    assert field in capsys.readouterr().err


def test_missing_files_exit_1(tmp_path):
    assert run(str(tmp_path / "nope.json"), tmp_path, "orbits") == 1
    cfg = write_config(tmp_path / "cfg.json")
    assert run(cfg, tmp_path, "indices") == 1


def copy_run(src, dst):
    for p in src.iterdir():
        (dst / p.name).write_bytes(p.read_bytes())


def test_sidecar_rule_iii_exits_1(r6_run, tmp_path, capsys):
    out, cfg = r6_run
    copy_run(out, tmp_path)
    # swap in a degenerate index profile with nu = 3 on every iterate
    forms = [sp.N1(1.0, 1.0), sp.N1(1.0, -1.0), sp.N1(1.0, -1.0)]
    prof = ix.iteration_profile(normal_form_path(forms, windings=[1, 1, 0]), 4, direct_max=2)
    doc = load(tmp_path / "indices.json")
    doc["orbits"][0]["profile"] = prof.to_json()
    doc["orbits"][0]["classification"] = "degenerate"
    (tmp_path / "indices.json").write_text(json.dumps(doc), encoding="utf-8")
    (tmp_path / "klist.json").write_text(json.dumps({"y1": {"1": [1, 1, 0, 0, 0], "2": [0, 0, 0, 0, 0]}}),
                                         encoding="utf-8")
    assert run(cfg, tmp_path, "resonance") == 1
    err = capsys.readouterr().err
    assert "rule iii" in err and "y1" in err


def test_degenerate_orbit_without_sidecar_is_excluded(r6_run, tmp_path):
    out, cfg = r6_run
    copy_run(out, tmp_path)
    forms = [sp.N1(1.0, 1.0), sp.N1(1.0, -1.0), sp.N1(1.0, -1.0)]
    prof = ix.iteration_profile(normal_form_path(forms, windings=[1, 1, 0]), 4, direct_max=2)
    doc = load(tmp_path / "indices.json")
    doc["orbits"][0]["profile"] = prof.to_json()
    (tmp_path / "indices.json").write_text(json.dumps(doc), encoding="utf-8")
    assert run(cfg, tmp_path, "resonance") == 0
    res = load(tmp_path / "resonance.json")
    assert [x["orbit"] for x in res["resonance"]["excluded"]] == ["y1"]
    assert "at_least_three_orbits" not in res["audit"]["checks"]


def test_invariant_violation_exits_2(r6_run, tmp_path, capsys):
    out, cfg = r6_run
    copy_run(out, tmp_path)
    doc = load(tmp_path / "indices.json")
    doc["orbits"][0]["profile"]["mean_index"] = 1.5
    (tmp_path / "indices.json").write_text(json.dumps(doc), encoding="utf-8")
    assert run(cfg, tmp_path, "resonance") == 2


def test_r4_two_orbit_audit(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", body={"type": "ellipsoid", "r": [1.0, 1.37]},
                       solvers=["analytic", "shooting"], k_random=2)
    assert run(cfg, tmp_path, "orbits", "indices", "resonance") == 0
    assert len(load(tmp_path / "orbits.json")["orbits"]) == 2
    res = load(tmp_path / "resonance.json")
    assert res["audit"]["checks"]["two_orbits_irrationally_elliptic"] == "PASS"
    assert res["resonance"]["residual"] <= 1e-9


def test_perturbed_body_shooting(tmp_path):
    body = g.perturbed_ellipsoid([1.0, 1.37], 1e-3).to_json()
    cfg = write_config(tmp_path / "cfg.json", body=body, solvers=["shooting"], k_random=0)
    assert run(cfg, tmp_path, "orbits") == 0
    orbits = load(tmp_path / "orbits.json")["orbits"]
    assert len(orbits) >= 1
    assert all(o["residual"] < 1e-7 for o in orbits)


def test_seed_flag_overrides(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", body={"type": "ellipsoid", "r": [1.0, 1.37]})
    assert main(["orbits", "--config", cfg, "--out", str(tmp_path), "--seed", "7", "--m-max", "3"]) == 0
