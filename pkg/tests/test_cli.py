import json
import subprocess
import sys

import pytest

from elusive.cli import build_parser, main


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def bundle196(tmp_path_factory):
    path = tmp_path_factory.mktemp("b") / "b196.json"
    assert run("construct", "sl2-quotient", "--p", 7, "--k", 2, "--out", path) == 0
    return path


def test_construct_and_verify(bundle196, tmp_path):
    data = json.loads(bundle196.read_text())
    assert data["degree"] == 196 and data["order_hint"] == 57624
    cert = tmp_path / "c.json"
    assert run("verify", bundle196, "--out", cert) == 0
    out = json.loads(cert.read_text())
    assert out["overall"] == "elusive"
    assert any(s["name"] == "brute-force cross-check" for s in out["stages"])


def test_bad_parameter_exit_2(tmp_path, capsys):
    assert run("construct", "sl2-quotient", "--p", 4, "--k", 2, "--out", tmp_path / "x.json") == 2
    assert "odd prime" in capsys.readouterr().err
    assert run("construct", "sl2-quotient", "--p", 7) == 2


def test_unknown_construction_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["construct", "nothing"])


def test_tampered_bundle(bundle196, tmp_path):
    data = json.loads(bundle196.read_text())
    data["Y_order"] = 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert run("verify", bad) != 0
    assert run("verify", tmp_path / "missing.json") == 2


def test_split_control_expectation_met(tmp_path):
    b = tmp_path / "split.json"
    assert run("construct", "split-control", "--p", 7, "--out", b) == 0
    cert = tmp_path / "c.json"
    assert run("verify", b, "--out", cert) == 0
    out = json.loads(cert.read_text())
    assert out["overall"] == "NOT elusive"
    seven = next(v for v in out["per_prime"] if v["prime"] == 7)
    assert seven["verdict"] == "NOT elusive" and len(seven["witness"]) == 196


def test_rebuild_mismatch_rejected(tmp_path):
    from elusive.constructions import a5_on_15, content_hash
    b = a5_on_15().to_json()
    b["metadata"]["expected"] = {"elusive": True}
    b["hash"] = content_hash({k: v for k, v in b.items() if k != "hash"})
    path = tmp_path / "a5.json"
    path.write_text(json.dumps(b))
    assert run("verify", path) == 2


def test_expectation_mismatch_exit_1(tmp_path, monkeypatch):
    from elusive import cli
    from elusive.constructions import ConstructedGroup, a5_on_15, content_hash
    b = a5_on_15().to_json()
    b["metadata"]["expected"] = {"elusive": True}
    body = {k: v for k, v in b.items() if k != "hash"}
    b["hash"] = content_hash(body)
    path = tmp_path / "a5.json"
    path.write_text(json.dumps(b))
    # a builder whose output disagrees with the true verdict
    monkeypatch.setattr(cli, "rebuild", lambda name, params: ConstructedGroup.from_json(b))
    assert run("verify", path) == 1


def test_witness(bundle196, tmp_path):
    out = tmp_path / "w.json"
    assert run("witness", bundle196, "--out", out) == 0
    w = json.loads(out.read_text())
    assert w["witness"]["prime"] == 7 and w["audit"]["ok"]
    assert run("witness", bundle196, "--E", "U") == 2


def test_catalog(tmp_path, capsys):
    out = tmp_path / "cat.json"
    assert run("catalog", "--bound", 500, "--out", out) == 0
    values = [e["value"] for e in json.loads(out.read_text())]
    assert {12, 196, 225, 450} <= set(values) and 15 not in values
    assert run("catalog", "--bound", 1) == 0
    assert json.loads(capsys.readouterr().out) == []
    assert run("catalog", "--bound", 10**10) == 2


def test_env_default_and_flag_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("ELUSIVE_P", "5")
    monkeypatch.setenv("ELUSIVE_K", "2")
    out = tmp_path / "b.json"
    assert run("construct", "sl2-quotient", "--out", out) == 0
    assert json.loads(out.read_text())["degree"] == 75
    assert run("construct", "sl2-quotient", "--p", 7, "--out", out) == 0
    assert json.loads(out.read_text())["degree"] == 196


def test_end_to_end_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        b, c, w = (tmp_path / f"{n}{i}.json" for n in "bcw")
        run("construct", "a5-mixed", "--stab", "Y", "--out", b)
        run("verify", b, "--out", c)
        run("witness", b, "--E", "V", "--out", w)
        outs.append([p.read_bytes() for p in (b, c, w)])
    assert outs[0] == outs[1]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "elusive", "construct", "sl2-quotient",
                           "--p", "4", "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "elusive", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ELUSIVE_" in proc.stdout
