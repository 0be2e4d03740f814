import json
import subprocess
import sys

import pytest

from kanskew import jsonio
from kanskew.cli import run


def test_validate(capsys):
    assert run(["validate"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["derivative_range"] == [0.96875, 1.03125]
    assert rep["fixed_points"] == [["0", "0"], ["1/2", "0"]]
    assert rep["k1"] and rep["k2"] and rep["k3"]


def test_independence(capsys, tmp_path):
    assert run(["independence", "--r", "31/32", "--s", "33/32"]) == 0
    assert capsys.readouterr().out.strip() == "independent"
    assert run(["independence", "--r", "4", "--s", "8"]) == 0
    assert capsys.readouterr().out.strip() == "dependent 2 3"
    out = tmp_path / "ind.json"
    assert run(["independence", "--r", "9", "--s", "27", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["witness"] == [2, 3]


def test_pairs_csv(capsys):
    assert run(["pairs", "--count", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,l,residual,eta_star"
    assert lines[1].startswith("1,1,0.000977")
    assert len(lines) == 4


def test_linearize_and_holonomy(capsys):
    assert run(["linearize", "--pole", "p"]) == 0
    ch = json.loads(capsys.readouterr().out)
    assert ch["residual"] < 1e-9
    assert run(["holonomy", "--x1", "0.3", "--x2", "0.1", "--t", "0.4",
                "--target-x1", "0.3", "--target-x2", "0.1"]) == 0
    assert json.loads(capsys.readouterr().out)["t_prime"] == pytest.approx(0.4)


def test_usage_errors(capsys, tmp_path):
    assert run(["nonsense"]) == 2
    assert run(["validate", "--system", "no-such-system"]) == 2
    assert run(["validate", "--system", "family=cosine;colour=red"]) == 2
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nseed = 1\nfoo = 2\n")
    assert run(["validate", "--config", str(cfg)]) == 2
    cfg.write_text("[extras]\nx = 1\n")
    assert run(["validate", "--config", str(cfg)]) == 2
    assert run(["basins", "--grid", "12by12"]) == 2
    assert run(["independence", "--r", "1", "--s", "2"]) == 2
    assert run(["certify", "--system", "kan-endo"]) == 2


def test_domain_error_json(capsys):
    assert run(["intermingle", "--grid", "8x8", "--n", "100", "--depth", "3"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "DepthTooFine" and err["message"]


def test_inline_system(capsys):
    spec = "family=cosine;amplitude=0.03125;wave=1,0;matrix=3,1,2,1;p=0.5,0;q=0,0"
    assert run(["validate", "--system", spec]) == 0
    assert json.loads(capsys.readouterr().out)["k3"]


def test_certify_then_reverify(tmp_path, capsys):
    cfg = tmp_path / "boxes.ini"
    cfg.write_text("[U]\ncenter_x1 = 0.2\ncenter_x2 = 0.3\nside_s = 0.1\nside_u = 0.1\n"
                   "t_lo = 0.1\nt_hi = 0.2\n[V]\ncenter_x1 = 0.7\ncenter_x2 = 0.6\n"
                   "side_s = 0.1\nside_u = 0.1\nt_lo = 0.8\nt_hi = 0.9\n")
    cert = tmp_path / "cert.json"
    assert run(["certify", "--config", str(cfg), "--out", str(cert)]) == 0
    body = jsonio.loads(cert.read_text())
    assert "seed" not in body and body["image_residual"] == 0
    assert run(["search", "--certificate", str(cert)]) == 0
    assert json.loads(capsys.readouterr().out)["verified"] is True
    # tamper with the fiber coordinate
    body["witness"][2] = 0.999
    cert.write_text(jsonio.dumps(body))
    assert run(["search", "--certificate", str(cert)]) == 1


def test_basins_outputs_deterministic(tmp_path, capsys):
    outs = []
    for workers in ("1", "2"):
        pgm, csv = tmp_path / f"b{workers}.pgm", tmp_path / f"b{workers}.csv"
        assert run(["basins", "--grid", "16x16", "--n", "500", "--seed", "4", "--workers", workers,
                    "--out", str(pgm), "--csv", str(csv)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["seed"] == 4
        outs.append((pgm.read_bytes(), csv.read_bytes()))
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kanskew", "independence", "--r", "2", "--s", "8"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "dependent 1 3"
