import json
import subprocess
import sys

import pytest

from r5lab.cli import main, read_set_file


def _out(capsys):
    return json.loads(capsys.readouterr().out)


def test_unorm(tmp_path, capsys):
    p = tmp_path / "f.txt"
    p.write_text("# constant\n" + "1\n" * 7)
    assert main(["unorm", str(p), "3"]) == 0
    assert _out(capsys)["norm"] == pytest.approx(1)


def test_unorm_work_cap(tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("1+1j\n" * 30)
    assert main(["unorm", str(p), "4", "--method", "direct", "--work-cap", "100"]) == 3


def test_lambda_and_bad_input(tmp_path, capsys):
    p = tmp_path / "a.txt"
    p.write_text("1\n2\n3\n4\n5\n")
    assert main(["lambda", str(p)]) == 0
    out = _out(capsys)
    assert out["count"] == 7 and out["modulus"] == 5147
    bad = tmp_path / "bad.txt"
    bad.write_text("1\n1\n")
    assert main(["lambda", str(bad)]) == 2
    assert main(["lambda", str(tmp_path / "missing.txt")]) == 2


def test_set_file_comments(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("# header\n3\n\n1\n")
    a = read_set_file(p, 10)
    assert a.elements == (1, 3) and a.bound == 10


def test_bohr(tmp_path, capsys):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"modulus": 100, "frequencies": [1], "radius": "1/10"}))
    assert main(["bohr", str(p), "--members"]) == 0
    out = _out(capsys)
    assert out["size"] == 19 and 0 in out["members"]


def test_recur_and_favg(tmp_path, capsys):
    assert main(["recur", "--alphas", "1/2", "--k", "3", "--n", "4"]) == 0
    out = _out(capsys)
    assert out["n_star"] == 2 and out["value"] == "0"
    p = tmp_path / "lat.json"
    p.write_text(json.dumps({"basis": [[1.0]], "alpha": [0.5], "k": 1, "n": 1}))
    assert main(["favg", str(p)]) == 0
    assert _out(capsys)["difference"] <= 1e-9


def test_nilcheck(capsys):
    assert main(["nilcheck", "free_step3_x12"]) == 0
    out = _out(capsys)
    assert out["forms_integral"] and out["constants_divisible_by_12"]
    assert main(["nilcheck", "no_such_algebra"]) == 2


def test_increment(tmp_path, capsys):
    p = tmp_path / "odds.txt"
    p.write_text("\n".join(str(x) for x in range(1, 51, 2)))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"c": 0.1}))
    csv = tmp_path / "t.csv"
    assert main(["increment", str(p), "--bound", "50", "--config", str(cfg), "--csv", str(csv)]) == 0
    text = capsys.readouterr().out
    assert text == csv.read_text()
    assert text.splitlines()[1] == "0,50,0.5,Increment,1:2:25"
    cfg.write_text(json.dumps({"c_prime": 3}))
    assert main(["increment", str(p), "--config", str(cfg)]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "r5lab.cli", "recur", "--alphas", "0", "--k", "1", "--n", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["n_star"] == 1
