import json
import math

import numpy as np
import pytest

from semicont import campaigns, cli
from semicont.io import matrix_from_json, matrix_to_json, parse_spectrum
from semicont.operators import random_density


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_matrix_json_roundtrip():
    rho = random_density(3, seed=1)
    obj = matrix_to_json(rho)
    assert obj["dim"] == 3 and len(obj["re"]) == 9
    np.testing.assert_array_equal(matrix_from_json(json.loads(json.dumps(obj))), rho)
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 2, "re": [1, 0, 0]})


def test_parse_spectrum_forms(tmp_path):
    assert list(parse_spectrum("list:0,1").levels) == [0.0, 1.0]
    lin = parse_spectrum("linear:0.5:8")
    np.testing.assert_allclose(lin.levels, 0.5 * np.arange(8))
    assert parse_spectrum("linear").n == 512
    path = write_json(tmp_path / "s.json", {"kind": "linear", "omega": 2.0, "N": 4})
    np.testing.assert_allclose(parse_spectrum(path).levels, [0, 2, 4, 6])
    path = write_json(tmp_path / "l.json", {"kind": "list", "levels": [0, 0.5]})
    assert parse_spectrum(path).n == 2


def test_gibbs_command(capsys):
    code, out, _ = run(capsys, "gibbs", "--spec", "list:0,1", "--energy", "0.25")
    assert code == 0
    row = json.loads(out)
    assert row["beta"] == pytest.approx(math.log(3), abs=1e-9)
    assert row["state"] == pytest.approx([0.75, 0.25])


def test_gibbs_command_above_top_level(capsys):
    code, out, _ = run(capsys, "gibbs", "--spec", "list:0,1", "--energy", "3")
    assert code == 0
    row = json.loads(out)
    assert row["max_entropy"] == pytest.approx(math.log(2))
    assert row["uniform_cap"] is True


def test_bound_entropy_old_and_bits(capsys):
    code, out, _ = run(capsys, "bound", "entropy", "--spec", "list:0,1", "--energy", "0.25",
                       "--eps", "0.1", "--variant", "old")
    assert code == 0
    assert json.loads(out)["bound"] == pytest.approx(0.404414, abs=1e-6)
    _, out, _ = run(capsys, "--bits", "bound", "entropy", "--spec", "list:0,1", "--energy",
                    "0.25", "--eps", "0.1", "--variant", "old")
    assert json.loads(out)["bound"] == pytest.approx(0.404414 / math.log(2), abs=1e-5)


def test_bound_offset_state(capsys, tmp_path):
    rho = np.diag([0.7, 0.2, 0.1, 0, 0, 0, 0, 0])
    path = write_json(tmp_path / "rho.json", matrix_to_json(rho))
    args = ["bound", "entropy", "--spec", "list:0,1,2,3,4,5,6,7", "--energy", "0.4",
            "--eps", "0.1"]
    _, plain, _ = run(capsys, *args)
    code, shifted, _ = run(capsys, *args, "--offset-state", path)
    assert code == 0
    assert json.loads(shifted)["offset"] is True
    assert json.loads(shifted)["bound"] < json.loads(plain)["bound"]


def test_bound_other_families(capsys):
    _, out, _ = run(capsys, "bound", "eof-rank", "--rank", "2", "--eps", "0.1")
    assert json.loads(out)["bound"] == pytest.approx(0.98704, abs=1e-5)
    _, out, _ = run(capsys, "bound", "eof-energy", "--spec", "linear", "--energy", "1",
                    "--eps", "0.1")
    assert json.loads(out)["bound"] == pytest.approx(1.5663354, abs=1e-6)
    _, out, _ = run(capsys, "bound", "equivocation", "--energy", "1", "--eps", "0.25")
    assert json.loads(out)["bound"] == pytest.approx(1.187838, abs=1e-6)


def test_compare_csv(capsys):
    code, out, _ = run(capsys, "compare", "--grid", "0.5,1", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "eps,g,h2_tilde,gap,rel_gap"
    assert len(lines) == 3


@pytest.mark.parametrize("argv", [
    ["bound", "eof-rank", "--eps", "0.1"],
    ["bound", "entropy", "--energy", "1", "--eps", "0.1"],
    ["bound", "equivocation", "--energy", "1", "--eps", "1.5"],
    ["gibbs", "--spec", "list:0.5,1", "--energy", "1"],
    ["gibbs", "--spec", "/nonexistent.json", "--energy", "1"],
])
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert "error" in err


def test_argparse_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bound", "nonsense", "--eps", "0.1"])
    assert exc.value.code == 1


def test_verify_writes_report_and_exits_zero(capsys, tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"trials": 10, "dims": [2], "eps_grid": [0.1]})
    out = tmp_path / "r.csv"
    code, _, _ = run(capsys, "verify", "equivocation", "--config", cfg, "--output", str(out))
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[-1].startswith("summary,")
    code, _, _ = run(capsys, "verify", "equivocation", "--config", cfg, "--output",
                     str(tmp_path / "r2.csv"))
    assert (tmp_path / "r2.csv").read_bytes() == out.read_bytes()


def test_verify_seed_and_format_flags(capsys, tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"trials": 4})
    code, out, _ = run(capsys, "--seed", "7", "--format", "json", "verify", "equivocation",
                       "--config", cfg)
    assert code == 0
    body = json.loads(out)
    assert {r["seed"] for r in body["reports"]} == {7}


def test_verify_probe(capsys, tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"energy_grid": [1.0], "eps_grid": [0.01, 0.05]})
    code, out, _ = run(capsys, "verify", "equivocation-probe", "--config", cfg)
    assert code == 0
    assert "invalid-bound-violated" in out


def test_verify_exit_two_on_violation(capsys, tmp_path, monkeypatch):
    bad = campaigns.make_report(family="entropy-energy", variant="new", trial=0, seed=0,
                                eps=0.1, eps_target=0.1, bound=0.1, lhs=0.2)
    monkeypatch.setattr(cli, "run_campaign", lambda family, cfg: [bad])
    cfg = write_json(tmp_path / "cfg.json", {"trials": 1})
    code, _, _ = run(capsys, "verify", "entropy", "--config", cfg)
    assert code == 2


def test_verify_bad_config_exits_one(capsys, tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"trials": 1, "unknown_key": 3})
    code, _, err = run(capsys, "verify", "entropy", "--config", cfg)
    assert code == 1 and "unknown" in err
    (tmp_path / "broken.json").write_text("{")
    code, _, err = run(capsys, "verify", "entropy", "--config", str(tmp_path / "broken.json"))
    assert code == 1 and "invalid JSON" in err
