import json

import pytest

from qmegs.cli import cli_main


def run(argv, capsys):
    code = cli_main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_subcommand_and_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli_main(["run", "--bogus", "1"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("cmd", ["run", "sweep"])
def test_seed_is_mandatory(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main([cmd, "--T", "200"] if cmd == "run" else [cmd])
    assert exc.value.code == 2
    assert "--seed" in capsys.readouterr().err


def test_model_file(tmp_path, capsys):
    path = tmp_path / "toy.json"
    code, out, _ = run(["model", "--builder", "toy", "--M", "20", "--gap", "1e-3", "--seed", "1",
                        "--out", str(path)], capsys)
    assert code == 0 and "20 levels" in out
    d = json.loads(path.read_text())
    assert len(d["eigenvalues"]) == 20 and d["dominant"] == [0, 1]
    assert d["provenance"] == {"builder": "toy", "M": 20, "gap": 1e-3, "seed": 1}


def test_run_qmegs_and_grid_dump(tmp_path, capsys):
    model = tmp_path / "m.json"
    run(["model", "--builder", "toy", "--seed", "1", "--out", str(model)], capsys)
    grid = tmp_path / "g.csv"
    code, out, _ = run(["run", "--algo", "qmegs", "--model", str(model), "--T", "200", "--seed", "3",
                        "--grid-csv", str(grid)], capsys)
    assert code == 0
    assert "algorithm: qmegs" in out and "T_max:" in out and "T_total:" in out
    lines = grid.read_text().splitlines()
    assert lines[0] == "theta,G" and len(lines) == 1 + 25133


def test_run_same_seed_same_output(capsys):
    argv = ["run", "--algo", "qmegs", "--mode", "integer", "--T", "100", "--sigma", "3", "--seed", "5"]
    a = run(argv, capsys)[1]
    b = run(argv, capsys)[1]
    assert a == b and "algorithm: qmegs-int" in a


@pytest.mark.parametrize("algo", ["qmegs-int", "esprit", "qpe", "mmqcels"])
def test_run_dispatch(algo, capsys):
    code, out, _ = run(["run", "--algo", algo, "--T", "200", "--seed", "0", "--N0", "300", "--Nj", "200"]
                       if algo == "mmqcels" else ["run", "--algo", algo, "--T", "200", "--seed", "0"], capsys)
    assert code == 0 and f"algorithm: {algo}" in out


def test_run_bad_model_file(tmp_path, capsys):
    code, _, err = run(["run", "--model", str(tmp_path / "none.json"), "--T", "200", "--seed", "0"], capsys)
    assert code == 1 and "error" in err


def test_run_invalid_config_value(capsys):
    code, _, err = run(["run", "--T", "200", "--q", "0.03", "--seed", "0"], capsys)
    assert code == 1 and "alpha/q" in err


def test_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"algo": "qpe", "T": 400, "seed": 2}))
    code, out, _ = run(["run", "--config", str(conf)], capsys)
    assert code == 0 and "T_max: 512.0" in out
    code, out, _ = run(["run", "--config", str(conf), "--T", "100"], capsys)
    assert "T_max: 128.0" in out
    conf.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(SystemExit) as exc:
        cli_main(["run", "--config", str(conf)])
    assert exc.value.code == 2


def test_sweep_outputs(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run(["sweep", "--model", "toy", "--algos", "qmegs,esprit,qpe", "--n-max", "2",
                        "--trials", "2", "--seed", "7", "--out", str(out_dir)], capsys)
    assert code == 0
    files = sorted(p.name for p in out_dir.iterdir())
    assert files == ["sweep.csv", "sweep.json", "sweep_tmax.svg", "sweep_ttotal.svg"]
    rows = (out_dir / "sweep.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2 * 2


def test_sweep_unknown_algo(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["sweep", "--algos", "qmegs,nope", "--seed", "1"])
    assert exc.value.code == 2


def test_check_subset(capsys):
    code, out, _ = run(["check", "--only", "11,9"], capsys)
    assert code == 0
    assert "[PASS]  9" in out and "[PASS] 11" in out
