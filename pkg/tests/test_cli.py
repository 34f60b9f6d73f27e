import csv
import io

import pytest

from sc3sim.cli import main
from sc3sim.hashcore import gen_params

SMALL = ["--set", "r=30", "--set", "c=3", "--set", "n=6", "--set", "n_m=2"]


def run_cli(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_params(capsys):
    code, out, _ = run_cli(capsys, ["gen-params", "--q-bits", "20", "--r-bits", "40", "--seed", "1"])
    p = gen_params(20, 40, seed=1)
    assert code == 0 and out.split() == [str(p.q), str(p.r), str(p.g), str(p.b)]


def test_run_to_file_matches_stdout(capsys, tmp_path):
    code, out, _ = run_cli(capsys, ["run", "--reps", "2", "--seed", "3", *SMALL])
    assert code == 0
    target = tmp_path / "o.csv"
    assert main(["run", "--reps", "2", "--seed", "3", *SMALL, "--out", str(target)]) == 0
    assert target.read_text() == out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["seed"] == "3" and rows[1]["seed"] == "4"


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("r = 30\nc = 3\nn = 6\nn_m = 2\nreplications = 1\nalgorithms = lower_bound\n")
    code, out, _ = run_cli(capsys, ["run", "--config", str(cfg)])
    assert code == 0 and len(out.splitlines()) == 4


def test_bounds(capsys):
    code, out, _ = run_cli(capsys, ["bounds", *SMALL])
    header, row = out.splitlines()
    assert code == 0
    assert header == "upper_bound_sc3,t_hw_only,gap_lower_bound,unverified_bound"
    assert all(float(v) >= 0 for v in row.split(","))


def test_sweep(capsys):
    code, out, _ = run_cli(capsys, ["sweep", "--param", "honest_mean", "--values", "1:2;3:4",
                                    "--reps", "2", *SMALL, "--set", "algorithms=sc3,hw_only"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["sweep_value"] for r in rows} == {"1:2", "3:4"}
    assert rows[0]["gap"] != ""


def test_mc_detect(capsys):
    code, out, _ = run_cli(capsys, ["mc-detect", "--pattern", "sym-pair", "--trials", "500", "--q", "11"])
    assert code == 0
    assert out.splitlines()[0] == "pattern,Z,Z_tilde,q,empirical,analytic,ci95"


@pytest.mark.parametrize("argv", [
    ["run", "--set", "bogus=1"],
    ["run", "--set", "n_m=99"],
    ["run", "--set", "novalue"],
    ["run", "--config", "/nonexistent/file.cfg"],
    ["sweep", "--param", "speed", "--values", "1"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, argv)
    assert code == 2 and "error" in err


def test_unknown_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--frobnicate"])
    assert exc.value.code == 2


def test_invariant_violation_exit_3(capsys, monkeypatch):
    from sc3sim import experiment

    def broken(*a, **k):
        raise AssertionError("event scheduled in the past")

    monkeypatch.setattr(experiment, "simulate", broken)
    code, _, err = run_cli(capsys, ["run", "--reps", "1", *SMALL])
    assert code == 3 and "invariant" in err

