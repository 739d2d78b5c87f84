import io
import json

import pytest

from pll.cli import EXIT_INVALID, EXIT_OK, EXIT_REJECTED, run


def call(argv, env=None):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, environ=env or {}, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_knn_record_with_interval():
    code, out, _ = call("knn --model uniform --t 0.5 --k 5 --n 100000 --level 0.95 --seed 1".split())
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 2
    header = json.loads(lines[0])["config"]
    assert header["subcommand"] == "knn" and header["k"] == 5
    rec = json.loads(lines[1])
    assert rec["method"] == "umvu"
    assert rec["ci"]["lower"] < rec["value"] < rec["ci"]["upper"]


def test_missing_flag_names_it():
    code, out, err = call("knn --model uniform --t 0.5 --k 5 --seed 1".split())
    assert code == EXIT_INVALID
    assert "--n" in err
    assert out == ""


def test_missing_seed_uses_environment():
    argv = "gap-test --n 1000 --alpha 1".split()
    code, _, err = call(argv)
    assert code == EXIT_INVALID and "seed" in err
    code, out, _ = call(argv, env={"PLL_SEED": "4"})
    assert code == EXIT_OK
    assert json.loads(out.splitlines()[0])["config"]["seed"] == 4


def test_unknown_flag_and_bad_value():
    code, _, err = call("simulate --alpha 2 --seed 1 --bogus 3".split())
    assert code == EXIT_INVALID and "bogus" in err
    code, _, err = call("simulate --alpha two --seed 1".split())
    assert code == EXIT_INVALID and "alpha" in err
    code, _, err = call("simulate --model uniform --alpha 2 --seed 1".split())
    assert code == EXIT_INVALID and "alpha" in err
    code, _, err = call("simulate --seed 1".split())
    assert code == EXIT_INVALID and "alpha" in err


def test_library_errors_exit_one():
    code, _, err = call("simulate --model uniform --q 1.0 --n 10 --seed 1".split())
    assert code == EXIT_INVALID and "tail-exhausted" in err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[gap-test]\nk = 4\nn = 500\nseed = 9\nalpha = 1\n")
    code, out, _ = call(["gap-test", "--config", str(cfg)])
    assert code == EXIT_OK
    assert json.loads(out.splitlines()[0])["config"]["k"] == 4
    code, out, _ = call(["gap-test", "--config", str(cfg), "--k", "2"])
    assert json.loads(out.splitlines()[0])["config"]["k"] == 2


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[knn]\nt = 0.5\nwidth = 3\n")
    code, _, err = call(["knn", "--config", str(cfg)])
    assert code == EXIT_INVALID and "width" in err


def test_config_from_other_subcommand_rejected(tmp_path):
    out_file = tmp_path / "k.jsonl"
    call(f"knn --model uniform --t 0.5 --k 2 --n 1000 --seed 1 --out {out_file}".split())
    code, _, err = call(["gap-test", "--config", str(out_file)])
    assert code == EXIT_INVALID and "config" in err


@pytest.mark.parametrize(
    "argv",
    [
        "knn --model uniform --t 0.5 --k 5 --n 100000 --level 0.95 --seed 1",
        "simulate --model powerlaw --alpha 2 --n 500 --seed 3",
        "compensator --model uniform --q 0.5 --n 2000 --grid=-1,-0.5,0.5,1 --seed 3",
        "gap-test --model gap --g1 0 --g2 0.2 --n 1000 --seed 2 --format csv",
        "copula --rho 0.5",
        "copula --rho 0.5 --mode extremes --n 20000 --reach 2 --seed 4 --format csv",
        "verify --scenario two-sided --n 1000 --reps 50 --seed 3",
    ],
)
def test_round_trip(tmp_path, argv):
    first = tmp_path / "first.out"
    code, _, _ = call(argv.split() + ["--out", str(first)])
    assert code == EXIT_OK
    sub = argv.split()[0]
    code, out, _ = call([sub, "--config", str(first)])
    assert code == EXIT_OK
    assert out == first.read_text()


def test_csv_outputs():
    code, out, _ = call("simulate --alpha 2 --n 100 --seed 3".split())
    lines = out.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "orthant,x1"
    assert len(lines) == 102
    code, out, _ = call("compensator --alpha 1 --n 1000 --seed 3".split())
    assert out.splitlines()[1] == "t,value,limit"


def test_verify_theorem31_end_to_end():
    code, out, _ = call("verify --scenario theorem31 --alpha 2 --n 100000 --reps 10000 --seed 7".split())
    assert code == EXIT_OK
    reports = [json.loads(line) for line in out.splitlines()[1:]]
    assert reports and all(r["passed"] for r in reports)
    assert all(0.0 <= r["p_value"] <= 1.0 for r in reports)


def test_verify_failure_exit_code():
    # twenty replications cannot bring the KS distance under 0.02
    code, out, err = call("verify --scenario knn-law --k 2 --n 1000 --reps 20 --seed 1".split())
    assert code == EXIT_REJECTED
    assert json.loads(out.splitlines()[1])["passed"] is False
    assert "failed" in err


def test_verify_rejects_irrelevant_setting():
    code, _, err = call("verify --scenario copula-tail --k 3".split())
    assert code == EXIT_INVALID and "k" in err


def test_threads_do_not_change_output():
    base = "verify --scenario two-sided --n 1000 --reps 200 --seed 3".split()
    _, one, _ = call(base + ["--threads", "1"])
    _, four, _ = call(base + ["--threads", "4"])
    strip = lambda s: s.splitlines()[1:]  # noqa: E731
    assert strip(one) == strip(four)


def test_out_file(tmp_path):
    target = tmp_path / "x.csv"
    code, out, _ = call(f"simulate --alpha 2 --n 10 --seed 3 --out {target}".split())
    assert code == EXIT_OK and out == ""
    assert target.read_text().splitlines()[1] == "orthant,x1"


def test_no_subcommand():
    code, _, err = call([])
    assert code == EXIT_INVALID
