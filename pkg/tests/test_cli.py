from pathlib import Path

import pytest

from decmdp.cli import run_cli
from decmdp.fileio import read_problem, serialize_problem
from decmdp.oracle import best_markov

from conftest import toy

GOLDEN = Path(__file__).parent / "golden"
PROBLEM = GOLDEN / "recycling-3.problem"


def stats_without_time(path):
    return "\n".join(",".join(line.split(",")[:-1]) for line in path.read_text().splitlines())


def test_gen_matches_golden(tmp_path):
    out = tmp_path / "r.problem"
    assert run_cli(["gen", "recycling", "--horizon", "3", "-o", str(out)]) == 0
    assert out.read_text() == PROBLEM.read_text()


def test_solve_matches_golden(tmp_path, capsys):
    policy, stats = tmp_path / "p.txt", tmp_path / "s.csv"
    code = run_cli(["solve", "--problem", str(PROBLEM), "--epsilon", "1e-6",
                    "--policy-out", str(policy), "--stats-out", str(stats)])
    assert code == 0
    assert "lower=13.74 upper=13.74" in capsys.readouterr().out
    assert policy.read_text() == (GOLDEN / "recycling-3.policy").read_text()
    assert stats_without_time(stats) == (GOLDEN / "recycling-3.stats.csv").read_text().strip()


def test_golden_value_is_the_oracle_optimum():
    assert best_markov(read_problem(PROBLEM))[0] == pytest.approx(13.74, abs=1e-9)


def test_oracle_and_solve_agree_on_a_problem_file(tmp_path, capsys):
    path = tmp_path / "toy.problem"
    path.write_text(serialize_problem(toy()))
    assert run_cli(["oracle", "--problem", str(path), "--history", "--cap", "10000000"]) == 0
    lines = capsys.readouterr().out.splitlines()
    markov = float(lines[0].rsplit(" ", 1)[1])
    history = float(lines[1].rsplit(" ", 1)[1])
    assert history == pytest.approx(markov, abs=1e-9)
    assert markov == 1.0
    trace = tmp_path / "t.csv"
    assert run_cli(["solve", "--problem", str(path), "--epsilon", "1e-9",
                    "--trace-out", str(trace)]) == 0
    assert f"lower={markov:.2f}" in capsys.readouterr().out
    assert trace.read_text().startswith("trial,lower,upper,seconds\n")


def test_validate(tmp_path, capsys):
    assert run_cli(["validate", str(PROBLEM)]) == 0
    broken = tmp_path / "broken.problem"
    broken.write_text(PROBLEM.read_text().replace("horizon 3", "horizon -3"))
    assert run_cli(["validate", str(broken)]) == 1
    assert "line" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--bench", "recycling", "--frobnicate"],
    ["solve", "--problem", "/nonexistent/file"],
    ["solve", "--bench", "meeting-grid", "--mode", "exhaustive", "--horizon", "2"],
    ["oracle", "--bench", "meeting-grid", "--horizon", "3"],
    ["bogus"],
])
def test_errors_exit_one(argv, capsys):
    assert run_cli(argv) == 1
    assert capsys.readouterr().err


def test_unfinished_solve_exits_two(capsys):
    code = run_cli(["solve", "--bench", "meeting-grid", "--side", "3", "--horizon", "8",
                    "--time-limit", "0.3"])
    assert code == 2
    assert "time limit" in capsys.readouterr().out


def test_bench_solve_reports_two_decimals(capsys):
    assert run_cli(["solve", "--bench", "random-team", "--agents", "2", "--klass", "1",
                    "--horizon", "3"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("random-team-n2-k1-s0: T=3 lower=")
    assert "converged" in out


def test_same_flags_give_identical_files(tmp_path):
    outputs = []
    for run in range(2):
        policy, stats = tmp_path / f"p{run}", tmp_path / f"s{run}"
        run_cli(["solve", "--bench", "recycling", "--horizon", "5", "--seed", "3",
                 "--policy-out", str(policy), "--stats-out", str(stats)])
        outputs.append((policy.read_text(), stats_without_time(stats)))
    assert outputs[0] == outputs[1]
