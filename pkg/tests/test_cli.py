import csv

import pytest

from adasub.cli import build_parser, dispatch


def run_cli(*argv):
    return dispatch(list(argv))


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    assert run_cli(
        "simulate", "--n", "60", "--p", "10", "--s0", "2", "--seed", "5",
        "--out", str(out), "--quiet",
    ) == 0
    return out


def test_help_exits_zero(capsys):
    assert run_cli("--help") == 0
    assert "simulate" in capsys.readouterr().out


def test_unknown_subcommand_exits_one():
    assert run_cli("frobnicate") == 1


def test_missing_required_flag_exits_one(capsys):
    assert run_cli("run") == 1
    assert "--data" in capsys.readouterr().err


def test_missing_data_file_exits_two(capsys):
    assert run_cli("bestsubset", "--data", "nope.csv") == 2
    assert "nope.csv" in capsys.readouterr().err


def test_simulate_outputs(sim_dir):
    rows = _read(sim_dir / "train.csv")
    assert rows[0] == [f"x{j}" for j in range(1, 11)] + ["y"]
    assert len(rows) == 61
    truth = _read(sim_dir / "truth.csv")
    assert truth[0] == ["index", "beta"]
    assert [r[0] for r in truth[1:]] == [str(j) for j in range(1, 11)]
    nonzero = [r for r in truth[1:] if float(r[1]) != 0.0]
    assert len(nonzero) == 2
    assert (sim_dir / "test.csv").exists()
    assert (sim_dir / "meta.txt").exists()


def test_simulate_refuses_overwrite(sim_dir, capsys):
    assert run_cli(
        "simulate", "--n", "60", "--p", "10", "--s0", "2", "--seed", "5",
        "--out", str(sim_dir), "--quiet",
    ) == 2
    assert "refusing to overwrite" in capsys.readouterr().err
    assert run_cli(
        "simulate", "--n", "60", "--p", "10", "--s0", "2", "--seed", "5",
        "--out", str(sim_dir), "--quiet", "--force",
    ) == 0


def test_bestsubset_output(sim_dir, capsys):
    assert run_cli(
        "bestsubset", "--data", str(sim_dir / "train.csv"), "--criterion", "bic",
        "--mode", "bb", "--cap-uc", "10",
    ) == 0
    out = capsys.readouterr().out
    assert "subset:" in out and "score:" in out and "evaluated_count:" in out


def test_run_outputs_and_determinism(sim_dir, tmp_path):
    args = [
        "run", "--data", str(sim_dir / "train.csv"), "--criterion", "bic",
        "--q", "4", "--T", "200", "--seed", "9", "--trace-probs", "100", "--quiet",
    ]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run_cli(*args, "--out", str(out1)) == 0
    assert run_cli(*args, "--out", str(out2)) == 0
    for name in ("trace.csv", "final_probs.csv", "models.csv", "prob_snapshots.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    trace = _read(out1 / "trace.csv")
    assert trace[0] == ["t", "v_size", "s_size", "score", "expected_search_size"]
    assert len(trace) == 201
    assert trace[1][4] == "4"  # expected search size at t=1 is exactly q
    models = _read(out1 / "models.csv")
    assert [r[0] for r in models[1:]] == ["best", "thresholded"]
    probs = _read(out1 / "final_probs.csv")
    assert len(probs) == 11
    assert all(0.0 < float(r[1]) < 1.0 for r in probs[1:])


def test_speed_output(tmp_path):
    out = tmp_path / "speed.csv"
    assert run_cli(
        "speed", "--oracle", "pf", "--p", "200", "--sstar", "2", "--q", "10",
        "--K", "50", "--T", "20000", "--reps", "30", "--seed", "3",
        "--out", str(out), "--quiet",
    ) == 0
    rows = _read(out)
    assert rows[0] == ["rep", "t_best", "t_thresh", "censored"]
    body = rows[1:31]
    assert [r[0] for r in body] == [str(i) for i in range(30)]
    labels = [r[0] for r in rows[31:]]
    assert labels[0] == "mean"
    assert "expected_first_consideration" in labels
    assert "expected_threshold_time" in labels


def test_speed_infinite_k(tmp_path):
    out = tmp_path / "speed.csv"
    assert run_cli(
        "speed", "--oracle", "pf", "--p", "500", "--sstar", "3", "--q", "10",
        "--K", "inf", "--T", "20000", "--reps", "20", "--seed", "4",
        "--out", str(out), "--quiet",
    ) == 0
    labels = [r[0] for r in _read(out)]
    assert "expected_best_time_infinite_k" in labels


def test_experiment_pipeline(tmp_path):
    plan = tmp_path / "plan.txt"
    plan.write_text(
        "n = 40\np = 8\ncriterion = bic\nq = 4\nT = 100\nreplicates = 2\nseed = 3\n"
    )
    out = tmp_path / "exp"
    assert run_cli(
        "experiment", "--plan", str(plan), "--out", str(out), "--quiet"
    ) == 0
    results = _read(out / "results.csv")
    assert results[0] == [
        "cell", "replicate", "method", "model_kind", "model",
        "fp", "fn", "exact", "mse_beta", "rmse_pred", "score", "error",
    ]
    assert len(results) == 1 + 2 * 4
    aggs = _read(out / "aggregates.csv")
    assert aggs[0][0] == "cell"
    assert (out / "timings.csv").exists()


def test_experiment_bad_plan_exits_two(tmp_path, capsys):
    plan = tmp_path / "plan.txt"
    plan.write_text("p = 8\n")
    assert run_cli(
        "experiment", "--plan", str(plan), "--out", str(tmp_path / "x"), "--quiet"
    ) == 2
    assert "both n and p" in capsys.readouterr().err


def test_twelve_significant_digit_reals(sim_dir, tmp_path):
    out = tmp_path / "r"
    assert run_cli(
        "run", "--data", str(sim_dir / "train.csv"), "--q", "4", "--T", "50",
        "--seed", "1", "--out", str(out), "--quiet",
    ) == 0
    score = _read(out / "trace.csv")[1][3]
    assert float(score) == pytest.approx(float("%.12g" % float(score)))
    assert len(score.replace("-", "").replace(".", "").replace("e", "").lstrip("0")) <= 13


def test_parser_covers_all_subcommands():
    parser = build_parser()
    subactions = next(
        a for a in parser._actions if a.dest == "command"
    )
    assert set(subactions.choices) == {
        "simulate", "bestsubset", "run", "speed", "experiment"
    }
