import json
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from src.app_controller import cli
from src.app_module import create_app
from tests.test_dataset import ADULT_ROWS

SMALL = """
dataset = synthetic
synthetic_samples_per_node = 20
synthetic_dim = 3
n = 3
rho = 0.1
lambda = 0.01
t = 6
l = 2
epsilon = 0.5, 1
delta = 1e-5
seeds = 0, 1
"""


@pytest.fixture(scope="module", autouse=True)
def app():
    # build the container outside CliRunner so log handlers never bind to its streams
    return create_app()


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.conf"
    path.write_text(SMALL)
    return path


def read_csv(path):
    return pd.read_csv(path, comment="#")


def test_info(runner):
    result = runner.invoke(cli, ["info"])
    assert result.exit_code == 0
    assert "app_name" in json.loads(result.stdout.strip().splitlines()[-1])


def test_audit(runner, small_config, tmp_path):
    out = tmp_path / "audit"
    result = runner.invoke(cli, ["audit", "--config", str(small_config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert sorted(p.name for p in out.glob("audit_*.txt")) == [
        "audit_eps0.5_l2.txt",
        "audit_eps1_l2.txt",
    ]
    assert "composed_epsilon=" in result.stdout


def test_run_single_cell(runner, small_config, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(
        cli, ["run", "--config", str(small_config), "--out", str(out), "--epsilon", "1"]
    )
    assert result.exit_code == 0, result.output
    run_csv = Path(result.stdout.strip().splitlines()[-1])
    assert run_csv == out / "run_eps1_l2_seed0.csv"
    first_line = run_csv.read_text().splitlines()[0]
    assert first_line.startswith("# t=6 l=2 epsilon=1")
    frame = read_csv(run_csv)
    assert list(frame.columns) == [
        "k",
        "total_risk",
        "excess_risk",
        "feasibility",
        "consensus_error",
        "accuracy",
    ]
    assert list(frame["k"]) == [1, 2, 3, 4, 5, 6]
    assert (out / "audit_eps1_l2.txt").exists()


def test_run_checkpoint_and_resume(runner, small_config, tmp_path):
    full_out, split_out = tmp_path / "full", tmp_path / "split"
    checkpoint = tmp_path / "state.ckpt"
    base = ["run", "--config", str(small_config), "--seed", "1"]

    assert runner.invoke(cli, base + ["--out", str(full_out)]).exit_code == 0
    first = runner.invoke(
        cli, base + ["--out", str(split_out), "--stop-at", "4", "--checkpoint", str(checkpoint)]
    )
    assert first.exit_code == 0, first.output
    assert checkpoint.read_text().startswith("dp-admm-checkpoint v=1 k=4")
    second = runner.invoke(cli, base + ["--out", str(split_out), "--resume", str(checkpoint)])
    assert second.exit_code == 0, second.output

    full = read_csv(full_out / "run_eps0.5_l2_seed1.csv")
    resumed = read_csv(split_out / "run_eps0.5_l2_seed1.csv")
    assert list(resumed["k"]) == [5, 6]
    pd.testing.assert_frame_equal(
        full.iloc[4:].reset_index(drop=True), resumed.reset_index(drop=True)
    )


def test_sweep(runner, small_config, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(cli, ["sweep", "--config", str(small_config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(list(out.glob("run_*.csv"))) == 4
    aggregate = read_csv(out / "aggregate.csv")
    assert len(aggregate) == 2
    assert list(aggregate["epsilon"]) == [0.5, 1.0]
    assert list(aggregate["seeds"]) == [2, 2]
    assert (aggregate["std_total_risk"] > 0).all()
    assert (aggregate["max_dual_sum_norm"] < 1e-9).all()


def test_sweep_in_parallel_matches_sequential(runner, small_config, tmp_path):
    sequential, parallel = tmp_path / "seq", tmp_path / "par"
    base = ["sweep", "--config", str(small_config)]
    assert runner.invoke(cli, base + ["--out", str(sequential)]).exit_code == 0
    result = runner.invoke(cli, base + ["--out", str(parallel), "--workers", "2"])
    assert result.exit_code == 0, result.output
    for path in sorted(sequential.glob("*.csv")):
        assert (parallel / path.name).read_bytes() == path.read_bytes()


def test_seed_offset(runner, small_config, tmp_path):
    out = tmp_path / "offset"
    result = runner.invoke(
        cli, ["sweep", "--config", str(small_config), "--out", str(out), "--seed-offset", "5"]
    )
    assert result.exit_code == 0, result.output
    assert (out / "run_eps1_l2_seed6.csv").exists()
    assert not (out / "run_eps1_l2_seed0.csv").exists()


def test_oracle(runner, small_config, tmp_path):
    out = tmp_path / "oracle"
    result = runner.invoke(cli, ["oracle", "--config", str(small_config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    frame = read_csv(out / "oracle.csv")
    assert list(frame.columns) == ["coordinate", "w_star"]
    assert len(frame) == 3


def test_preprocess(runner, tmp_path):
    adult_dir = tmp_path / "adult"
    adult_dir.mkdir()
    (adult_dir / "adult.data").write_text("\n".join(ADULT_ROWS) + "\n")
    cache = tmp_path / "adult.cache"
    result = runner.invoke(
        cli, ["preprocess", "--adult-path", str(adult_dir), "--out", str(cache)]
    )
    assert result.exit_code == 0, result.output
    assert "n=4" in result.stdout
    assert cache.read_text().startswith("d=")


def test_config_error_exit_code(runner, tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("epsilon = -1\n")
    result = runner.invoke(cli, ["audit", "--config", str(path)])
    assert result.exit_code == 2


def test_runtime_error_exit_code(runner, tmp_path):
    edges = tmp_path / "edges.txt"
    edges.write_text("0 1\n2 3\n")
    path = tmp_path / "split.conf"
    path.write_text(
        SMALL.replace("n = 3", "n = 4") + f"topology = edges\nedge_list_path = {edges}\n"
    )
    result = runner.invoke(cli, ["run", "--config", str(path), "--out", str(tmp_path / "o")])
    assert result.exit_code == 3


def test_budget_exceeded_exit_code(runner, tmp_path):
    three_steps = tmp_path / "l3.conf"
    three_steps.write_text(SMALL.replace("l = 2", "l = 3").replace("t = 6", "t = 4"))
    two_steps = tmp_path / "l2.conf"
    two_steps.write_text(SMALL.replace("t = 6", "t = 4"))
    checkpoint = tmp_path / "state.ckpt"

    first = runner.invoke(
        cli,
        [
            "run",
            "--config",
            str(three_steps),
            "--out",
            str(tmp_path / "a"),
            "--stop-at",
            "3",
            "--checkpoint",
            str(checkpoint),
        ],
    )
    assert first.exit_code == 0, first.output
    # 9 noisy updates already spent, one more outer iteration of l = 2 exceeds t * l = 8
    second = runner.invoke(
        cli,
        ["run", "--config", str(two_steps), "--out", str(tmp_path / "b"), "--resume", str(checkpoint)],
    )
    assert second.exit_code == 4


def test_parallel_sweep_with_many_seeds_per_pair(runner, tmp_path):
    path = tmp_path / "wide.conf"
    path.write_text(
        SMALL.replace("t = 6", "t = 1")
        .replace("l = 2", "l = 1")
        .replace("epsilon = 0.5, 1", "epsilon = 1")
        .replace("seeds = 0, 1", "seeds = " + ", ".join(str(s) for s in range(32)))
    )
    out = tmp_path / "wide"
    result = runner.invoke(
        cli, ["sweep", "--config", str(path), "--out", str(out), "--workers", "8"]
    )
    assert result.exit_code == 0, result.output
    assert len(list(out.glob("run_*.csv"))) == 32
    assert [p.name for p in out.glob("audit_*")] == ["audit_eps1_l1.txt"]
    assert not [p.name for p in out.iterdir() if p.name.startswith(".")]
    assert read_csv(out / "aggregate.csv")["seeds"].tolist() == [32]


def test_missing_cache_file_exit_code(runner, tmp_path):
    path = tmp_path / "cache.conf"
    path.write_text(
        SMALL.replace("dataset = synthetic", "dataset = cache")
        + f"cache_path = {tmp_path / 'absent.cache'}\n"
    )
    result = runner.invoke(cli, ["run", "--config", str(path), "--out", str(tmp_path / "o")])
    assert result.exit_code == 3
    assert "DatasetParseError" in result.output


def test_corrupt_checkpoint_exit_code(runner, small_config, tmp_path):
    checkpoint = tmp_path / "state.ckpt"
    base = ["run", "--config", str(small_config), "--out", str(tmp_path / "o")]
    first = runner.invoke(cli, base + ["--stop-at", "2", "--checkpoint", str(checkpoint)])
    assert first.exit_code == 0, first.output

    lines = checkpoint.read_text().splitlines()
    lines[2] = "0.5 not-a-number 0.25"
    checkpoint.write_text("\n".join(lines) + "\n")
    result = runner.invoke(cli, base + ["--resume", str(checkpoint)])
    assert result.exit_code == 3
    assert "ProtocolError" in result.output


def test_unwritable_output_names_the_failing_cell(runner, small_config, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    result = runner.invoke(
        cli, ["sweep", "--config", str(small_config), "--out", str(blocker / "out")]
    )
    assert result.exit_code == 3
    assert "sweep cell eps0.5_l2_seed0 failed" in result.output
