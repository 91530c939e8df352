"""Command line surface: every subcommand end to end, error exit codes."""

import json

import pytest

from promptfield.cli import main

PHYS = ["--steps", "20", "--agents", "6", "--arena", "100"]


@pytest.fixture(scope="module")
def cli_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-train")
    code = main(
        ["train", "--prompt", "form a cluster", "--grid", "2", "--embed-dim", "8",
         "--mu", "2", "--lambda", "3", "--generations", "2", "--seeds", "0", "1",
         "--out", str(out), *PHYS]
    )
    assert code == 0
    return out


def test_train_writes_artifacts_and_reports(cli_artifacts, tmp_path, capsys):
    for seed in ("0", "1"):
        seed_dir = cli_artifacts / "2" / seed
        assert (seed_dir / "checkpoint.json").is_file()
        assert (seed_dir / "run_log.jsonl").is_file()
        assert (seed_dir / "final.png").is_file()
    assert (cli_artifacts / "2" / "summary.json").is_file()

    code = main(
        ["train", "--prompt", "gather", "--grid", "2", "--embed-dim", "8",
         "--mu", "1", "--lambda", "1", "--generations", "1", "--seeds", "0",
         "--out", str(tmp_path), *PHYS]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "seed 0: best fitness" in captured.out
    assert "best seed 0, worst seed 0" in captured.out


def test_simulate_cli(cli_artifacts, tmp_path, capsys):
    ckpt = cli_artifacts / "2" / "0" / "checkpoint.json"
    png = tmp_path / "frame.png"
    trace = tmp_path / "trace.ndjson"
    code = main(
        ["simulate", "--checkpoint", str(ckpt), "--out", str(png),
         "--trace", str(trace), "--seed", "3", *PHYS]
    )
    assert code == 0
    assert png.read_bytes().startswith(b"\x89PNG")
    assert len(trace.read_text().splitlines()) == 21
    assert "steps 20" in capsys.readouterr().out


def test_eval_cli(cli_artifacts, tmp_path, capsys):
    prompts = tmp_path / "prompts.ndjson"
    prompts.write_text(
        '{"prompt": "huddle up", "intent": "cluster"}\n'
        '{"prompt": "spread out", "intent": "scatter"}\n'
    )
    report_path = tmp_path / "report.json"
    ckpt = cli_artifacts / "2" / "0" / "checkpoint.json"
    code = main(
        ["eval", "--checkpoint", str(ckpt), "--prompts", str(prompts),
         "--trials", "2", "--out", str(report_path), *PHYS]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "'huddle up' [cluster]" in out and "PWD" in out

    doc = json.loads(report_path.read_text())
    assert doc["trials"] == 2
    assert [row["prompt"] for row in doc["rows"]] == ["huddle up", "spread out"]


def test_stats_cli(cli_artifacts, tmp_path, capsys):
    logs = [str(cli_artifacts / "2" / s / "run_log.jsonl") for s in ("0", "1")]
    out_path = tmp_path / "stats.json"
    code = main(["stats", *logs, "--out", str(out_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "runs: 2" in out and "gen   1" in out

    doc = json.loads(out_path.read_text())
    assert doc["n_runs"] == 2
    assert len(doc["table"]) == 2
    assert {"delta", "mean_delta", "w", "p_value"} <= doc.keys()


def test_config_errors_exit_2(tmp_path, capsys):
    code = main(
        ["train", "--prompt", "x", "--seeds", "0", "0", "--out", str(tmp_path), *PHYS]
    )
    assert code == 2
    assert "error: ConfigError" in capsys.readouterr().err


def test_missing_checkpoint_exits_2(tmp_path, capsys):
    code = main(
        ["simulate", "--checkpoint", str(tmp_path / "absent.json"),
         "--out", str(tmp_path / "x.png"), *PHYS]
    )
    assert code == 2
    assert "FileNotFoundError" in capsys.readouterr().err


def test_vlm_scorer_needs_endpoint_flags(cli_artifacts, tmp_path, capsys):
    prompts = tmp_path / "p.ndjson"
    prompts.write_text('{"prompt": "a", "intent": "cluster"}\n')
    ckpt = cli_artifacts / "2" / "0" / "checkpoint.json"
    code = main(
        ["eval", "--checkpoint", str(ckpt), "--prompts", str(prompts),
         "--scorer", "vlm", *PHYS]
    )
    assert code == 2
    assert "--vlm-url" in capsys.readouterr().err


def test_help_and_usage_exits():
    with pytest.raises(SystemExit) as exc:
        main(["serve", "--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main(["train"])  # missing required flags
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
