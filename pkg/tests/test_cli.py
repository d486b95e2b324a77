import json
import os

import pytest

from codeedit.cli import (DEFAULTS, ConfigError, LockHeld, bundled_config_path, load_config,
                          output_lock, split_overrides, stage_hash)
from codeedit.corpus.bank import BANK

from conftest import run_cli

DETERMINISTIC = ["dataset/split.json", "dataset/vocab.json", "dataset/manifest.json",
                 "dataset/quadruples_train.jsonl", "dataset/quadruples_validation.jsonl",
                 "dataset/quadruples_test.jsonl", "ingested.jsonl", "submissions.jsonl",
                 "runs/main/history.csv", "runs/main/eval_report.json", "runs/main/eval_instances.csv",
                 "runs/main/cluster/assignments.csv", "runs/main/cluster/report.json"]


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_bundled_config_lists_every_key():
    import yaml
    from codeedit.cli import _flatten
    with open(bundled_config_path(), encoding="utf-8") as fh:
        keys = set(_flatten(yaml.safe_load(fh)))
    assert keys == set(DEFAULTS)
    assert load_config(bundled_config_path())["train.lambda_rec"] == 2.0


def test_override_coercion():
    cfg = load_config(None, {"train.epochs": "3", "train.lambda_c": 0, "dataset.fractions": "0.8,0.1,0.1",
                             "train.rec_edit_transform": False})
    assert cfg["train.epochs"] == 3 and isinstance(cfg["train.lambda_c"], float)
    assert cfg["dataset.fractions"] == [0.8, 0.1, 0.1]
    with pytest.raises(ConfigError):
        load_config(None, {"train.epochs": 1.5})
    with pytest.raises(ConfigError):
        load_config(None, {"train.rec_edit_transform": "maybe"})
    with pytest.raises(ConfigError):
        load_config(None, {"dataset.fractions": [0.5, 0.5, 0.5]})
    with pytest.raises(ConfigError):
        load_config(None, {"no.such_key": 1})


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("train: {epochs: [\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")
    (tmp_path / "list.yaml").write_text("- 1\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "list.yaml")
    (tmp_path / "ok.yaml").write_text("train:\n  epochs: 4\nseed: 9\n")
    cfg = load_config(tmp_path / "ok.yaml", {"seed": 1})
    assert cfg["train.epochs"] == 4 and cfg["seed"] == 1


def test_split_overrides():
    rest, ov = split_overrides(["train", "--train.lr=0.01", "--seed", "3", "--json"])
    assert rest == ["train", "--json"] and ov == {"train.lr": 0.01, "seed": 3}
    with pytest.raises(ConfigError):
        split_overrides(["train", "--train.nope", "1"])
    with pytest.raises(ConfigError):
        split_overrides(["train", "--seed"])


def test_stage_hashes_track_only_upstream_keys():
    base = load_config(None)
    later = load_config(None, {"train.epochs": 99, "cluster.k": 4})
    for stage in ("corpus", "ingest", "dataset"):
        assert stage_hash(base, stage) == stage_hash(later, stage)
    assert stage_hash(base, "train") != stage_hash(later, "train")
    moved = load_config(None, {"paths.output_dir": "/elsewhere"})
    assert stage_hash(base, "train") == stage_hash(moved, "train")
    assert stage_hash(base, "dataset") != stage_hash(load_config(None, {"seed": 1}), "dataset")


def test_lock_is_exclusive(tmp_path):
    with output_lock(tmp_path):
        with pytest.raises(LockHeld):
            with output_lock(tmp_path):
                pass
    assert not (tmp_path / ".codeedit.lock").exists()


def test_lock_held_exit_code(tmp_path, capsys):
    (tmp_path / ".codeedit.lock").write_text("123\n")
    assert run_cli(tmp_path, "gen-corpus", "--json") == 2
    assert json.loads(capsys.readouterr().err)["error"] == "LockHeld"


def test_missing_artifact_exit_code(tmp_path, capsys):
    assert run_cli(tmp_path, "train") == 2
    assert "build-dataset" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    assert run_cli(tmp_path, "train", "--train.bogus", "1") == 2


def test_codebleu_command(tmp_path, capsys):
    a = tmp_path / "a.java"
    a.write_text(BANK["zipZap"]["reference"])
    assert run_cli(tmp_path, "codebleu", str(a), str(a), "--json") == 0
    assert _json_out(capsys)["combined"] == pytest.approx(1.0)
    assert run_cli(tmp_path, "codebleu", str(a), str(a), "--weights", "1,1,1,1") == 2
    empty = tmp_path / "e.java"
    empty.write_text("")
    assert run_cli(tmp_path, "codebleu", str(empty), str(a)) == 1


def test_pipeline_outputs(tiny_runs, capsys):
    out = tiny_runs[0]
    manifest = json.loads((out / "dataset" / "manifest.json").read_text())
    assert {s: manifest["splits"][s]["quadruples"] for s in ("train", "validation", "test")} == \
        {"train": 60, "validation": 16, "test": 16}
    report = json.loads((out / "runs/main/eval_report.json").read_text())
    assert {"overall", "per_topic", "baseline_copy_a1", "ee", "ct", "config_hash"} <= set(report)
    cluster = json.loads((out / "runs/main/cluster/report.json").read_text())
    assert cluster["k"] == 3 and cluster["config_hash"] == report["config_hash"]
    assert any((out / "runs/main/cluster/prompts").iterdir())
    results = (out / "test_results.csv").read_text().splitlines()
    assert results[0].startswith("# config_hash=") and all(r.endswith(",1") for r in results[2:])


def test_exec_tests_on_one_file(tiny_runs, tmp_path, capsys):
    code = tmp_path / "z.java"
    code.write_text(BANK["zipZap"]["reference"])
    assert run_cli(tiny_runs[0], "exec-tests", "--code-file", str(code), "--problem", "zipZap", "--json") == 0
    res = _json_out(capsys)
    assert res["parsed"] and set(res["mask"]) == {"1"}
    assert run_cli(tiny_runs[0], "exec-tests", "--code-file", str(code), "--problem", "nope") == 2


def test_suggest_command(tiny_runs, tmp_path, capsys):
    out = tiny_runs[0]
    sub = json.loads((out / "ingested.jsonl").read_text().splitlines()[1])
    code = tmp_path / "a1.java"
    code.write_text(sub["code"])
    n = len(sub["mask"])
    want = "1" * n
    rc = run_cli(out, "suggest", "--code-file", str(code), "--problem", sub["problem_id"],
                 "--desired-mask", want, "--json")
    assert rc == 0
    res = _json_out(capsys)
    assert res["desired_mask"] == want and len(res["achieved_mask"]) == n
    assert run_cli(out, "suggest", "--code-file", str(code), "--problem", sub["problem_id"],
                   "--desired-mask", "1" * (n + 1)) == 2


def test_changed_upstream_config_is_refused(tiny_runs, capsys):
    out = tiny_runs[0]
    assert run_cli(out, "eval", "--train.epochs", "2", "--json") == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ArtifactMismatch"
    assert run_cli(out, "train", "--dataset.balance", "0.4") == 2


def test_pipeline_is_deterministic(tiny_runs):
    a, b = tiny_runs
    for rel in DETERMINISTIC:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
    assert (a / "runs/main/model.npz").read_bytes() == (b / "runs/main/model.npz").read_bytes()


def test_pure_python_backend_gives_same_clusters(tiny_runs, tmp_path):
    import shutil
    import subprocess
    import sys
    from conftest import TINY_OVERRIDES
    src = tiny_runs[0]
    dst = tmp_path / "copy"
    shutil.copytree(src, dst)
    env = {**os.environ, "CODEEDIT_PURE_PYTHON": "1"}
    subprocess.run([sys.executable, "-m", "codeedit", "cluster", "--paths.output_dir", str(dst),
                    *TINY_OVERRIDES], env=env, check=True, capture_output=True)
    assert (dst / "runs/main/cluster/assignments.csv").read_bytes() == \
        (src / "runs/main/cluster/assignments.csv").read_bytes()
    rep = json.loads((dst / "runs/main/cluster/report.json").read_text())
    assert rep["backend"] == "python"


def test_contrastive_ablation_flag_reaches_history(tiny_runs):
    from codeedit.embedder import read_history
    out = tiny_runs[0]
    assert run_cli(out, "train", "--train.lambda_c", "0", "--paths.run", "no_c") == 0
    rows = read_history(out / "runs/no_c/history.csv")
    assert any(r["l_c"] > 0 for r in rows)
    for r in rows:
        assert r["l_total"] == pytest.approx(2.0 * r["l_rec"] + 0.5 * r["l_reg"], rel=1e-6)
