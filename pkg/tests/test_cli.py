"""Tests for the genleak command line: subcommands and exit codes."""
import json

import pytest

from genleak.cli import EXIT_DIVERGENCE, EXIT_IO, EXIT_VALIDATION, main


def tiny_config(out_dir, **overrides):
    cfg = {
        "kind": "roc_vs_datasize",
        "master_seed": 5,
        "output_dir": str(out_dir),
        "dataset": {"kind": "digits", "count": 64, "glyph_size": 6},
        "model": {"type": "wgan", "steps": 40, "latent_dim": 4,
                  "hidden_sizes": [16, 16], "batch_size": 8},
        "attack": {"iterations": 20, "restarts": 1, "learning_rate": 0.01,
                   "attacker_hidden": [16, 16]},
        "params": {"sizes": [4, 16], "eval_members": 8, "eval_nonmembers": 8},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_run_resume_report_happy_path(tmp_path, capsys):
    path = write_config(tmp_path, tiny_config(tmp_path / "run"))
    assert main(["run", "--config", str(path)]) == 0
    manifest = tmp_path / "run" / "manifest.json"
    assert manifest.exists()
    assert main(["resume", "--manifest", str(manifest)]) == 0
    assert main(["report", "--manifest", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "attacker_net" in out  # report prints the AUC grid
    assert (tmp_path / "run" / "report.csv").exists()


def test_invalid_config_exits_2_without_outputs(tmp_path, capsys):
    cfg = tiny_config(tmp_path / "run")
    del cfg["model"]["latent_dim"]
    path = write_config(tmp_path, cfg)
    assert main(["run", "--config", str(path)]) == EXIT_VALIDATION
    assert "latent_dim" in capsys.readouterr().err
    assert not (tmp_path / "run").exists()


def test_missing_config_file_exits_4(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


def test_missing_manifest_exits_4(tmp_path):
    assert main(["resume", "--manifest", str(tmp_path / "nope.json")]) == EXIT_IO


def test_corrupted_checkpoint_exits_4(tmp_path):
    path = write_config(tmp_path, tiny_config(tmp_path / "run"))
    assert main(["run", "--config", str(path)]) == 0
    target = tmp_path / "run" / "wgan_size4.glnk"
    blob = bytearray(target.read_bytes())
    blob[-1] ^= 0xFF
    target.write_bytes(bytes(blob))
    assert main(["resume", "--manifest", str(tmp_path / "run" / "manifest.json")]) == EXIT_IO


def test_training_divergence_exits_3(tmp_path):
    cfg = tiny_config(tmp_path / "run", kind="table_attack_comparison")
    cfg["model"] = {"type": "vae", "steps": 200, "vae_learning_rate": 1e9,
                    "latent_dim": 4, "hidden_sizes": [16, 16], "batch_size": 8}
    cfg["params"] = {"train_count": 8, "eval_members": 8, "eval_nonmembers": 8,
                     "strengths": [1], "nn_pool": 16}
    path = write_config(tmp_path, cfg)
    import numpy as np
    with np.errstate(all="ignore"):
        assert main(["run", "--config", str(path)]) == EXIT_DIVERGENCE


def test_report_incomplete_run_exits_2(tmp_path):
    path = write_config(tmp_path, tiny_config(tmp_path / "run"))
    assert main(["run", "--config", str(path)]) == 0
    mpath = tmp_path / "run" / "manifest.json"
    raw = json.loads(mpath.read_text())
    raw["stages"][-1]["status"] = "pending"
    stale = tmp_path / "run" / "stale.json"
    stale.write_text(json.dumps(raw))
    assert main(["report", "--manifest", str(stale)]) == EXIT_VALIDATION


def test_seed_override_flag(tmp_path):
    p1 = write_config(tmp_path, tiny_config(tmp_path / "a"), "a.json")
    p2 = write_config(tmp_path, tiny_config(tmp_path / "b"), "b.json")
    assert main(["run", "--config", str(p1)]) == 0
    assert main(["run", "--config", str(p2), "--seed-override", "99"]) == 0
    a = (tmp_path / "a" / "attacks_size4.csv").read_bytes()
    b = (tmp_path / "b" / "attacks_size4.csv").read_bytes()
    assert a != b


def test_threads_flag_keeps_results_identical(tmp_path):
    p1 = write_config(tmp_path, tiny_config(tmp_path / "a"), "a.json")
    p2 = write_config(tmp_path, tiny_config(tmp_path / "b"), "b.json")
    assert main(["run", "--config", str(p1)]) == 0
    assert main(["run", "--config", str(p2), "--threads", "3"]) == 0
    a = (tmp_path / "a" / "attacks_size16.csv").read_bytes()
    b = (tmp_path / "b" / "attacks_size16.csv").read_bytes()
    assert a == b


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        main(["explode"])
