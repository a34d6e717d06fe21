"""End-to-end tour of the experiment runner: run, resume, report.

Writes a small JSON config, executes it through the same entry points the
`genleak` command uses, deletes one output file, resumes from the manifest
(only the missing stage is recomputed), and finally renders the report.
Everything lands in a directory you pass on the command line, so you can
inspect the manifest and CSVs afterwards.
"""

import argparse
import json
import os
from pathlib import Path

from genleak.cli import main as genleak_main


CONFIG = {
    "kind": "roc_vs_datasize",
    "master_seed": 7,
    "output_dir": None,
    "dataset": {"kind": "digits", "count": 96, "glyph_size": 6},
    "model": {
        "type": "wgan", "steps": 400, "batch_size": 8, "latent_dim": 4,
        "hidden_sizes": [16, 16], "critic_steps": 3, "clip_c": 0.05,
        "gen_learning_rate": 1e-3, "critic_learning_rate": 1e-3,
    },
    "attack": {"iterations": 60, "restarts": 1, "learning_rate": 1e-2,
               "attacker_hidden": [16, 16]},
    "params": {"sizes": [4, 16], "eval_members": 8, "eval_nonmembers": 8},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workdir", help="directory for config, outputs, manifest")
    args = ap.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    run_dir = work / "run"
    config = dict(CONFIG, output_dir=str(run_dir))
    config_path = work / "config.json"
    config_path.write_text(json.dumps(config, indent=2))

    print("== genleak run ==")
    code = genleak_main(["run", "--config", str(config_path)])
    print(f"exit code {code}")
    manifest = run_dir / "manifest.json"
    print(f"outputs in {run_dir}:")
    for p in sorted(run_dir.iterdir()):
        print(f"  {p.name}")

    victim = run_dir / "auc_by_size.csv"
    print(f"\n== deleting {victim.name} and resuming ==")
    os.remove(victim)
    code = genleak_main(["resume", "--manifest", str(manifest)])
    print(f"exit code {code}; file restored: {victim.exists()}")

    print("\n== genleak report ==")
    code = genleak_main(["report", "--manifest", str(manifest)])
    print(f"exit code {code}")


if __name__ == "__main__":
    main()
