"""Membership ROC across training set sizes, built from library calls.

For each size, trains a fresh WGAN, attacks a balanced evaluation set with
the inverting attacker network, and prints the AUC. Small training sets leak
hard (AUC near 1); larger ones blur toward chance. Runs in a couple of
minutes on one core at the default sizes.
"""

import argparse
from dataclasses import replace

from genleak.attacks import AttackConfig, attack_single
from genleak.data import make_split, synth_digits
from genleak.metrics import roc_and_auc
from genleak.models import GanTrainConfig, train_wgan
from genleak.nets import NetworkSpec
from genleak.seeding import derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 64])
    ap.add_argument("--steps", type=int, default=3000)
    ap.add_argument("--eval-count", type=int, default=16,
                    help="evaluation images per side (members / outsiders)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dataset = synth_digits(count=max(args.sizes) + 2 * args.eval_count,
                           glyph_size=8, seed=derive_seed(args.seed, "data"))

    print("size   auc     (eval = "
          f"{args.eval_count} members vs {args.eval_count} outsiders)")
    for size in args.sizes:
        split = make_split(dataset, train_count=size,
                           eval_members=min(args.eval_count, size),
                           eval_nonmembers=args.eval_count,
                           seed=derive_seed(args.seed, "split", size))
        cfg = GanTrainConfig(steps=args.steps, batch_size=min(32, size),
                             latent_dim=8, hidden_sizes=(64, 64),
                             critic_steps=5, clip_c=0.05,
                             gen_learning_rate=1e-3, critic_learning_rate=1e-3,
                             seed=derive_seed(args.seed, "train", size))
        gen, _, _ = train_wgan(dataset.rows(split.train_ids), cfg)

        base = AttackConfig(
            attacker_spec=NetworkSpec((dataset.dimension, 32, 32, cfg.latent_dim)),
            iterations=300, restarts=2, learning_rate=1e-2, seed=0,
        )
        losses, labels = [], []
        for i, ident in enumerate(split.eval_ids):
            acfg = replace(base, seed=derive_seed(args.seed, "attack", size, i))
            losses.append(attack_single(gen, dataset.row(ident), acfg).loss)
            labels.append(split.membership_label(ident))
        report = roc_and_auc(losses, labels)
        print(f"{size:<6} {report.auc:.3f}")


if __name__ == "__main__":
    main()
