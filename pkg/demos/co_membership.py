"""Co-membership: attacking a batch of images with one shared attacker net.

When an adversary knows that n images either all came from the training set
or all did not (photos from one person, records from one household), a single
attacker network fit to the whole batch averages away per-image noise. This
script compares attack strength n=1 against n=4 on the same model and prints
both AUCs; the grouped attack should score higher.
"""

import argparse

from genleak.attacks import AttackConfig, attack_co
from genleak.data import group_eval, make_split, synth_digits
from genleak.metrics import roc_and_auc
from genleak.models import GanTrainConfig, train_wgan
from genleak.nets import NetworkSpec
from genleak.seeding import derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-count", type=int, default=64)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--strengths", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dataset = synth_digits(count=256, glyph_size=8,
                           seed=derive_seed(args.seed, "data"))
    split = make_split(dataset, train_count=args.train_count,
                       eval_members=min(32, args.train_count), eval_nonmembers=32,
                       seed=derive_seed(args.seed, "split"))

    cfg = GanTrainConfig(steps=args.steps, batch_size=32, latent_dim=8,
                         hidden_sizes=(64, 64), critic_steps=5, clip_c=0.05,
                         gen_learning_rate=1e-3, critic_learning_rate=1e-3,
                         seed=derive_seed(args.seed, "train"))
    print(f"training WGAN on {args.train_count} digits ...")
    gen, _, _ = train_wgan(dataset.rows(split.train_ids), cfg)

    base_spec = NetworkSpec((dataset.dimension, 32, 32, cfg.latent_dim))
    print("\nn    groups  auc")
    for n in args.strengths:
        groups = group_eval(split, n=n, seed=derive_seed(args.seed, "groups", n))
        losses, labels = [], []
        for g, grp in enumerate(groups):
            acfg = AttackConfig(attacker_spec=base_spec, iterations=300,
                                restarts=2, learning_rate=1e-2,
                                seed=derive_seed(args.seed, "attack", n, g))
            xs = dataset.rows(grp.member_ids)
            losses.append(attack_co(gen, xs, acfg).loss)
            labels.append(grp.shared_label)
        report = roc_and_auc(losses, labels)
        print(f"{n:<4} {len(groups):<7} {report.auc:.3f}")


if __name__ == "__main__":
    main()
