"""Attack evaluation: ROC/AUC, generalization gap, k-dispersion, learning
curves, and the adversarial-sampling selector."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attacks import AttackConfig, attack_single
from .models import GanTrainConfig, GanTrainer, train_wgan
from .seeding import derive_seed, rng_from

__all__ = [
    "EFFECTIVE_AUC_THRESHOLD",
    "RocReport",
    "GapReport",
    "DispersionResult",
    "AdversarialSampleResult",
    "roc_and_auc",
    "generalization_gap",
    "dispersion_greedy",
    "dispersion_exact",
    "dispersion_profile",
    "adversarial_sampling",
    "learning_curve",
    "write_dispersion_csv",
]

# an attacker counts as effective when its ROC area exceeds this
EFFECTIVE_AUC_THRESHOLD = 0.75


@dataclass
class RocReport:
    """ROC sweep for loss-below-threshold membership prediction."""

    thresholds: list
    points: list  # (fpr, tpr), aligned with thresholds
    auc: float
    num_positive: int
    num_negative: int

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            f.write("threshold,fpr,tpr\n")
            for t, (fpr, tpr) in zip(self.thresholds, self.points):
                f.write(f"{float(t)!r},{float(fpr)!r},{float(tpr)!r}\n")
        return path

    def summary(self) -> dict:
        return {
            "auc": self.auc,
            "num_positive": self.num_positive,
            "num_negative": self.num_negative,
        }


@dataclass
class GapReport:
    mean_train_loss: float
    mean_test_loss: float
    gap: float
    train_losses: list
    test_losses: list
    std_train_loss: float
    std_test_loss: float


@dataclass
class DispersionResult:
    k: int
    value: float
    witness_subset: list
    method: str


@dataclass
class AdversarialSampleResult:
    """Indices chosen by adversarial sampling plus the uniform control draw."""

    selected_indices: list
    control_indices: list
    per_batch_losses: list = field(default_factory=list)
    overlap_count: int = 0


def _as_labels(labels) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, str):
            if lab not in ("member", "nonmember"):
                raise ValueError(f"unknown label {lab!r}")
            out.append(lab == "member")
        else:
            out.append(bool(lab))
    return np.array(out, dtype=bool)


def roc_and_auc(losses, labels) -> RocReport:
    """Sweep membership thresholds over the losses and integrate the ROC.

    Members are the positive class; an instance is predicted positive when its
    loss is strictly below the threshold. Thresholds run over the distinct
    loss values plus both infinities, so tied losses enter atomically.
    """
    losses = np.asarray(losses, dtype=np.float64)
    member = _as_labels(labels)
    if losses.shape != member.shape or losses.ndim != 1:
        raise ValueError("losses and labels must be equal-length vectors")
    if not np.all(np.isfinite(losses)):
        raise ValueError("losses must be finite")
    num_pos = int(np.sum(member))
    num_neg = int(member.size - num_pos)
    if num_pos == 0 or num_neg == 0:
        raise ValueError("need at least one member and one nonmember")

    thresholds = [-np.inf, *(float(v) for v in np.unique(losses)), np.inf]
    points = []
    for t in thresholds:
        predicted = losses < t
        tpr = float(np.sum(predicted & member)) / num_pos
        fpr = float(np.sum(predicted & ~member)) / num_neg
        points.append((fpr, tpr))
    auc = 0.0
    for (fpr0, tpr0), (fpr1, tpr1) in zip(points[:-1], points[1:]):
        auc += 0.5 * (tpr0 + tpr1) * (fpr1 - fpr0)
    return RocReport(
        thresholds=thresholds,
        points=points,
        auc=float(auc),
        num_positive=num_pos,
        num_negative=num_neg,
    )


def _instance_attack_losses(generator, rows: np.ndarray, cfg: AttackConfig,
                            threads: int = 1) -> list:
    """Attack each row with a position-derived seed; ordered, thread-safe."""

    def one(i: int) -> float:
        inst_cfg = replace(cfg, seed=derive_seed(cfg.seed, "instance", i))
        return attack_single(generator, rows[i], inst_cfg).loss

    indices = range(rows.shape[0])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, indices))
    return [one(i) for i in indices]


def generalization_gap(generator, train_sample, test_sample, attack_cfg: AttackConfig,
                       threads: int = 1) -> GapReport:
    """Mean attacker loss on non-training data minus mean loss on training data.

    Attack seeds derive from the instance position only, so swapping the two
    samples negates the gap exactly and identical samples give gap 0.
    """
    train_rows = np.atleast_2d(np.asarray(train_sample, dtype=np.float64))
    test_rows = np.atleast_2d(np.asarray(test_sample, dtype=np.float64))
    if train_rows.shape[0] == 0 or test_rows.shape[0] == 0:
        raise ValueError("both samples must be nonempty")
    if train_rows.shape[1] != test_rows.shape[1]:
        raise ValueError("samples must share one dimension")
    train_losses = _instance_attack_losses(generator, train_rows, attack_cfg, threads)
    test_losses = _instance_attack_losses(generator, test_rows, attack_cfg, threads)
    mean_train = float(np.mean(train_losses))
    mean_test = float(np.mean(test_losses))
    return GapReport(
        mean_train_loss=mean_train,
        mean_test_loss=mean_test,
        gap=mean_test - mean_train,
        train_losses=train_losses,
        test_losses=test_losses,
        std_train_loss=float(np.std(train_losses)),
        std_test_loss=float(np.std(test_losses)),
    )


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    return np.sqrt(np.maximum(d2, 0.0))


def _check_dispersion_args(points, k) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, d) matrix")
    if k < 2 or k > points.shape[0]:
        raise ValueError(f"k must lie in [2, {points.shape[0]}]")
    return points


def _min_pairwise(dist: np.ndarray, subset) -> float:
    idx = list(subset)
    sub = dist[np.ix_(idx, idx)]
    return float(np.min(sub[np.triu_indices(len(idx), k=1)]))


def dispersion_greedy(points, k: int) -> DispersionResult:
    """Farthest-point greedy max-min dispersion (2-approximation).

    Seeds with the exact farthest pair, then repeatedly adds the point with
    the largest minimum distance to the chosen set; ties break to the lowest
    index. Chosen sets are nested across k, so the value is nonincreasing
    in k.
    """
    points = _check_dispersion_args(points, k)
    dist = _pairwise_distances(points)
    n = points.shape[0]
    # exact farthest pair, lexicographically first among ties
    triu = np.triu_indices(n, k=1)
    flat_best = int(np.argmax(dist[triu]))
    chosen = [int(triu[0][flat_best]), int(triu[1][flat_best])]
    min_dist = np.minimum(dist[chosen[0]], dist[chosen[1]])
    min_dist[chosen] = -np.inf
    while len(chosen) < k:
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, dist[nxt])
        min_dist[nxt] = -np.inf
    return DispersionResult(
        k=k,
        value=_min_pairwise(dist, chosen),
        witness_subset=sorted(chosen),
        method="greedy",
    )


def dispersion_exact(points, k: int) -> DispersionResult:
    """Exhaustive max-min dispersion; guarded to C(n, k) <= 1e6 subsets."""
    points = _check_dispersion_args(points, k)
    n = points.shape[0]
    if math.comb(n, k) > 10**6:
        raise ValueError(f"C({n}, {k}) exceeds the 1e6 subset guard")
    dist = _pairwise_distances(points)
    best_value = -np.inf
    best_subset = None
    for subset in itertools.combinations(range(n), k):
        value = _min_pairwise(dist, subset)
        if value > best_value:
            best_value = value
            best_subset = subset
    return DispersionResult(
        k=k,
        value=float(best_value),
        witness_subset=list(best_subset),
        method="exact",
    )


def dispersion_profile(points, k_list) -> list:
    return [dispersion_greedy(points, k) for k in k_list]


def write_dispersion_csv(results, path) -> Path:
    path = Path(path)
    with open(path, "w") as f:
        f.write("k,value,method\n")
        for r in results:
            f.write(f"{r.k},{r.value!r},{r.method}\n")
    return path


def adversarial_sampling(dataset, batch_size: int, target_size: int,
                         train_cfg: GanTrainConfig, attack_cfg: AttackConfig, seed: int,
                         fine_tune_steps: int = 200) -> AdversarialSampleResult:
    """Select the least-reproducible point of each fresh batch while a GAN
    evolves alongside.

    Batches are consecutive slices of the dataset, each consumed once. After
    ranking a batch by attack loss against the current generator, the max-loss
    point joins the selection and the GAN is fine-tuned on the whole batch for
    `fine_tune_steps` steps (train_cfg.steps is ignored here). The control
    subset is an independent uniform draw from the full pool; its overlap with
    the selection is recorded.
    """
    x = dataset.x if hasattr(dataset, "x") else np.asarray(dataset, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if target_size * batch_size > n:
        raise ValueError(
            f"need {target_size} batches of {batch_size}, dataset has only {n} points"
        )
    trainer = GanTrainer(x.shape[1], replace(train_cfg, seed=derive_seed(seed, "adv-gan")))
    selected = []
    per_batch_losses = []
    for t in range(target_size):
        batch = x[t * batch_size:(t + 1) * batch_size]
        losses = []
        for j in range(batch.shape[0]):
            cfg_j = replace(attack_cfg, seed=derive_seed(seed, "adv-attack", t, j))
            losses.append(attack_single(trainer.gen, batch[j], cfg_j).loss)
        pick = int(np.argmax(losses))
        selected.append(t * batch_size + pick)
        per_batch_losses.append(losses)
        trainer.train(batch, fine_tune_steps)
    control = rng_from(seed, "control").choice(n, size=target_size, replace=False)
    control = [int(i) for i in control]
    return AdversarialSampleResult(
        selected_indices=selected,
        control_indices=control,
        per_batch_losses=per_batch_losses,
        overlap_count=len(set(selected) & set(control)),
    )


def learning_curve(dataset_train, dataset_test, train_cfg: GanTrainConfig,
                   attack_cfg: AttackConfig, probe_steps, probe_size: int = 32,
                   threads: int = 1) -> list:
    """(step, mean train attack loss, mean test attack loss) at each probe step.

    Probe subsets are drawn once per call; per-instance attack seeds depend on
    the position only, so equal probe sets produce equal series.
    """
    train_rows = np.atleast_2d(np.asarray(
        dataset_train.x if hasattr(dataset_train, "x") else dataset_train, dtype=np.float64
    ))
    test_rows = np.atleast_2d(np.asarray(
        dataset_test.x if hasattr(dataset_test, "x") else dataset_test, dtype=np.float64
    ))
    probe_steps = sorted(set(int(s) for s in probe_steps))
    if not probe_steps:
        raise ValueError("probe_steps must be nonempty")
    if probe_steps[0] < 0 or probe_steps[-1] > train_cfg.steps:
        raise ValueError("probe steps must lie within the training budget")

    def probe_subset(rows, tag):
        if rows.shape[0] <= probe_size:
            return rows
        idx = rng_from(attack_cfg.seed, tag).choice(rows.shape[0], probe_size, replace=False)
        return rows[np.sort(idx)]

    probe_train = probe_subset(train_rows, "probe-train")
    probe_test = probe_subset(test_rows, "probe-test")
    snapshots = {}
    train_wgan(
        train_rows, train_cfg, snapshot_steps=probe_steps,
        on_snapshot=lambda s, g, c: snapshots.__setitem__(s, g),
    )
    series = []
    for step in probe_steps:
        gen = snapshots[step]
        train_losses = _instance_attack_losses(gen, probe_train, attack_cfg, threads)
        test_losses = _instance_attack_losses(gen, probe_test, attack_cfg, threads)
        series.append((step, float(np.mean(train_losses)), float(np.mean(test_losses))))
    return series
