"""Datasets, membership bookkeeping, co-attack grouping, and IDX ingestion.

Feature rows live in [0,1]^d. Membership labels are sealed inside
MembershipSplit: attack code receives feature vectors only, and the labels
come back out on the evaluation side of the harness.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeding import rng_from

__all__ = [
    "Dataset",
    "MembershipSplit",
    "CoAttackGroup",
    "ContributorSpec",
    "synth_gaussian_mixture",
    "synth_digits",
    "load_idx",
    "save_idx",
    "make_split",
    "group_eval",
    "simulate_contributors",
    "contributor_groups",
]

logger = logging.getLogger("genleak.data")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable matrix of feature rows with unique instance ids.

    `labels` holds auxiliary class labels (digit classes and the like);
    `contributor_id` ties instances to the synthetic user who owns them.
    Neither is a membership label.
    """

    x: np.ndarray
    ids: tuple
    contributor_id: tuple | None = None
    labels: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValueError("instances must form a nonempty (n, d) matrix")
        if not np.all(np.isfinite(x)):
            raise ValueError("instances must be finite")
        if x.min() < 0.0 or x.max() > 1.0:
            raise ValueError("instances must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        ids = tuple(self.ids)
        if len(ids) != x.shape[0]:
            raise ValueError("one id per row required")
        if len(set(ids)) != len(ids):
            raise ValueError("ids must be unique")
        object.__setattr__(self, "ids", ids)
        for name in ("contributor_id", "labels"):
            val = getattr(self, name)
            if val is not None:
                val = tuple(val)
                if len(val) != x.shape[0]:
                    raise ValueError(f"{name} must align with rows")
                object.__setattr__(self, name, val)
        object.__setattr__(self, "_index", {i: r for r, i in enumerate(ids)})

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def dimension(self) -> int:
        return self.x.shape[1]

    def row(self, instance_id) -> np.ndarray:
        return self.x[self._index[instance_id]]

    def rows(self, instance_ids) -> np.ndarray:
        return self.x[[self._index[i] for i in instance_ids]]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            cols = ["id"] + [f"x{j}" for j in range(self.dimension)]
            if self.labels is not None:
                cols.append("label")
            if self.contributor_id is not None:
                cols.append("contributor_id")
            f.write(",".join(cols) + "\n")
            for r, i in enumerate(self.ids):
                parts = [str(i)] + [repr(float(v)) for v in self.x[r]]
                if self.labels is not None:
                    parts.append(str(self.labels[r]))
                if self.contributor_id is not None:
                    parts.append(str(self.contributor_id[r]))
                f.write(",".join(parts) + "\n")
        return path


@dataclass(frozen=True)
class MembershipSplit:
    """Train/holdout id partition plus an evaluation set with sealed labels.

    `eval_ids` is safe to hand to attack code: its order is shuffled and it
    carries no labels. `membership_label` and `sealed_labels` are for the
    evaluation side of the harness only; never route them into an attack.
    """

    train_ids: tuple
    holdout_ids: tuple
    eval_ids: tuple
    _labels: dict = field(repr=False)

    def __post_init__(self):
        train, hold = set(self.train_ids), set(self.holdout_ids)
        if train & hold:
            raise ValueError("train and holdout ids must be disjoint")
        pool = train | hold
        if not set(self.eval_ids) <= pool:
            raise ValueError("eval ids must come from train or holdout")
        if len(set(self.eval_ids)) != len(self.eval_ids):
            raise ValueError("eval ids must be unique")
        for i in self.eval_ids:
            want = "member" if i in train else "nonmember"
            if self._labels.get(i) != want:
                raise ValueError("sealed labels disagree with the partition")

    def membership_label(self, instance_id) -> str:
        """Harness-side label lookup; raises KeyError off the eval set."""
        return self._labels[instance_id]

    def sealed_labels(self) -> dict:
        """Copy of the eval id -> label map, for scoring only."""
        return dict(self._labels)


@dataclass(frozen=True)
class CoAttackGroup:
    """n instances known a priori to share one membership label."""

    member_ids: tuple
    shared_label: str

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if len(self.member_ids) == 0:
            raise ValueError("a group needs at least one instance")
        if self.shared_label not in ("member", "nonmember"):
            raise ValueError(f"unknown label {self.shared_label!r}")

    @property
    def n(self) -> int:
        return len(self.member_ids)


def _minmax_normalize(x: np.ndarray) -> np.ndarray:
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    flat = span == 0.0
    span = np.where(flat, 1.0, span)
    out = (x - lo) / span
    out[:, flat] = 0.5
    return out


def synth_gaussian_mixture(num_components: int, points_per_component: int,
                           dimension: int, spread: float, seed: int,
                           component_contributors: bool = False) -> Dataset:
    """Deterministic Gaussian-mixture sample, min-max normalized to [0,1]^d.

    Component centers are uniform in [0,1]^d; each component contributes
    `points_per_component` rows at the given spread. With
    `component_contributors` the component index is recorded as the
    contributor id.
    """
    if num_components < 1 or points_per_component < 1 or dimension < 1:
        raise ValueError("all counts must be positive")
    if spread < 0:
        raise ValueError("spread must be nonnegative")
    rng = rng_from(seed, "mixture")
    centers = rng.random((num_components, dimension))
    rows = []
    comp = []
    for c in range(num_components):
        noise = rng.standard_normal((points_per_component, dimension))
        rows.append(centers[c] + spread * noise)
        comp.extend([c] * points_per_component)
    x = _minmax_normalize(np.concatenate(rows))
    n = x.shape[0]
    return Dataset(
        x=x,
        ids=tuple(range(n)),
        contributor_id=tuple(comp) if component_contributors else None,
    )


# stroke-segment glyphs for the classes 0..9, endpoints in the unit square
_GLYPH_STROKES = {
    0: [((0.3, 0.2), (0.7, 0.2)), ((0.7, 0.2), (0.7, 0.8)),
        ((0.7, 0.8), (0.3, 0.8)), ((0.3, 0.8), (0.3, 0.2))],
    1: [((0.5, 0.2), (0.5, 0.8)), ((0.35, 0.35), (0.5, 0.2))],
    2: [((0.3, 0.3), (0.5, 0.2)), ((0.5, 0.2), (0.7, 0.35)),
        ((0.7, 0.35), (0.3, 0.8)), ((0.3, 0.8), (0.7, 0.8))],
    3: [((0.35, 0.22), (0.65, 0.2)), ((0.65, 0.2), (0.72, 0.35)),
        ((0.72, 0.35), (0.52, 0.48)), ((0.52, 0.48), (0.72, 0.62)),
        ((0.72, 0.62), (0.62, 0.78)), ((0.62, 0.78), (0.32, 0.76))],
    4: [((0.6, 0.8), (0.6, 0.2)), ((0.6, 0.2), (0.3, 0.6)),
        ((0.3, 0.6), (0.75, 0.6))],
    5: [((0.7, 0.2), (0.3, 0.2)), ((0.3, 0.2), (0.3, 0.5)),
        ((0.3, 0.5), (0.6, 0.5)), ((0.6, 0.5), (0.65, 0.7)),
        ((0.65, 0.7), (0.3, 0.8))],
    6: [((0.65, 0.2), (0.35, 0.45)), ((0.35, 0.45), (0.3, 0.7)),
        ((0.3, 0.7), (0.55, 0.8)), ((0.55, 0.8), (0.65, 0.6)),
        ((0.65, 0.6), (0.35, 0.55))],
    7: [((0.3, 0.2), (0.7, 0.2)), ((0.7, 0.2), (0.45, 0.8))],
    8: [((0.5, 0.2), (0.32, 0.35)), ((0.32, 0.35), (0.65, 0.62)),
        ((0.65, 0.62), (0.5, 0.8)), ((0.5, 0.8), (0.35, 0.62)),
        ((0.35, 0.62), (0.68, 0.35)), ((0.68, 0.35), (0.5, 0.2))],
    9: [((0.65, 0.45), (0.4, 0.5)), ((0.4, 0.5), (0.35, 0.3)),
        ((0.35, 0.3), (0.6, 0.2)), ((0.6, 0.2), (0.65, 0.45)),
        ((0.65, 0.45), (0.55, 0.8))],
}


def _render_glyph(strokes, size: int, rng: np.random.Generator) -> np.ndarray:
    """Rasterize jittered stroke segments; intensity falls off with distance.

    The jitter is deliberately generous (placement, scale, stroke width,
    per-stroke wobble, intensity, pixel noise) so instances of one class
    stay individually recognizable rather than collapsing onto a class
    archetype.
    """
    shift = rng.uniform(-0.1, 0.1, size=2)
    scale = rng.uniform(0.72, 1.22)
    width = rng.uniform(0.05, 0.11)
    intensity = rng.uniform(0.75, 1.0)
    grid = (np.arange(size) + 0.5) / size
    gx, gy = np.meshgrid(grid, grid)
    img = np.zeros((size, size))
    for (x0, y0), (x1, y1) in strokes:
        jit = rng.uniform(-0.05, 0.05, size=4)
        a = np.array([0.5, 0.5]) + scale * (np.array([x0, y0]) - 0.5) + shift + jit[:2]
        b = np.array([0.5, 0.5]) + scale * (np.array([x1, y1]) - 0.5) + shift + jit[2:]
        ab = b - a
        denom = float(ab @ ab)
        px = np.stack([gx - a[0], gy - a[1]], axis=-1)
        t = np.clip((px @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros_like(gx)
        dx = px[..., 0] - t * ab[0]
        dy = px[..., 1] - t * ab[1]
        dist = np.sqrt(dx * dx + dy * dy)
        img = np.maximum(img, intensity * np.clip(1.0 - dist / width, 0.0, 1.0))
    img = np.clip(img + rng.uniform(0.0, 0.08, size=img.shape), 0.0, 1.0)
    return img.reshape(-1)


def synth_digits(count: int, glyph_size: int, seed: int) -> Dataset:
    """Procedural stroke-glyph digits: `count` rows of glyph_size^2 features.

    Classes cycle 0..9; each instance gets its own jitter, so two rows of one
    class differ while class-conditional means stay far apart.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if glyph_size < 6:
        raise ValueError("glyph_size must be at least 6")
    rng = rng_from(seed, "digits")
    rows = np.empty((count, glyph_size * glyph_size))
    labels = []
    for i in range(count):
        cls = i % 10
        rows[i] = _render_glyph(_GLYPH_STROKES[cls], glyph_size, rng)
        labels.append(cls)
    return Dataset(x=rows, ids=tuple(range(count)), labels=tuple(labels))


def _read_exact(f, nbytes: int, what: str) -> bytes:
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise ValueError(f"truncated IDX payload while reading {what}")
    return buf


def load_idx(images_path, labels_path=None) -> Dataset:
    """Parse big-endian IDX image (and optional label) files into a Dataset.

    Pixels are scaled from [0, 255] to [0, 1]; images flatten row-major.
    """
    images_path = Path(images_path)
    with open(images_path, "rb") as f:
        magic, count, nrows, ncols = struct.unpack(">IIII", _read_exact(f, 16, "image header"))
        if magic != IDX_IMAGES_MAGIC:
            raise ValueError(f"bad image magic 0x{magic:08x}")
        payload = _read_exact(f, count * nrows * ncols, "image data")
        if f.read(1):
            raise ValueError("trailing bytes after declared image data")
    x = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    x = x.reshape(count, nrows * ncols)
    labels = None
    if labels_path is not None:
        with open(Path(labels_path), "rb") as f:
            magic, lcount = struct.unpack(">II", _read_exact(f, 8, "label header"))
            if magic != IDX_LABELS_MAGIC:
                raise ValueError(f"bad label magic 0x{magic:08x}")
            if lcount != count:
                raise ValueError(f"label count {lcount} != image count {count}")
            lpayload = _read_exact(f, lcount, "label data")
            if f.read(1):
                raise ValueError("trailing bytes after declared label data")
        labels = tuple(int(b) for b in lpayload)
    return Dataset(x=x, ids=tuple(range(count)), labels=labels)


def save_idx(dataset_or_matrix, images_path, image_shape=None, labels_path=None) -> Path:
    """Write rows as a big-endian IDX image file (bytes = round(value * 255)).

    `image_shape` defaults to a square when the dimension is a perfect
    square. Labels are written when the dataset carries them and
    `labels_path` is given.
    """
    if isinstance(dataset_or_matrix, Dataset):
        x = dataset_or_matrix.x
        labels = dataset_or_matrix.labels
    else:
        x = np.asarray(dataset_or_matrix, dtype=np.float64)
        labels = None
    count, d = x.shape
    if image_shape is None:
        side = int(round(np.sqrt(d)))
        if side * side != d:
            raise ValueError("dimension is not square; pass image_shape")
        image_shape = (side, side)
    nrows, ncols = image_shape
    if nrows * ncols != d:
        raise ValueError("image_shape does not match the dimension")
    images_path = Path(images_path)
    data = np.round(x * 255.0).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, count, nrows, ncols))
        f.write(data.tobytes())
    if labels_path is not None:
        if labels is None:
            raise ValueError("no labels to write")
        with open(Path(labels_path), "wb") as f:
            f.write(struct.pack(">II", IDX_LABELS_MAGIC, count))
            f.write(bytes(int(v) for v in labels))
    return images_path


def make_split(dataset: Dataset, train_count: int, eval_members: int,
               eval_nonmembers: int, seed: int) -> MembershipSplit:
    """Uniform train/holdout split plus a balanced, shuffled eval set.

    Eval instances are sampled without replacement from each side and the
    combined order is reshuffled so position reveals nothing.
    """
    n = len(dataset)
    if not (0 < train_count <= n):
        raise ValueError(f"train_count must be in [1, {n}]")
    if eval_members < 0 or eval_nonmembers < 0:
        raise ValueError("eval counts must be nonnegative")
    if eval_members > train_count:
        raise ValueError("not enough training instances for eval_members")
    if eval_nonmembers > n - train_count:
        raise ValueError("not enough holdout instances for eval_nonmembers")
    rng = rng_from(seed, "split")
    order = rng.permutation(n)
    ids = dataset.ids
    train_ids = tuple(ids[i] for i in order[:train_count])
    holdout_ids = tuple(ids[i] for i in order[train_count:])
    eval_m = [train_ids[i] for i in rng.choice(train_count, eval_members, replace=False)]
    eval_n = [holdout_ids[i] for i in rng.choice(n - train_count, eval_nonmembers, replace=False)]
    combined = eval_m + eval_n
    eval_ids = tuple(combined[i] for i in rng.permutation(len(combined)))
    labels = {i: "member" for i in eval_m}
    labels.update({i: "nonmember" for i in eval_n})
    return MembershipSplit(
        train_ids=train_ids, holdout_ids=holdout_ids, eval_ids=eval_ids, _labels=labels
    )


def group_eval(split: MembershipSplit, n: int, seed: int) -> list:
    """Partition the eval set, within each membership label, into groups of n.

    When n does not divide a label-class size, the remainder instances are
    dropped from the grouped evaluation and a warning records how many.
    """
    if n < 1:
        raise ValueError("group size n must be >= 1")
    rng = rng_from(seed, "groups")
    groups = []
    for label in ("member", "nonmember"):
        pool = [i for i in split.eval_ids if split.membership_label(i) == label]
        order = rng.permutation(len(pool))
        usable = (len(pool) // n) * n
        dropped = len(pool) - usable
        if dropped:
            logger.warning("group_eval: dropping %d %s instance(s) not filling a group of %d",
                           dropped, label, n)
        for start in range(0, usable, n):
            chunk = tuple(pool[j] for j in order[start:start + n])
            groups.append(CoAttackGroup(member_ids=chunk, shared_label=label))
    return groups


@dataclass(frozen=True)
class ContributorSpec:
    """Shape of the simulated per-user image clusters."""

    dimension: int
    noise_scale: float = 0.05

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


def simulate_contributors(dataset_spec: ContributorSpec, num_users: int,
                          images_per_user: int, contributing_fraction: float,
                          seed: int):
    """Synthesize users who each own a cluster of correlated images.

    Every image is its user's style vector plus noise, clipped to [0,1].
    Contributing users place all their images in training; the rest are
    holdout. The eval set covers every image, so co-attack groups of any
    strength up to images_per_user can be formed per user. Returns
    (Dataset, MembershipSplit).
    """
    if num_users < 2 or images_per_user < 1:
        raise ValueError("need at least two users and one image per user")
    if not 0.0 <= contributing_fraction <= 1.0:
        raise ValueError("contributing_fraction must lie in [0, 1]")
    num_contributing = int(round(num_users * contributing_fraction))
    if num_contributing == 0 or num_contributing == num_users:
        raise ValueError(
            "contributing_fraction leaves no member or no nonmember users; "
            "the evaluation needs both"
        )
    rng = rng_from(seed, "contributors")
    d = dataset_spec.dimension
    rows = []
    users = []
    for u in range(num_users):
        style = rng.random(d)
        noise = dataset_spec.noise_scale * rng.standard_normal((images_per_user, d))
        rows.append(np.clip(style + noise, 0.0, 1.0))
        users.extend([u] * images_per_user)
    x = np.concatenate(rows)
    ids = tuple(range(x.shape[0]))
    dataset = Dataset(x=x, ids=ids, contributor_id=tuple(users))
    contributing = set(rng.choice(num_users, num_contributing, replace=False).tolist())
    train_ids = tuple(i for i in ids if users[i] in contributing)
    holdout_ids = tuple(i for i in ids if users[i] not in contributing)
    eval_ids = tuple(int(i) for i in rng.permutation(len(ids)))
    labels = {i: ("member" if users[i] in contributing else "nonmember") for i in ids}
    split = MembershipSplit(
        train_ids=train_ids, holdout_ids=holdout_ids, eval_ids=eval_ids, _labels=labels
    )
    return dataset, split


def contributor_groups(dataset: Dataset, split: MembershipSplit, n: int) -> list:
    """Per-user co-attack groups of strength n from a contributor dataset.

    Each user's eval images are chunked into groups of n in id order;
    remainders are dropped and logged, mirroring group_eval.
    """
    if n < 1:
        raise ValueError("group size n must be >= 1")
    if dataset.contributor_id is None:
        raise ValueError("dataset has no contributor ids")
    by_user: dict = {}
    for i in split.eval_ids:
        by_user.setdefault(dataset.contributor_id[dataset._index[i]], []).append(i)
    groups = []
    dropped = 0
    for user in sorted(by_user):
        pool = sorted(by_user[user])
        usable = (len(pool) // n) * n
        dropped += len(pool) - usable
        label = split.membership_label(pool[0])
        for start in range(0, usable, n):
            groups.append(CoAttackGroup(member_ids=tuple(pool[start:start + n]),
                                        shared_label=label))
    if dropped:
        logger.warning("contributor_groups: dropping %d instance(s) not filling a group of %d",
                       dropped, n)
    return groups
