"""Tests for dataset synthesis, IDX parsing, splits, and co-attack grouping."""
import logging
import struct

import numpy as np
import pytest

from genleak.data import (
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    CoAttackGroup,
    ContributorSpec,
    Dataset,
    MembershipSplit,
    contributor_groups,
    group_eval,
    load_idx,
    make_split,
    save_idx,
    simulate_contributors,
    synth_digits,
    synth_gaussian_mixture,
)
from genleak.metrics import dispersion_exact


# ------------------------------------------------------------- Dataset


def test_dataset_invariants():
    ok = Dataset(x=np.array([[0.0, 1.0], [0.5, 0.25]]), ids=(0, 1))
    assert len(ok) == 2 and ok.dimension == 2
    with pytest.raises(ValueError):
        Dataset(x=np.array([[0.0, 1.2]]), ids=(0,))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[-0.1, 0.2]]), ids=(0,))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[np.nan, 0.2]]), ids=(0,))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[0.1, 0.2], [0.3, 0.4]]), ids=(0, 0))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[0.1, 0.2]]), ids=(0, 1))
    with pytest.raises(ValueError):
        Dataset(x=np.array([[0.1, 0.2]]), ids=(0,), labels=(1, 2))


def test_dataset_row_lookup_by_id():
    ds = Dataset(x=np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]), ids=("a", "b", "c"))
    assert np.array_equal(ds.row("b"), [0.3, 0.4])
    assert np.array_equal(ds.rows(["c", "a"]), [[0.5, 0.6], [0.1, 0.2]])
    with pytest.raises(KeyError):
        ds.row("d")


def test_dataset_csv_export(tmp_path):
    ds = Dataset(
        x=np.array([[0.25, 0.5], [1.0, 0.0]]), ids=(7, 9),
        labels=(3, 4), contributor_id=(0, 1),
    )
    path = ds.to_csv(tmp_path / "ds.csv")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "id,x0,x1,label,contributor_id"
    assert lines[1] == "7,0.25,0.5,3,0"
    assert lines[2] == "9,1.0,0.0,4,1"


# ----------------------------------------------------- gaussian mixture


def test_mixture_single_component_zero_spread_is_constant():
    ds = synth_gaussian_mixture(1, 5, 3, spread=0.0, seed=0)
    assert np.all(ds.x == ds.x[0])


def test_mixture_reproducible_per_seed():
    a = synth_gaussian_mixture(3, 4, 5, 0.1, seed=42)
    b = synth_gaussian_mixture(3, 4, 5, 0.1, seed=42)
    c = synth_gaussian_mixture(3, 4, 5, 0.1, seed=43)
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_mixture_two_components_dispersion_bound():
    # max-pairwise dispersion must reach across the component gap
    spread = 0.01
    for seed in range(3):
        ds = synth_gaussian_mixture(2, 6, 3, spread, seed, component_contributors=True)
        comp = np.array(ds.contributor_id)
        m0 = ds.x[comp == 0].mean(axis=0)
        m1 = ds.x[comp == 1].mean(axis=0)
        inter = float(np.linalg.norm(m0 - m1))
        assert dispersion_exact(ds.x, 2).value >= inter - 4 * spread


def test_mixture_contributor_tagging_and_bounds():
    ds = synth_gaussian_mixture(2, 3, 4, 0.5, seed=1, component_contributors=True)
    assert ds.contributor_id == (0, 0, 0, 1, 1, 1)
    assert ds.x.min() >= 0.0 and ds.x.max() <= 1.0
    assert synth_gaussian_mixture(2, 3, 4, 0.5, seed=1).contributor_id is None
    with pytest.raises(ValueError):
        synth_gaussian_mixture(0, 3, 4, 0.5, seed=1)


# -------------------------------------------------------------- digits


def test_digits_shape_and_range():
    ds = synth_digits(23, 8, seed=0)
    assert ds.x.shape == (23, 64)
    assert ds.dimension == 8 * 8
    assert ds.x.min() >= 0.0 and ds.x.max() <= 1.0
    assert ds.labels == tuple(i % 10 for i in range(23))


def test_digits_seeds_differ():
    assert synth_digits(50, 8, 0).x.sum() != synth_digits(50, 8, 1).x.sum()
    assert np.array_equal(synth_digits(50, 8, 2).x, synth_digits(50, 8, 2).x)


def test_digits_class_means_well_separated():
    ds = synth_digits(400, 8, seed=0)
    labels = np.array(ds.labels)
    means = np.stack([ds.x[labels == c].mean(axis=0) for c in range(10)])
    for a in range(10):
        for b in range(a + 1, 10):
            assert np.linalg.norm(means[a] - means[b]) > 0.5


def test_digits_rejects_small_glyphs():
    with pytest.raises(ValueError):
        synth_digits(10, 5, seed=0)
    with pytest.raises(ValueError):
        synth_digits(0, 8, seed=0)


# ------------------------------------------------------------ IDX files


def test_idx_hand_built_file(tmp_path):
    path = tmp_path / "imgs.idx"
    pixels = bytes([0, 51, 102, 153, 204, 255, 10, 20])
    path.write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, 2, 2, 2) + pixels)
    ds = load_idx(path)
    assert ds.x.shape == (2, 4)
    assert ds.x[0] == pytest.approx([0.0, 51 / 255, 102 / 255, 153 / 255])
    assert ds.x[1, 1] == pytest.approx(1.0)


def test_idx_roundtrip_identical(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.integers(0, 256, size=(5, 16)).astype(np.float64) / 255.0
    labels = tuple(int(v) for v in rng.integers(0, 10, size=5))
    ds = Dataset(x=x, ids=tuple(range(5)), labels=labels)
    save_idx(ds, tmp_path / "i.idx", labels_path=tmp_path / "l.idx")
    back = load_idx(tmp_path / "i.idx", tmp_path / "l.idx")
    assert np.array_equal(back.x, x)
    assert back.labels == labels


def test_idx_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(struct.pack(">IIII", 0x00000802, 1, 2, 2) + bytes(4))
    with pytest.raises(ValueError, match="magic"):
        load_idx(path)


def test_idx_rejects_truncated_payload(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, 2, 2, 2) + bytes(7))
    with pytest.raises(ValueError, match="truncated"):
        load_idx(path)


def test_idx_rejects_trailing_bytes(tmp_path):
    path = tmp_path / "long.idx"
    path.write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, 1, 2, 2) + bytes(5))
    with pytest.raises(ValueError, match="trailing"):
        load_idx(path)


def test_idx_rejects_label_count_mismatch(tmp_path):
    imgs = tmp_path / "i.idx"
    imgs.write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, 2, 1, 2) + bytes(4))
    labs = tmp_path / "l.idx"
    labs.write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, 3) + bytes(3))
    with pytest.raises(ValueError, match="count"):
        load_idx(imgs, labs)


def test_save_idx_requires_square_or_shape(tmp_path):
    x = np.zeros((2, 6))
    with pytest.raises(ValueError):
        save_idx(x, tmp_path / "a.idx")
    save_idx(x, tmp_path / "b.idx", image_shape=(2, 3))
    assert load_idx(tmp_path / "b.idx").x.shape == (2, 6)


# ------------------------------------------------------- splits, groups


def big_dataset(n=1024, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(x=rng.random((n, 3)), ids=tuple(range(n)))


def test_make_split_balanced_512_eval():
    split = make_split(big_dataset(), train_count=512, eval_members=256,
                       eval_nonmembers=256, seed=0)
    assert len(split.eval_ids) == 512
    labels = [split.membership_label(i) for i in split.eval_ids]
    assert labels.count("member") == 256
    assert labels.count("nonmember") == 256
    assert set(split.train_ids) | set(split.holdout_ids) == set(range(1024))
    assert not set(split.train_ids) & set(split.holdout_ids)
    # members of the eval set really are training instances
    train = set(split.train_ids)
    for i in split.eval_ids:
        assert (i in train) == (split.membership_label(i) == "member")


def test_make_split_shuffles_eval_order():
    split = make_split(big_dataset(), 512, 64, 64, seed=3)
    labels = [split.membership_label(i) for i in split.eval_ids]
    assert labels != sorted(labels)
    assert labels != sorted(labels, reverse=True)


def test_make_split_infeasible_counts():
    ds = big_dataset(100)
    with pytest.raises(ValueError):
        make_split(ds, train_count=100, eval_members=10, eval_nonmembers=1, seed=0)
    with pytest.raises(ValueError):
        make_split(ds, train_count=50, eval_members=51, eval_nonmembers=0, seed=0)
    with pytest.raises(ValueError):
        make_split(ds, train_count=0, eval_members=0, eval_nonmembers=0, seed=0)
    with pytest.raises(ValueError):
        make_split(ds, train_count=101, eval_members=0, eval_nonmembers=0, seed=0)


def test_make_split_seed_sensitivity():
    ds = big_dataset(64)
    a = make_split(ds, 32, 16, 16, seed=0)
    b = make_split(ds, 32, 16, 16, seed=0)
    c = make_split(ds, 32, 16, 16, seed=1)
    assert a.train_ids == b.train_ids and a.eval_ids == b.eval_ids
    assert a.train_ids != c.train_ids
    assert len(c.train_ids) == 32 and len(c.eval_ids) == 32


def test_membership_split_invariant_errors():
    with pytest.raises(ValueError):
        MembershipSplit(train_ids=(0, 1), holdout_ids=(1, 2), eval_ids=(),
                        _labels={})
    with pytest.raises(ValueError):
        MembershipSplit(train_ids=(0,), holdout_ids=(1,), eval_ids=(2,),
                        _labels={2: "member"})
    with pytest.raises(ValueError):
        MembershipSplit(train_ids=(0,), holdout_ids=(1,), eval_ids=(0,),
                        _labels={0: "nonmember"})


def test_group_eval_divides_512_into_64_groups():
    split = make_split(big_dataset(), 512, 256, 256, seed=1)
    groups = group_eval(split, n=8, seed=2)
    assert len(groups) == 64
    assert all(g.n == 8 for g in groups)
    seen = [i for g in groups for i in g.member_ids]
    assert sorted(seen) == sorted(split.eval_ids)
    for g in groups:
        labels = {split.membership_label(i) for i in g.member_ids}
        assert labels == {g.shared_label}


def test_group_eval_n1_covers_every_instance():
    split = make_split(big_dataset(64), 32, 8, 8, seed=4)
    groups = group_eval(split, n=1, seed=5)
    assert len(groups) == 16
    assert sorted(g.member_ids[0] for g in groups) == sorted(split.eval_ids)


def test_group_eval_drops_and_logs_remainder(caplog):
    split = make_split(big_dataset(64), 32, 10, 10, seed=6)
    with caplog.at_level(logging.WARNING, logger="genleak.data"):
        groups = group_eval(split, n=3, seed=7)
    assert len(groups) == 6  # 3 member + 3 nonmember groups of 3, 1+1 dropped
    assert "dropping" in caplog.text
    with pytest.raises(ValueError):
        group_eval(split, n=0, seed=8)


def test_group_eval_deterministic():
    split = make_split(big_dataset(128), 64, 16, 16, seed=9)
    a = group_eval(split, 4, seed=10)
    b = group_eval(split, 4, seed=10)
    assert a == b


# ------------------------------------------------------- contributors


def test_simulate_contributors_desk_scale_default():
    spec = ContributorSpec(dimension=16, noise_scale=0.05)
    ds, split = simulate_contributors(spec, 40, 10, 0.5, seed=2)
    assert len(ds) == 400
    assert len(split.train_ids) == 200 and len(split.holdout_ids) == 200
    groups = contributor_groups(ds, split, n=10)
    member = [g for g in groups if g.shared_label == "member"]
    nonmember = [g for g in groups if g.shared_label == "nonmember"]
    assert len(member) == 20 and len(nonmember) == 20
    # a user's images never straddle the membership boundary
    for g in groups:
        owners = {ds.contributor_id[ds.ids.index(i)] for i in g.member_ids}
        assert len(owners) == 1


def test_simulate_contributors_all_contributing_is_error():
    spec = ContributorSpec(dimension=4)
    with pytest.raises(ValueError):
        simulate_contributors(spec, 10, 5, 1.0, seed=0)
    with pytest.raises(ValueError):
        simulate_contributors(spec, 10, 5, 0.0, seed=0)


def test_contributor_images_cluster_by_user():
    spec = ContributorSpec(dimension=16, noise_scale=0.05)
    ds, _ = simulate_contributors(spec, 10, 8, 0.5, seed=3)
    users = np.array(ds.contributor_id)
    intra, inter = [], []
    for a in range(len(ds)):
        for b in range(a + 1, len(ds)):
            dist = float(np.linalg.norm(ds.x[a] - ds.x[b]))
            (intra if users[a] == users[b] else inter).append(dist)
    assert np.mean(intra) < 0.5 * np.mean(inter)


def test_contributor_groups_partial_strength():
    spec = ContributorSpec(dimension=8)
    ds, split = simulate_contributors(spec, 6, 10, 0.5, seed=4)
    groups = contributor_groups(ds, split, n=5)
    assert len(groups) == 12  # two groups of 5 per user
    per_user = {}
    for g in groups:
        owner = ds.contributor_id[ds.ids.index(g.member_ids[0])]
        per_user[owner] = per_user.get(owner, 0) + 1
    assert all(v == 2 for v in per_user.values())


def test_coattack_group_validation():
    g = CoAttackGroup(member_ids=(1, 2, 3), shared_label="member")
    assert g.n == 3
    with pytest.raises(ValueError):
        CoAttackGroup(member_ids=(), shared_label="member")
    with pytest.raises(ValueError):
        CoAttackGroup(member_ids=(1,), shared_label="maybe")
