"""Experiment pipelines: config parsing, staged execution with a manifest,
resume, and report consolidation.

Each experiment kind runs as a short sequence of stages that communicate
through files only (checkpoints, attack CSVs, metric CSVs), so a run can be
resumed from its manifest: stages whose outputs are intact are skipped,
missing outputs are recomputed deterministically, and corrupted outputs
raise a checksum error.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .attacks import (
    ATTACK_CSV_HEADER,
    AttackConfig,
    attack_co,
    attack_direct_projection,
    attack_nearest_neighbor,
    attack_single,
    format_attack_row,
)
from .data import Dataset, group_eval, make_split, synth_digits, synth_gaussian_mixture
from .metrics import (
    EFFECTIVE_AUC_THRESHOLD,
    adversarial_sampling,
    dispersion_greedy,
    roc_and_auc,
    write_dispersion_csv,
)
from .models import (
    GanTrainConfig,
    VaeTrainConfig,
    load_generator,
    load_vae,
    sample_generator,
    save_generator,
    save_vae,
    train_vae,
    train_wgan,
)
from .nets import NetworkSpec
from .seeding import derive_seed

__all__ = [
    "EXPERIMENT_KINDS",
    "ConfigError",
    "ChecksumError",
    "IncompleteRunError",
    "ExperimentConfig",
    "RunManifest",
    "run_experiment",
    "resume",
    "report",
]

EXPERIMENT_KINDS = (
    "table_attack_comparison",
    "roc_vs_datasize",
    "roc_vs_coattack_strength",
    "strength_vs_datasize_frontier",
    "generalization_gap_sweep",
    "learning_curve",
    "dispersion_profile",
    "adversarial_vs_random",
)


class ConfigError(ValueError):
    """The experiment config is missing fields or fails validation."""


class ChecksumError(OSError):
    """A previously written output no longer matches its recorded hash."""


class IncompleteRunError(ValueError):
    """Report was requested before every stage completed."""


# --------------------------------------------------------------- config


_DEFAULT_PARAMS = {
    "table_attack_comparison": {
        "train_count": 8, "eval_members": 8, "eval_nonmembers": 32,
        "strengths": [1], "nn_pool": 256,
        "methods": ["attacker_net", "nearest_neighbor", "direct_projection"],
    },
    "roc_vs_datasize": {
        "sizes": [8, 64, 512], "eval_members": 32, "eval_nonmembers": 32,
    },
    "roc_vs_coattack_strength": {
        "train_count": 512, "strengths": [1, 4, 8],
        "eval_members": 32, "eval_nonmembers": 32,
    },
    "strength_vs_datasize_frontier": {
        "strengths": [1, 2, 4, 8],
        "sizes": [16, 32, 64, 128, 256, 512, 1024],
        "eval_members": 32, "eval_nonmembers": 32,
        "threshold": EFFECTIVE_AUC_THRESHOLD,
    },
    "generalization_gap_sweep": {
        "sizes": [8, 32, 128, 512], "eval_members": 32, "eval_nonmembers": 32,
    },
    "learning_curve": {
        "train_count": 16, "probe_steps": [50, 200, 500, 1000],
        "probe_size": 16,
    },
    "dispersion_profile": {
        "sizes": [8, 512], "k_list": [8, 16, 32], "sample_count": 64,
    },
    "adversarial_vs_random": {
        "batch_size": 8, "target_size": 32, "fine_tune_steps": 200,
        "eval_nonmembers": 32, "k_list": [8, 16, 32], "sample_count": 64,
    },
}

_REQUIRED_MODEL_KEYS = ("type", "steps", "latent_dim")


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment description."""

    kind: str
    master_seed: int
    output_dir: str
    dataset: dict
    model: dict
    attack: dict
    params: dict = field(default_factory=dict)
    threads: int = 1

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        for key in ("kind", "master_seed", "output_dir", "dataset", "model", "attack"):
            if key not in raw:
                raise ConfigError(f"config missing required field {key!r}")
        kind = raw["kind"]
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}")
        params = dict(_DEFAULT_PARAMS[kind])
        params.update(raw.get("params", {}))
        cfg = ExperimentConfig(
            kind=kind,
            master_seed=int(raw["master_seed"]),
            output_dir=str(raw["output_dir"]),
            dataset=dict(raw["dataset"]),
            model=dict(raw["model"]),
            attack=dict(raw["attack"]),
            params=params,
            threads=int(raw.get("threads", 1)),
        )
        cfg.validate()
        return cfg

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(Path(path)) as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config is not valid JSON: {e}") from e
        return ExperimentConfig.from_dict(raw)

    def validate(self):
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        ds_kind = self.dataset.get("kind")
        if ds_kind not in ("digits", "mixture"):
            raise ConfigError(f"unknown dataset kind {ds_kind!r}")
        if "count" not in self.dataset:
            raise ConfigError("dataset config missing count")
        for key in _REQUIRED_MODEL_KEYS:
            if key not in self.model:
                raise ConfigError(f"model config missing {key}")
        if self.model["type"] not in ("wgan", "vae", "both"):
            raise ConfigError(f"unknown model type {self.model['type']!r}")
        if self.model["type"] == "both" and self.kind != "table_attack_comparison":
            raise ConfigError("model type 'both' is only for table_attack_comparison")
        try:
            self.gan_train_config(seed=0)
            if self.model["type"] in ("vae", "both"):
                self.vae_train_config(seed=0)
            self.attack_config(seed=0, data_dim=4)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid sub-config: {e}") from e

    def to_canonical_dict(self) -> dict:
        return {
            "kind": self.kind,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "dataset": self.dataset,
            "model": self.model,
            "attack": self.attack,
            "params": self.params,
            "threads": self.threads,
        }

    def config_hash(self) -> str:
        # thread count and output location do not affect the results
        d = self.to_canonical_dict()
        del d["threads"], d["output_dir"]
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    # ---- nested config builders

    def gan_train_config(self, seed: int, steps=None) -> GanTrainConfig:
        m = self.model
        kwargs = {
            k: m[k] for k in (
                "batch_size", "latent_dim", "critic_steps", "clip_c",
                "gen_learning_rate", "critic_learning_rate", "l2_reg_coeff",
                "latent_prior", "output_activation", "checkpoint_every",
            ) if k in m
        }
        if "hidden_sizes" in m:
            kwargs["hidden_sizes"] = tuple(m["hidden_sizes"])
        return GanTrainConfig(steps=int(steps if steps is not None else m["steps"]),
                              seed=seed, **kwargs)

    def vae_train_config(self, seed: int) -> VaeTrainConfig:
        m = self.model
        kwargs = {
            k: m[k] for k in (
                "batch_size", "latent_dim", "l2_reg_coeff",
                "output_activation", "checkpoint_every",
            ) if k in m
        }
        if "hidden_sizes" in m:
            kwargs["hidden_sizes"] = tuple(m["hidden_sizes"])
        if "vae_learning_rate" in m:
            kwargs["learning_rate"] = m["vae_learning_rate"]
        if "vae_kl_weight" in m:
            kwargs["kl_weight"] = m["vae_kl_weight"]
        steps = m.get("vae_steps", m["steps"])
        return VaeTrainConfig(steps=int(steps), seed=seed, **kwargs)

    def attack_config(self, seed: int, data_dim: int) -> AttackConfig:
        a = dict(self.attack)
        hidden = a.pop("attacker_hidden", None)
        spec = None
        if hidden is not None:
            spec = NetworkSpec((data_dim, *hidden, int(self.model["latent_dim"])))
        return AttackConfig(attacker_spec=spec, seed=seed, **a)


# -------------------------------------------------------------- manifest


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one experiment run: config, seeds, stages, output hashes."""

    config: dict
    config_hash: str
    code_version: str
    kind: str
    output_dir: str
    seeds: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)  # {name, status, outputs, hashes, wall_time_s}
    path: str | None = None

    def stage_record(self, name: str):
        for rec in self.stages:
            if rec["name"] == name:
                return rec
        return None

    def result_files(self) -> list:
        return [out for rec in self.stages for out in rec["outputs"]]

    def complete(self) -> bool:
        return bool(self.stages) and all(r["status"] == "complete" for r in self.stages)

    def save(self, path=None) -> Path:
        path = Path(path if path is not None else self.path)
        payload = {
            "config": self.config,
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "kind": self.kind,
            "output_dir": self.output_dir,
            "seeds": self.seeds,
            "stages": self.stages,
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        self.path = str(path)
        return path

    @staticmethod
    def load(path) -> "RunManifest":
        with open(Path(path)) as f:
            raw = json.load(f)
        return RunManifest(
            config=raw["config"],
            config_hash=raw["config_hash"],
            code_version=raw["code_version"],
            kind=raw["kind"],
            output_dir=raw["output_dir"],
            seeds=raw["seeds"],
            stages=raw["stages"],
            path=str(path),
        )


# ------------------------------------------------------- shared helpers


def _build_dataset(cfg: ExperimentConfig) -> Dataset:
    ds = cfg.dataset
    seed = derive_seed(cfg.master_seed, "data")
    if ds["kind"] == "digits":
        return synth_digits(int(ds["count"]), int(ds.get("glyph_size", 8)), seed)
    return synth_gaussian_mixture(
        int(ds.get("num_components", 4)),
        int(ds["count"]) // int(ds.get("num_components", 4)),
        int(ds.get("dimension", 16)),
        float(ds.get("spread", 0.05)),
        seed,
    )


def _split_for(cfg: ExperimentConfig, dataset: Dataset, size: int,
               eval_members: int, eval_nonmembers: int):
    return make_split(
        dataset, size, min(eval_members, size), eval_nonmembers,
        seed=derive_seed(cfg.master_seed, "split", size),
    )


def _attack_rows_single(cfg: ExperimentConfig, generator, dataset: Dataset, split,
                        tag) -> list:
    """One CSV row per eval instance, ordered by eval position."""
    d = dataset.dimension

    def one(i):
        inst_id = split.eval_ids[i]
        acfg = cfg.attack_config(
            seed=derive_seed(cfg.master_seed, "attack", *tag, i), data_dim=d
        )
        res = attack_single(generator, dataset.row(inst_id), acfg)
        label = split.membership_label(inst_id) == "member"
        return format_attack_row(inst_id, 1, label, res, acfg)

    return _ordered_map(one, range(len(split.eval_ids)), cfg.threads)


def _attack_rows_groups(cfg: ExperimentConfig, generator, dataset: Dataset, split,
                        groups, tag) -> list:
    d = dataset.dimension

    def one(g):
        group = groups[g]
        acfg = cfg.attack_config(
            seed=derive_seed(cfg.master_seed, "attack", *tag, g), data_dim=d
        )
        res = attack_co(generator, dataset.rows(group.member_ids), acfg,
                        target_ids=group.member_ids)
        gid = "+".join(str(i) for i in group.member_ids)
        return format_attack_row(gid, group.n, group.shared_label == "member", res, acfg)

    return _ordered_map(one, range(len(groups)), cfg.threads)


def _ordered_map(fn, items, threads: int) -> list:
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")


def _read_attack_csv(path: Path):
    """Return (losses, member_flags, strengths) from an attack CSV."""
    losses, members, ns = [], [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != ATTACK_CSV_HEADER:
            raise ValueError(f"unexpected attack CSV header in {path}")
        for line in f:
            parts = line.strip().split(",")
            ns.append(int(parts[1]))
            members.append(parts[2] == "1")
            losses.append(float(parts[3]))
    return np.array(losses), np.array(members, dtype=bool), ns


def _auc_of(path: Path) -> float:
    losses, members, _ = _read_attack_csv(path)
    return roc_and_auc(losses, members).auc


def _json_dump(obj, path: Path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _save_gen(out: Path, stem: str, gen) -> list:
    """Save a generator checkpoint pair; returns the file names written."""
    save_generator(out / stem, gen)
    return [f"{stem}.glnk", f"{stem}.json"]


def _save_vae(out: Path, stem: str, vae) -> list:
    save_vae(out / stem, vae)
    return [f"{stem}.enc.glnk", f"{stem}.dec.glnk", f"{stem}.json"]


# ------------------------------------------------------ pipeline stages
#
# A pipeline is a list of (stage_name, fn) where fn(cfg, out) returns the
# list of file names (relative to out) it wrote.


def _pipeline_roc_vs_datasize(cfg: ExperimentConfig):
    sizes = [int(s) for s in cfg.params["sizes"]]
    em, en = int(cfg.params["eval_members"]), int(cfg.params["eval_nonmembers"])

    def train(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
            gen, _, _ = train_wgan(dataset.rows(split.train_ids), gcfg)
            names += _save_gen(out, f"wgan_size{size}", gen)
        return names

    def attack(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gen = load_generator(out / f"wgan_size{size}")
            rows = _attack_rows_single(cfg, gen, dataset, split, ("size", size))
            name = f"attacks_size{size}.csv"
            _write_rows(out / name, ATTACK_CSV_HEADER, rows)
            names.append(name)
        return names

    def metrics(out):
        names = []
        grid = []
        aucs = []
        for size in sizes:
            losses, members, _ = _read_attack_csv(out / f"attacks_size{size}.csv")
            rep = roc_and_auc(losses, members)
            name = f"roc_size{size}.csv"
            rep.to_csv(out / name)
            names.append(name)
            aucs.append(rep.auc)
            grid.append({"model": "wgan", "method": "attacker_net", "n": 1,
                         "size": size, "auc": rep.auc})
        _write_rows(out / "auc_by_size.csv", "size,auc",
                    [f"{s},{a!r}" for s, a in zip(sizes, aucs)])
        _json_dump({
            "auc_grid": grid,
            "sizes": sizes,
            "aucs": aucs,
            "strictly_decreasing": all(a > b for a, b in zip(aucs, aucs[1:])),
        }, out / "summary.json")
        return names + ["auc_by_size.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_roc_vs_coattack_strength(cfg: ExperimentConfig):
    size = int(cfg.params["train_count"])
    strengths = [int(n) for n in cfg.params["strengths"]]
    em, en = int(cfg.params["eval_members"]), int(cfg.params["eval_nonmembers"])

    def train(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, em, en)
        gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
        gen, _, _ = train_wgan(dataset.rows(split.train_ids), gcfg)
        return _save_gen(out, "wgan", gen)

    def attack(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, em, en)
        gen = load_generator(out / "wgan")
        names = []
        for n in strengths:
            groups = group_eval(split, n, seed=derive_seed(cfg.master_seed, "groups", n))
            rows = _attack_rows_groups(cfg, gen, dataset, split, groups, ("n", n))
            name = f"attacks_n{n}.csv"
            _write_rows(out / name, ATTACK_CSV_HEADER, rows)
            names.append(name)
        return names

    def metrics(out):
        names = []
        grid = []
        aucs = []
        for n in strengths:
            losses, members, _ = _read_attack_csv(out / f"attacks_n{n}.csv")
            rep = roc_and_auc(losses, members)
            name = f"roc_n{n}.csv"
            rep.to_csv(out / name)
            names.append(name)
            aucs.append(rep.auc)
            grid.append({"model": "wgan", "method": "attacker_net", "n": n,
                         "auc": rep.auc})
        _write_rows(out / "auc_by_strength.csv", "n,auc",
                    [f"{n},{a!r}" for n, a in zip(strengths, aucs)])
        _json_dump({
            "auc_grid": grid,
            "strengths": strengths,
            "aucs": aucs,
            "nondecreasing": all(a <= b + 1e-12 for a, b in zip(aucs, aucs[1:])),
        }, out / "summary.json")
        return names + ["auc_by_strength.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_table_attack_comparison(cfg: ExperimentConfig):
    size = int(cfg.params["train_count"])
    strengths = [int(n) for n in cfg.params["strengths"]]
    methods = list(cfg.params["methods"])
    em, en = int(cfg.params["eval_members"]), int(cfg.params["eval_nonmembers"])
    model_types = ["wgan", "vae"] if cfg.model["type"] == "both" else [cfg.model["type"]]

    def train(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, em, en)
        train_rows = dataset.rows(split.train_ids)
        names = []
        if "wgan" in model_types:
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", "wgan"))
            gen, _, _ = train_wgan(train_rows, gcfg)
            names += _save_gen(out, "wgan", gen)
        if "vae" in model_types:
            vcfg = cfg.vae_train_config(seed=derive_seed(cfg.master_seed, "train", "vae"))
            vae, _ = train_vae(train_rows, vcfg)
            names += _save_vae(out, "vae", vae)
        return names

    def _load_model(out, mtype):
        if mtype == "wgan":
            return load_generator(out / "wgan")
        return load_vae(out / "vae")

    def attack(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, em, en)
        d = dataset.dimension
        names = []
        for mtype in model_types:
            model = _load_model(out, mtype)
            for n in strengths:
                groups = group_eval(split, n,
                                    seed=derive_seed(cfg.master_seed, "groups", mtype, n))
                for method in methods:
                    rows = _method_rows(cfg, model, mtype, dataset, groups, method, n, d)
                    name = f"attacks_{mtype}_{method}_n{n}.csv"
                    _write_rows(out / name, ATTACK_CSV_HEADER, rows)
                    names.append(name)
        return names

    def _method_rows(cfg, model, mtype, dataset, groups, method, n, d):
        if method == "nearest_neighbor":
            pool_seed = derive_seed(cfg.master_seed, "nn-pool", mtype)
            pool = sample_generator(model, int(cfg.params["nn_pool"]), pool_seed)

        def one(g):
            group = groups[g]
            xs = dataset.rows(group.member_ids)
            acfg = cfg.attack_config(
                seed=derive_seed(cfg.master_seed, "attack", mtype, method, n, g),
                data_dim=d,
            )
            member = group.shared_label == "member"
            gid = "+".join(str(i) for i in group.member_ids)
            if method == "attacker_net":
                res = attack_co(model, xs, acfg, target_ids=group.member_ids)
                return format_attack_row(gid, n, member, res, acfg)
            if method == "direct_projection":
                losses = [attack_direct_projection(model, x, acfg).loss for x in xs]
                loss = float(np.mean(losses))
            else:
                loss = float(np.mean([attack_nearest_neighbor(pool, x) for x in xs]))
            loss_txt = repr(loss)
            return (f"{gid},{n},{int(member)},{loss_txt},"
                    f"{acfg.restarts},{acfg.iterations},{method}")

        return _ordered_map(one, range(len(groups)), cfg.threads)

    def metrics(out):
        grid = []
        for mtype in model_types:
            for method in methods:
                for n in strengths:
                    auc = _auc_of(out / f"attacks_{mtype}_{method}_n{n}.csv")
                    grid.append({"model": mtype, "method": method, "n": n, "auc": auc})
        rows = [f"{c['model']},{c['method']},{c['n']},{c['auc']!r}" for c in grid]
        _write_rows(out / "report_grid.csv", "model,method,n,auc", rows)
        _json_dump({"auc_grid": grid}, out / "summary.json")
        return ["report_grid.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_frontier(cfg: ExperimentConfig):
    sizes = [int(s) for s in cfg.params["sizes"]]
    strengths = [int(n) for n in cfg.params["strengths"]]
    em, en = int(cfg.params["eval_members"]), int(cfg.params["eval_nonmembers"])
    threshold = float(cfg.params["threshold"])

    def train(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
            gen, _, _ = train_wgan(dataset.rows(split.train_ids), gcfg)
            names += _save_gen(out, f"wgan_size{size}", gen)
        return names

    def attack(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gen = load_generator(out / f"wgan_size{size}")
            for n in strengths:
                groups = group_eval(split, n,
                                    seed=derive_seed(cfg.master_seed, "groups", size, n))
                rows = _attack_rows_groups(cfg, gen, dataset, split, groups,
                                           ("frontier", size, n))
                name = f"attacks_size{size}_n{n}.csv"
                _write_rows(out / name, ATTACK_CSV_HEADER, rows)
                names.append(name)
        return names

    def metrics(out):
        grid = []
        lines = []
        frontier = []
        for n in strengths:
            first_below = None
            for size in sizes:
                auc = _auc_of(out / f"attacks_size{size}_n{n}.csv")
                grid.append({"model": "wgan", "method": "attacker_net", "n": n,
                             "size": size, "auc": auc})
                lines.append(f"{n},{size},{auc!r}")
                if first_below is None and auc < threshold:
                    first_below = size
            frontier.append({"n": n, "smallest_ineffective_size": first_below})
        _write_rows(out / "auc_grid.csv", "n,size,auc", lines)
        _write_rows(
            out / "frontier.csv", "n,smallest_ineffective_size",
            [f"{f['n']},{f['smallest_ineffective_size']}" for f in frontier],
        )
        _json_dump({"auc_grid": grid, "frontier": frontier, "threshold": threshold},
                   out / "summary.json")
        return ["auc_grid.csv", "frontier.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_generalization_gap(cfg: ExperimentConfig):
    sizes = [int(s) for s in cfg.params["sizes"]]
    em, en = int(cfg.params["eval_members"]), int(cfg.params["eval_nonmembers"])

    def train(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
            gen, _, _ = train_wgan(dataset.rows(split.train_ids), gcfg)
            names += _save_gen(out, f"wgan_size{size}", gen)
        return names

    def attack(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, em, en)
            gen = load_generator(out / f"wgan_size{size}")
            rows = _attack_rows_single(cfg, gen, dataset, split, ("size", size))
            name = f"attacks_size{size}.csv"
            _write_rows(out / name, ATTACK_CSV_HEADER, rows)
            names.append(name)
        return names

    def metrics(out):
        grid = []
        lines = []
        gaps, aucs = [], []
        for size in sizes:
            losses, members, _ = _read_attack_csv(out / f"attacks_size{size}.csv")
            auc = roc_and_auc(losses, members).auc
            gap = float(np.mean(losses[~members]) - np.mean(losses[members]))
            gaps.append(gap)
            aucs.append(auc)
            lines.append(f"{size},{gap!r},{auc!r}")
            grid.append({"model": "wgan", "method": "attacker_net", "n": 1,
                         "size": size, "auc": auc, "gap": gap})
        rho = float(stats.spearmanr(gaps, aucs).statistic)
        _write_rows(out / "gap_vs_auc.csv", "size,gap,auc", lines)
        _json_dump({"auc_grid": grid, "sizes": sizes, "gaps": gaps, "aucs": aucs,
                    "spearman": rho}, out / "summary.json")
        return ["gap_vs_auc.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_learning_curve(cfg: ExperimentConfig):
    size = int(cfg.params["train_count"])
    probe_steps = sorted(set(int(s) for s in cfg.params["probe_steps"]))
    probe_size = int(cfg.params["probe_size"])

    def train(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, min(probe_size, size), probe_size)
        gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
        if probe_steps[-1] > gcfg.steps:
            raise ConfigError("probe steps exceed the training budget")
        names = []

        def keep(step, gen, critic):
            names.extend(_save_gen(out, f"wgan_step{step}", gen))

        train_wgan(dataset.rows(split.train_ids), gcfg,
                   snapshot_steps=probe_steps, on_snapshot=keep)
        return names

    def attack(out):
        dataset = _build_dataset(cfg)
        split = _split_for(cfg, dataset, size, min(probe_size, size), probe_size)
        names = []
        for step in probe_steps:
            gen = load_generator(out / f"wgan_step{step}")
            rows = _attack_rows_single(cfg, gen, dataset, split, ("step", step))
            name = f"attacks_step{step}.csv"
            _write_rows(out / name, ATTACK_CSV_HEADER, rows)
            names.append(name)
        return names

    def metrics(out):
        lines = []
        series = []
        for step in probe_steps:
            losses, members, _ = _read_attack_csv(out / f"attacks_step{step}.csv")
            tr = float(np.mean(losses[members]))
            te = float(np.mean(losses[~members]))
            lines.append(f"{step},{tr!r},{te!r}")
            series.append({"step": step, "train_loss": tr, "test_loss": te})
        _write_rows(out / "learning_curve.csv", "step,train_loss,test_loss", lines)
        _json_dump({"auc_grid": [], "series": series}, out / "summary.json")
        return ["learning_curve.csv", "summary.json"]

    return [("train", train), ("attack", attack), ("metrics", metrics)]


def _pipeline_dispersion_profile(cfg: ExperimentConfig):
    sizes = [int(s) for s in cfg.params["sizes"]]
    k_list = [int(k) for k in cfg.params["k_list"]]
    sample_count = int(cfg.params["sample_count"])

    def train(out):
        dataset = _build_dataset(cfg)
        names = []
        for size in sizes:
            split = _split_for(cfg, dataset, size, 0, 0)
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", size))
            gen, _, _ = train_wgan(dataset.rows(split.train_ids), gcfg)
            names += _save_gen(out, f"wgan_size{size}", gen)
        return names

    def metrics(out):
        names = []
        profiles = {}
        for size in sizes:
            gen = load_generator(out / f"wgan_size{size}")
            samples = sample_generator(
                gen, sample_count, derive_seed(cfg.master_seed, "sample", size)
            )
            results = [dispersion_greedy(samples, k) for k in k_list]
            name = f"dispersion_size{size}.csv"
            write_dispersion_csv(results, out / name)
            names.append(name)
            profiles[str(size)] = [r.value for r in results]
        _json_dump({"auc_grid": [], "k_list": k_list, "profiles": profiles},
                   out / "summary.json")
        return names + ["summary.json"]

    return [("train", train), ("metrics", metrics)]


def _pipeline_adversarial_vs_random(cfg: ExperimentConfig):
    batch_size = int(cfg.params["batch_size"])
    target_size = int(cfg.params["target_size"])
    fine_tune = int(cfg.params["fine_tune_steps"])
    en = int(cfg.params["eval_nonmembers"])
    k_list = [int(k) for k in cfg.params["k_list"]]
    sample_count = int(cfg.params["sample_count"])
    pool_count = batch_size * target_size

    def _pool_and_holdout(dataset):
        if len(dataset) < pool_count + en:
            raise ConfigError(
                f"dataset too small: need {pool_count + en} rows, have {len(dataset)}"
            )
        pool = dataset.x[:pool_count]
        holdout = dataset.x[pool_count:pool_count + en]
        return pool, holdout

    def select(out):
        dataset = _build_dataset(cfg)
        pool, _ = _pool_and_holdout(dataset)
        gcfg = cfg.gan_train_config(seed=0, steps=0)
        acfg = cfg.attack_config(seed=0, data_dim=dataset.dimension)
        result = adversarial_sampling(
            pool, batch_size, target_size, gcfg, acfg,
            seed=derive_seed(cfg.master_seed, "select"), fine_tune_steps=fine_tune,
        )
        lines = [
            f"{t},{sel},{ctl}" for t, (sel, ctl) in
            enumerate(zip(result.selected_indices, sorted(result.control_indices)))
        ]
        _write_rows(out / "selection.csv", "round,selected_index,control_index", lines)
        return ["selection.csv"]

    def _read_selection(out):
        selected, control = [], []
        with open(out / "selection.csv") as f:
            f.readline()
            for line in f:
                _, sel, ctl = line.strip().split(",")
                selected.append(int(sel))
                control.append(int(ctl))
        return selected, control

    def train(out):
        dataset = _build_dataset(cfg)
        pool, _ = _pool_and_holdout(dataset)
        selected, control = _read_selection(out)
        names = []
        for tag, indices in (("adv", selected), ("ctl", control)):
            gcfg = cfg.gan_train_config(seed=derive_seed(cfg.master_seed, "train", tag))
            gen, _, _ = train_wgan(pool[indices], gcfg)
            names += _save_gen(out, f"wgan_{tag}", gen)
        return names

    def attack(out):
        dataset = _build_dataset(cfg)
        pool, holdout = _pool_and_holdout(dataset)
        selected, control = _read_selection(out)
        names = []
        for tag, indices in (("adv", selected), ("ctl", control)):
            gen = load_generator(out / f"wgan_{tag}")
            targets = np.concatenate([pool[indices], holdout])
            flags = [True] * len(indices) + [False] * holdout.shape[0]

            def one(i):
                acfg = cfg.attack_config(
                    seed=derive_seed(cfg.master_seed, "attack", tag, i),
                    data_dim=dataset.dimension,
                )
                res = attack_single(gen, targets[i], acfg)
                return format_attack_row(i, 1, flags[i], res, acfg)

            rows = _ordered_map(one, range(targets.shape[0]), cfg.threads)
            name = f"attacks_{tag}.csv"
            _write_rows(out / name, ATTACK_CSV_HEADER, rows)
            names.append(name)
        return names

    def metrics(out):
        grid = []
        lines = []
        summary = {}
        for tag in ("adv", "ctl"):
            gen = load_generator(out / f"wgan_{tag}")
            samples = sample_generator(
                gen, sample_count, derive_seed(cfg.master_seed, "sample", tag)
            )
            disp = {k: dispersion_greedy(samples, k).value for k in k_list}
            auc = _auc_of(out / f"attacks_{tag}.csv")
            grid.append({"model": "wgan", "method": "attacker_net", "n": 1,
                         "variant": tag, "auc": auc})
            for k in k_list:
                lines.append(f"{tag},{k},{disp[k]!r},{auc!r}")
            summary[tag] = {"auc": auc, "dispersion": {str(k): disp[k] for k in k_list}}
        summary["adv_beats_ctl"] = {
            "auc": summary["adv"]["auc"] > summary["ctl"]["auc"],
            "dispersion": all(
                summary["adv"]["dispersion"][str(k)] > summary["ctl"]["dispersion"][str(k)]
                for k in k_list
            ),
        }
        _write_rows(out / "compare.csv", "variant,k,dispersion,auc", lines)
        _json_dump({"auc_grid": grid, **summary}, out / "summary.json")
        return ["compare.csv", "summary.json"]

    return [("select", select), ("train", train), ("attack", attack),
            ("metrics", metrics)]


_PIPELINES = {
    "table_attack_comparison": _pipeline_table_attack_comparison,
    "roc_vs_datasize": _pipeline_roc_vs_datasize,
    "roc_vs_coattack_strength": _pipeline_roc_vs_coattack_strength,
    "strength_vs_datasize_frontier": _pipeline_frontier,
    "generalization_gap_sweep": _pipeline_generalization_gap,
    "learning_curve": _pipeline_learning_curve,
    "dispersion_profile": _pipeline_dispersion_profile,
    "adversarial_vs_random": _pipeline_adversarial_vs_random,
}


# ------------------------------------------------------------ execution


def _fresh_manifest(cfg: ExperimentConfig) -> RunManifest:
    return RunManifest(
        config=cfg.to_canonical_dict(),
        config_hash=cfg.config_hash(),
        code_version=__version__,
        kind=cfg.kind,
        output_dir=cfg.output_dir,
        seeds={"master": cfg.master_seed,
               "data": derive_seed(cfg.master_seed, "data")},
    )


def _run_stage(manifest: RunManifest, out: Path, name: str, fn) -> None:
    start = time.perf_counter()
    outputs = fn(out)
    wall = time.perf_counter() - start
    record = {
        "name": name,
        "status": "complete",
        "outputs": outputs,
        "hashes": {o: _file_sha256(out / o) for o in outputs},
        "wall_time_s": wall,
    }
    existing = manifest.stage_record(name)
    if existing is None:
        manifest.stages.append(record)
    else:
        existing.update(record)
    manifest.save(out / "manifest.json")


def run_experiment(config_path, threads=None, seed_override=None,
                   out_override=None) -> RunManifest:
    """Execute the configured pipeline from scratch; returns the manifest."""
    cfg = ExperimentConfig.from_json(config_path)
    if seed_override is not None:
        cfg.master_seed = int(seed_override)
    if out_override is not None:
        cfg.output_dir = str(out_override)
    if threads is not None:
        cfg.threads = int(threads)
        cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = _fresh_manifest(cfg)
    for name, fn in _PIPELINES[cfg.kind](cfg):
        _run_stage(manifest, out, name, fn)
    return manifest


def _stage_intact(manifest: RunManifest, out: Path, name: str):
    """True if every recorded output is present and matches its hash.

    A present-but-different file is corruption and raises; files that are
    simply missing mean the stage must be recomputed.
    """
    record = manifest.stage_record(name)
    if record is None or record.get("status") != "complete":
        return False
    missing = False
    for rel, want in record["hashes"].items():
        path = out / rel
        if not path.exists():
            missing = True
            continue
        if _file_sha256(path) != want:
            raise ChecksumError(f"output {rel} does not match its recorded hash")
    return not missing


def resume(manifest_path, threads=None) -> RunManifest:
    """Re-run the stages of a previous run whose outputs are gone.

    Intact stages are skipped with their records untouched, so resuming a
    completed run is a no-op returning the identical manifest.
    """
    manifest = RunManifest.load(manifest_path)
    cfg = ExperimentConfig.from_dict(manifest.config)
    if threads is not None:
        cfg.threads = int(threads)
    out = Path(manifest_path).parent
    for name, fn in _PIPELINES[cfg.kind](cfg):
        if _stage_intact(manifest, out, name):
            continue
        _run_stage(manifest, out, name, fn)
    return manifest


def report(manifest_path, out_dir=None) -> dict:
    """Consolidate a completed run into report.json + report.csv."""
    manifest = RunManifest.load(manifest_path)
    if not manifest.complete():
        raise IncompleteRunError("run has incomplete stages; resume it first")
    run_dir = Path(manifest_path).parent
    with open(run_dir / "summary.json") as f:
        summary = json.load(f)
    out = Path(out_dir) if out_dir is not None else run_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = summary.get("auc_grid", [])
    payload = {
        "kind": manifest.kind,
        "config_hash": manifest.config_hash,
        "code_version": manifest.code_version,
        "auc_grid": grid,
        "summary": summary,
        "result_files": manifest.result_files(),
    }
    _json_dump(payload, out / "report.json")
    lines = [
        f"{c.get('model', '')},{c.get('method', '')},{c.get('n', '')},{c['auc']!r}"
        for c in grid
    ]
    _write_rows(out / "report.csv", "model,method,n,auc", lines)
    return payload
