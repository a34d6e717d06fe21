"""Trainers and samplers for desk-scale WGANs, vanilla GANs and VAEs.

All models are fully-connected nets from `genleak.nets`; training is plain
single-threaded numpy and bit-reproducible for a fixed config and seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import load_params, save_params
from .nets import NetworkSpec, backward, forward, init_params, param_count
from .optim import AdamState, adam_step, clip_weights
from .seeding import derive_seed, rng_from

__all__ = [
    "GeneratorModel",
    "CriticModel",
    "VaeModel",
    "TrainLog",
    "GanTrainConfig",
    "VaeTrainConfig",
    "TrainingDivergedError",
    "GanTrainer",
    "train_wgan",
    "train_gan_vanilla",
    "train_vae",
    "sample_generator",
    "latent_sample",
    "vae_decode",
    "vae_encode",
    "reparameterize",
    "gaussian_kl",
    "log_loss_terms",
    "save_generator",
    "load_generator",
    "save_critic",
    "load_critic",
    "save_vae",
    "load_vae",
]

LATENT_PRIORS = ("standard_normal", "uniform_unit")


class TrainingDivergedError(RuntimeError):
    """Training loss went non-finite; carries a diagnostic record."""

    def __init__(self, message: str, step: int, diagnostics: dict):
        super().__init__(f"{message} at step {step}: {diagnostics}")
        self.step = step
        self.diagnostics = diagnostics


@dataclass
class GeneratorModel:
    """Generator network: latent vector of size latent_dim -> data vector."""

    spec: NetworkSpec
    params: np.ndarray
    latent_dim: int
    latent_prior: str = "standard_normal"

    def __post_init__(self):
        if self.latent_dim != self.spec.input_size:
            raise ValueError("latent_dim must equal the generator input size")
        if self.latent_prior not in LATENT_PRIORS:
            raise ValueError(f"latent_prior must be one of {LATENT_PRIORS}")

    @property
    def output_dim(self) -> int:
        return self.spec.output_size


@dataclass
class CriticModel:
    """Critic/discriminator network: data vector -> scalar score."""

    spec: NetworkSpec
    params: np.ndarray
    mode: str = "wasserstein"

    def __post_init__(self):
        if self.spec.output_size != 1:
            raise ValueError("critic output size must be 1")
        if self.mode == "wasserstein":
            if self.spec.output_activation != "identity":
                raise ValueError("wasserstein critic must end in identity")
        elif self.mode == "vanilla":
            if self.spec.output_activation != "sigmoid":
                raise ValueError("vanilla discriminator must end in sigmoid")
        else:
            raise ValueError(f"unknown critic mode {self.mode!r}")


@dataclass
class VaeModel:
    """Encoder (x -> mean, log-variance) and decoder (z -> x) pair."""

    encoder_spec: NetworkSpec
    encoder_params: np.ndarray
    decoder_spec: NetworkSpec
    decoder_params: np.ndarray
    latent_dim: int

    def __post_init__(self):
        if self.encoder_spec.output_size != 2 * self.latent_dim:
            raise ValueError("encoder must output mean and log-variance (2 * latent_dim)")
        if self.decoder_spec.input_size != self.latent_dim:
            raise ValueError("decoder input size must equal latent_dim")

    @property
    def output_dim(self) -> int:
        return self.decoder_spec.output_size


@dataclass
class TrainLog:
    """Per-step loss records plus the steps at which checkpoints were written.

    For GANs the columns are (generator loss, critic loss, None); for VAEs they
    are (total loss, KL term, reconstruction term).
    """

    steps: list = field(default_factory=list)
    gen_losses: list = field(default_factory=list)
    critic_or_kl_losses: list = field(default_factory=list)
    recon_losses: list = field(default_factory=list)
    checkpoint_steps: list = field(default_factory=list)

    def append(self, step: int, gen_loss: float, critic_or_kl: float, recon=None):
        if self.steps and step <= self.steps[-1]:
            raise ValueError("TrainLog steps must be strictly increasing")
        self.steps.append(step)
        self.gen_losses.append(gen_loss)
        self.critic_or_kl_losses.append(critic_or_kl)
        self.recon_losses.append(recon)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            f.write("step,gen_loss,critic_or_kl_loss,recon_loss\n")
            for s, g, c, r in zip(
                self.steps, self.gen_losses, self.critic_or_kl_losses, self.recon_losses
            ):
                rtxt = "" if r is None else repr(r)
                f.write(f"{s},{g!r},{c!r},{rtxt}\n")
        return path


@dataclass
class GanTrainConfig:
    """Hyperparameters for WGAN / vanilla-GAN training."""

    steps: int
    batch_size: int = 32
    latent_dim: int = 16
    hidden_sizes: tuple = (128, 128)
    critic_steps: int = 5
    clip_c: float = 0.01
    gen_learning_rate: float = 1e-3
    critic_learning_rate: float = 1e-4
    l2_reg_coeff: float = 1e-4
    latent_prior: str = "standard_normal"
    output_activation: str = "sigmoid"
    checkpoint_every: int = 100
    checkpoint_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or self.critic_steps < 1:
            raise ValueError("steps must be >= 0, batch_size and critic_steps >= 1")
        if self.clip_c <= 0 or self.checkpoint_every < 1:
            raise ValueError("clip_c must be positive and checkpoint_every >= 1")


@dataclass
class VaeTrainConfig:
    """Hyperparameters for VAE training.

    kl_weight scales the KL term against the summed-squared reconstruction
    error. The implied Gaussian observation model ties this to the assumed
    pixel noise (coefficient 1/(2*sigma^2) on the squared error); data with
    low observation noise warrants kl_weight well below 1.
    """

    steps: int
    batch_size: int = 32
    latent_dim: int = 16
    hidden_sizes: tuple = (128, 128)
    learning_rate: float = 1e-3
    kl_weight: float = 1.0
    l2_reg_coeff: float = 1e-4
    output_activation: str = "sigmoid"
    checkpoint_every: int = 100
    checkpoint_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or self.checkpoint_every < 1:
            raise ValueError("steps must be >= 0, batch_size and checkpoint_every >= 1")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")


def _as_matrix(dataset) -> np.ndarray:
    """Accept a datalab Dataset or a plain (n, d) array."""
    x = dataset.x if hasattr(dataset, "x") else dataset
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data must be a nonempty (n, d) matrix")
    return x


def latent_sample(prior: str, rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    if prior == "standard_normal":
        return rng.standard_normal((count, dim))
    if prior == "uniform_unit":
        return rng.uniform(-1.0, 1.0, size=(count, dim))
    raise ValueError(f"unknown latent prior {prior!r}")


def _l2_penalty_and_grad(coeff: float, params: np.ndarray) -> tuple[float, np.ndarray | float]:
    if coeff == 0.0:
        return 0.0, 0.0
    return coeff * float(params @ params), 2.0 * coeff * params


def log_loss_terms(d_real: np.ndarray, d_fake: np.ndarray, floor: float = 1e-7):
    """Vanilla-GAN objective terms (E[log D(real)], E[log(1 - D(fake))])."""
    pr = np.clip(np.asarray(d_real, dtype=np.float64), floor, 1.0)
    pf = np.clip(np.asarray(d_fake, dtype=np.float64), 0.0, 1.0 - floor)
    return float(np.mean(np.log(pr))), float(np.mean(np.log(1.0 - pf)))


def _check_finite(step: int, **values):
    bad = {k: v for k, v in values.items() if not np.isfinite(v)}
    if bad:
        raise TrainingDivergedError("non-finite training loss", step, bad)


def _gan_models(d: int, cfg: GanTrainConfig, mode: str) -> tuple[GeneratorModel, CriticModel]:
    gen_spec = NetworkSpec(
        (cfg.latent_dim, *cfg.hidden_sizes, d),
        hidden_activation="relu",
        output_activation=cfg.output_activation,
        l2_reg_coeff=cfg.l2_reg_coeff,
    )
    critic_out = "identity" if mode == "wasserstein" else "sigmoid"
    critic_spec = NetworkSpec(
        (d, *cfg.hidden_sizes, 1),
        hidden_activation="relu",
        output_activation=critic_out,
        l2_reg_coeff=cfg.l2_reg_coeff,
    )
    gen = GeneratorModel(
        spec=gen_spec,
        params=init_params(gen_spec, derive_seed(cfg.seed, "gen-init")),
        latent_dim=cfg.latent_dim,
        latent_prior=cfg.latent_prior,
    )
    critic = CriticModel(
        spec=critic_spec,
        params=init_params(critic_spec, derive_seed(cfg.seed, "critic-init")),
        mode=mode,
    )
    return gen, critic


def _checkpoint_gan(cfg: GanTrainConfig, step: int, gen: GeneratorModel, critic: CriticModel):
    stem = Path(cfg.checkpoint_dir) / f"step{step:06d}"
    save_generator(stem.with_name(stem.name + "_gen"), gen)
    save_critic(stem.with_name(stem.name + "_critic"), critic)


class GanTrainer:
    """Stateful GAN trainer; supports incremental segments on changing data.

    The one-shot train_wgan / train_gan_vanilla wrappers drive it for a single
    segment. Adversarial sampling keeps one trainer alive and fine-tunes it on
    each fresh batch. RNG streams, optimizer moments, and the step counter
    carry across segments, so a single 100-step segment and two 50-step
    segments on the same data are bit-identical.
    """

    def __init__(self, data_dim: int, config: GanTrainConfig, mode: str = "wasserstein"):
        if mode not in ("wasserstein", "vanilla"):
            raise ValueError(f"unknown GAN mode {mode!r}")
        self.config = config
        self.mode = mode
        self.gen, self.critic = _gan_models(data_dim, config, mode)
        self.gen_state = AdamState.fresh(
            param_count(self.gen.spec), learning_rate=config.gen_learning_rate
        )
        self.critic_state = AdamState.fresh(
            param_count(self.critic.spec), learning_rate=config.critic_learning_rate
        )
        self.batch_rng = rng_from(config.seed, "batches")
        self.latent_rng = rng_from(config.seed, "latent")
        self.log = TrainLog()
        self.step = 0

    def _snapshot(self, step, snapshots, on_snapshot):
        if on_snapshot is not None and step in snapshots:
            on_snapshot(
                step,
                replace(self.gen, params=self.gen.params.copy()),
                replace(self.critic, params=self.critic.params.copy()),
            )

    def train(self, dataset, steps: int, snapshot_steps=None, on_snapshot=None):
        """Run `steps` updates against `dataset`, extending the trainer's log."""
        x = _as_matrix(dataset)
        n = x.shape[0]
        if x.shape[1] != self.gen.output_dim:
            raise ValueError("dataset dimension changed between training segments")
        cfg = self.config
        mode = self.mode
        snapshots = set(snapshot_steps or ())
        reg = cfg.l2_reg_coeff
        b = cfg.batch_size
        end = self.step + steps

        self._snapshot(self.step, snapshots, on_snapshot)
        for step in range(self.step + 1, end + 1):
            critic_loss = np.nan
            for _ in range(cfg.critic_steps):
                real = x[self.batch_rng.integers(0, n, b)]
                z = latent_sample(cfg.latent_prior, self.latent_rng, b, cfg.latent_dim)
                fake, _ = forward(self.gen.spec, self.gen.params, z)
                both = np.concatenate([fake, real])
                scores, tape = forward(self.critic.spec, self.critic.params, both)
                d_fake, d_real = scores[:b, 0], scores[b:, 0]
                pen, pen_grad = _l2_penalty_and_grad(reg, self.critic.params)
                gout = np.empty((2 * b, 1))
                if mode == "wasserstein":
                    # critic minimizes E[D(fake)] - E[D(real)]
                    critic_loss = float(np.mean(d_fake) - np.mean(d_real)) + pen
                    gout[:b, 0] = 1.0 / b
                    gout[b:, 0] = -1.0 / b
                else:
                    term_real, term_fake = log_loss_terms(d_real, d_fake)
                    critic_loss = -(term_real + term_fake) + pen
                    gout[:b, 0] = 1.0 / ((1.0 - np.clip(d_fake, 0.0, 1.0 - 1e-7)) * b)
                    gout[b:, 0] = -1.0 / (np.clip(d_real, 1e-7, 1.0) * b)
                _check_finite(step, critic_loss=critic_loss)
                grad, _ = backward(self.critic.spec, self.critic.params, tape, gout)
                grad += pen_grad
                self.critic.params, self.critic_state = adam_step(
                    self.critic.params, grad, self.critic_state
                )
                if mode == "wasserstein":
                    self.critic.params = clip_weights(self.critic.params, cfg.clip_c)

            z = latent_sample(cfg.latent_prior, self.latent_rng, b, cfg.latent_dim)
            fake, gen_tape = forward(self.gen.spec, self.gen.params, z)
            scores, critic_tape = forward(self.critic.spec, self.critic.params, fake)
            pen, pen_grad = _l2_penalty_and_grad(reg, self.gen.params)
            gout = np.empty((b, 1))
            if mode == "wasserstein":
                gen_loss = float(-np.mean(scores[:, 0])) + pen
                gout[:, 0] = -1.0 / b
            else:
                # classic minimax form: generator descends E[log(1 - D(fake))]
                gen_loss = float(np.mean(np.log(np.clip(1.0 - scores[:, 0], 1e-7, 1.0)))) + pen
                gout[:, 0] = -1.0 / (np.clip(1.0 - scores[:, 0], 1e-7, 1.0) * b)
            _check_finite(step, gen_loss=gen_loss)
            _, fake_grad = backward(self.critic.spec, self.critic.params, critic_tape, gout)
            grad, _ = backward(self.gen.spec, self.gen.params, gen_tape, fake_grad)
            grad += pen_grad
            self.gen.params, self.gen_state = adam_step(self.gen.params, grad, self.gen_state)

            self.log.append(step, gen_loss, critic_loss)
            if step % cfg.checkpoint_every == 0 or step == end:
                self.log.checkpoint_steps.append(step)
                if cfg.checkpoint_dir is not None:
                    _checkpoint_gan(cfg, step, self.gen, self.critic)
            self._snapshot(step, snapshots, on_snapshot)
        self.step = end
        return self


def train_wgan(dataset, config: GanTrainConfig, snapshot_steps=None, on_snapshot=None):
    """Alternating WGAN training with weight clipping on the critic.

    Returns (GeneratorModel, CriticModel, TrainLog). `snapshot_steps` plus
    `on_snapshot(step, gen, critic)` deliver parameter copies mid-run (step 0
    is the initialization) without touching determinism.
    """
    x = _as_matrix(dataset)
    trainer = GanTrainer(x.shape[1], config, "wasserstein")
    trainer.train(x, config.steps, snapshot_steps, on_snapshot)
    return trainer.gen, trainer.critic, trainer.log


def train_gan_vanilla(dataset, config: GanTrainConfig, snapshot_steps=None, on_snapshot=None):
    """Vanilla GAN: sigmoid discriminator, log loss, no weight clipping."""
    x = _as_matrix(dataset)
    trainer = GanTrainer(x.shape[1], config, "vanilla")
    trainer.train(x, config.steps, snapshot_steps, on_snapshot)
    return trainer.gen, trainer.critic, trainer.log


def gaussian_kl(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Closed-form KL(N(mu, exp(logvar)) || N(0, I)) per row."""
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=np.float64))
    return 0.5 * np.sum(mu * mu + np.exp(logvar) - 1.0 - logvar, axis=1)


def reparameterize(mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps with sigma = exp(logvar / 2)."""
    return mu + np.exp(0.5 * logvar) * eps


def train_vae(dataset, config: VaeTrainConfig, snapshot_steps=None, on_snapshot=None):
    """Train encoder/decoder on squared-error reconstruction plus Gaussian KL.

    Returns (VaeModel, TrainLog); log rows carry (total, KL, reconstruction).
    """
    x = _as_matrix(dataset)
    n, d = x.shape
    cfg = config
    k = cfg.latent_dim
    enc_spec = NetworkSpec(
        (d, *cfg.hidden_sizes, 2 * k),
        hidden_activation="relu",
        output_activation="identity",
        l2_reg_coeff=cfg.l2_reg_coeff,
    )
    dec_spec = NetworkSpec(
        (k, *cfg.hidden_sizes, d),
        hidden_activation="relu",
        output_activation=cfg.output_activation,
        l2_reg_coeff=cfg.l2_reg_coeff,
    )
    model = VaeModel(
        encoder_spec=enc_spec,
        encoder_params=init_params(enc_spec, derive_seed(cfg.seed, "enc-init")),
        decoder_spec=dec_spec,
        decoder_params=init_params(dec_spec, derive_seed(cfg.seed, "dec-init")),
        latent_dim=k,
    )
    enc_state = AdamState.fresh(param_count(enc_spec), learning_rate=cfg.learning_rate)
    dec_state = AdamState.fresh(param_count(dec_spec), learning_rate=cfg.learning_rate)
    batch_rng = rng_from(cfg.seed, "batches")
    eps_rng = rng_from(cfg.seed, "reparam")
    log = TrainLog()
    snapshots = set(snapshot_steps or ())
    b = cfg.batch_size

    def snapshot(step):
        if on_snapshot is not None and step in snapshots:
            on_snapshot(
                step,
                replace(
                    model,
                    encoder_params=model.encoder_params.copy(),
                    decoder_params=model.decoder_params.copy(),
                ),
            )

    snapshot(0)
    for step in range(1, cfg.steps + 1):
        xb = x[batch_rng.integers(0, n, b)]
        enc_out, enc_tape = forward(enc_spec, model.encoder_params, xb)
        mu, logvar = enc_out[:, :k], enc_out[:, k:]
        eps = eps_rng.standard_normal((b, k))
        z = reparameterize(mu, logvar, eps)
        xr, dec_tape = forward(dec_spec, model.decoder_params, z)

        diff = xr - xb
        recon = float(np.mean(np.sum(diff * diff, axis=1)))
        kl = float(np.mean(gaussian_kl(mu, logvar)))
        pen_e, pen_e_grad = _l2_penalty_and_grad(cfg.l2_reg_coeff, model.encoder_params)
        pen_d, pen_d_grad = _l2_penalty_and_grad(cfg.l2_reg_coeff, model.decoder_params)
        w = cfg.kl_weight
        total = recon + w * kl + pen_e + pen_d
        _check_finite(step, elbo_loss=total, recon=recon, kl=kl)

        dec_grad, dz = backward(dec_spec, model.decoder_params, dec_tape, 2.0 * diff / b)
        dec_grad += pen_d_grad
        sigma = np.exp(0.5 * logvar)
        enc_gout = np.concatenate(
            [dz + w * mu / b,
             dz * 0.5 * sigma * eps + w * 0.5 * (np.exp(logvar) - 1.0) / b],
            axis=1,
        )
        enc_grad, _ = backward(enc_spec, model.encoder_params, enc_tape, enc_gout)
        enc_grad += pen_e_grad

        model.decoder_params, dec_state = adam_step(model.decoder_params, dec_grad, dec_state)
        model.encoder_params, enc_state = adam_step(model.encoder_params, enc_grad, enc_state)

        log.append(step, total, kl, recon)
        if step % cfg.checkpoint_every == 0 or step == cfg.steps:
            log.checkpoint_steps.append(step)
            if cfg.checkpoint_dir is not None:
                save_vae(Path(cfg.checkpoint_dir) / f"step{step:06d}_vae", model)
        snapshot(step)
    return model, log


def sample_generator(model, count: int, seed: int) -> np.ndarray:
    """Draw `count` generated rows using the model's latent prior.

    Accepts a GeneratorModel or a VaeModel; VAE samples decode standard
    normal latents.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    if isinstance(model, VaeModel):
        z = latent_sample("standard_normal", rng, count, model.latent_dim)
        return vae_decode(model, z)
    z = latent_sample(model.latent_prior, rng, count, model.latent_dim)
    out, _ = forward(model.spec, model.params, z)
    return out


def vae_decode(model: VaeModel, z: np.ndarray) -> np.ndarray:
    """Decoder output for latent z; the only VAE surface attackers see."""
    out, _ = forward(model.decoder_spec, model.decoder_params, z)
    return out


def vae_encode(model: VaeModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and log-variance for x (harness-side; not exposed to attacks)."""
    out, _ = forward(model.encoder_spec, model.encoder_params, x)
    k = model.latent_dim
    if out.ndim == 1:
        return out[:k], out[k:]
    return out[:, :k], out[:, k:]


# -- checkpoint helpers ------------------------------------------------------

def _spec_meta(spec: NetworkSpec) -> dict:
    return {
        "layer_sizes": list(spec.layer_sizes),
        "hidden_activation": spec.hidden_activation,
        "output_activation": spec.output_activation,
        "l2_reg_coeff": spec.l2_reg_coeff,
    }


def _spec_from_meta(meta: dict) -> NetworkSpec:
    return NetworkSpec(
        tuple(meta["layer_sizes"]),
        hidden_activation=meta["hidden_activation"],
        output_activation=meta["output_activation"],
        l2_reg_coeff=meta["l2_reg_coeff"],
    )


def save_generator(stem: str | Path, model: GeneratorModel) -> Path:
    """Write <stem>.glnk (params, role "generator") and <stem>.json (spec meta)."""
    stem = Path(stem)
    save_params(stem.with_suffix(".glnk"), model.spec.layer_sizes, model.params, "generator")
    meta = {
        "role": "generator",
        "spec": _spec_meta(model.spec),
        "latent_dim": model.latent_dim,
        "latent_prior": model.latent_prior,
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    return stem.with_suffix(".glnk")


def load_generator(stem: str | Path) -> GeneratorModel:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    sizes, values, role = load_params(stem.with_suffix(".glnk"))
    if role != "generator" or meta["role"] != "generator":
        raise ValueError(f"checkpoint {stem} does not hold a generator")
    spec = _spec_from_meta(meta["spec"])
    if spec.layer_sizes != sizes:
        raise ValueError(f"meta/params layer sizes disagree for {stem}")
    return GeneratorModel(spec, values, meta["latent_dim"], meta["latent_prior"])


def save_critic(stem: str | Path, model: CriticModel) -> Path:
    stem = Path(stem)
    save_params(stem.with_suffix(".glnk"), model.spec.layer_sizes, model.params, "critic")
    meta = {"role": "critic", "spec": _spec_meta(model.spec), "mode": model.mode}
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    return stem.with_suffix(".glnk")


def load_critic(stem: str | Path) -> CriticModel:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    sizes, values, role = load_params(stem.with_suffix(".glnk"))
    if role != "critic" or meta["role"] != "critic":
        raise ValueError(f"checkpoint {stem} does not hold a critic")
    spec = _spec_from_meta(meta["spec"])
    if spec.layer_sizes != sizes:
        raise ValueError(f"meta/params layer sizes disagree for {stem}")
    return CriticModel(spec, values, meta["mode"])


def save_vae(stem: str | Path, model: VaeModel) -> Path:
    stem = Path(stem)
    save_params(
        Path(str(stem) + ".enc.glnk"),
        model.encoder_spec.layer_sizes,
        model.encoder_params,
        "encoder",
    )
    save_params(
        Path(str(stem) + ".dec.glnk"),
        model.decoder_spec.layer_sizes,
        model.decoder_params,
        "decoder",
    )
    meta = {
        "role": "vae",
        "encoder_spec": _spec_meta(model.encoder_spec),
        "decoder_spec": _spec_meta(model.decoder_spec),
        "latent_dim": model.latent_dim,
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    return stem.with_suffix(".json")


def load_vae(stem: str | Path) -> VaeModel:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    if meta["role"] != "vae":
        raise ValueError(f"checkpoint {stem} does not hold a VAE")
    enc_sizes, enc_values, enc_role = load_params(Path(str(stem) + ".enc.glnk"))
    dec_sizes, dec_values, dec_role = load_params(Path(str(stem) + ".dec.glnk"))
    if enc_role != "encoder" or dec_role != "decoder":
        raise ValueError(f"role tags wrong in VAE checkpoint {stem}")
    enc_spec = _spec_from_meta(meta["encoder_spec"])
    dec_spec = _spec_from_meta(meta["decoder_spec"])
    if enc_spec.layer_sizes != enc_sizes or dec_spec.layer_sizes != dec_sizes:
        raise ValueError(f"meta/params layer sizes disagree for {stem}")
    return VaeModel(enc_spec, enc_values, dec_spec, dec_values, meta["latent_dim"])
