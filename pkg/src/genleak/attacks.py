"""Membership attacks: the attacker network, co-attacks, and baselines.

An attack inverts a frozen generator: a small attacker net maps the target x
to a latent code whose generated output should reproduce x. The final L2
reconstruction distance is the membership statistic. Baselines are direct
latent-space projection and nearest neighbor against a generated pool.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import GeneratorModel, VaeModel, latent_sample
from .nets import NetworkSpec, backward, forward, init_params
from .optim import AdamState, adam_step, sgd_step
from .seeding import derive_seed, rng_from

__all__ = [
    "ATTACK_CSV_HEADER",
    "AttackConfig",
    "AttackResult",
    "AttackFailedError",
    "attack_single",
    "attack_co",
    "attack_direct_projection",
    "attack_nearest_neighbor",
    "blackbox_loss_and_grad",
    "whitebox_loss_and_grad",
    "decide_membership",
    "default_attacker_spec",
    "format_attack_row",
]

OPTIMIZERS = ("adam", "plain_gd")
GRADIENT_MODES = ("white_box", "black_box")
DEFAULT_ATTACKER_HIDDEN = (100, 100)

ATTACK_CSV_HEADER = "instance_or_group_id,n,true_membership,loss,restarts,iterations,mode"


class AttackFailedError(RuntimeError):
    """Every restart of an attack hit a non-finite loss."""


@dataclass(frozen=True)
class AttackConfig:
    """Attack hyperparameters.

    attacker_spec is normally left None and built per target as
    [d, 100, 100, latent_dim] with relu hidden units; pass an explicit spec to
    change the architecture (its sizes must match the target generator).
    """

    attacker_spec: NetworkSpec | None = None
    iterations: int = 1000
    restarts: int = 4
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    gradient_mode: str = "white_box"
    fd_step: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.restarts < 1:
            raise ValueError("iterations and restarts must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.learning_rate <= 0 or self.fd_step <= 0:
            raise ValueError("learning_rate and fd_step must be positive")


@dataclass
class AttackResult:
    loss: float
    per_restart_losses: list
    target_ids: list
    reconstruction: np.ndarray
    wall_time: float
    mode: str = "attacker_net"


def default_attacker_spec(data_dim: int, latent_dim: int) -> NetworkSpec:
    return NetworkSpec((data_dim, *DEFAULT_ATTACKER_HIDDEN, latent_dim))


def _decoder_view(generator) -> tuple[NetworkSpec, np.ndarray] | None:
    """(spec, params) of the differentiable generator surface, None if opaque."""
    if isinstance(generator, GeneratorModel):
        return generator.spec, generator.params
    if isinstance(generator, VaeModel):
        return generator.decoder_spec, generator.decoder_params
    return None


def _generator_callable(generator) -> Callable[[np.ndarray], np.ndarray]:
    view = _decoder_view(generator)
    if view is None:
        if not callable(generator):
            raise TypeError("generator must be a model or a callable z -> output")
        return generator
    spec, params = view
    return lambda z: forward(spec, params, z)[0]


def _as_targets(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("targets must be one vector or a nonempty (n, d) matrix")
    if not np.all(np.isfinite(xs)):
        raise ValueError("targets must be finite")
    return xs


def _check_dims(generator, attacker_spec: NetworkSpec | None, xs: np.ndarray) -> NetworkSpec:
    d = xs.shape[1]
    view = _decoder_view(generator)
    if view is not None:
        out_dim = view[0].output_size
        latent = view[0].input_size
        if out_dim != d:
            raise ValueError(f"target dimension {d} != generator output dimension {out_dim}")
        if attacker_spec is None:
            return default_attacker_spec(d, latent)
        if attacker_spec.input_size != d or attacker_spec.output_size != latent:
            raise ValueError("attacker_spec sizes must be [d, ..., latent_dim]")
        return attacker_spec
    if attacker_spec is None:
        raise ValueError("an explicit attacker_spec is required for an opaque generator")
    if attacker_spec.input_size != d:
        raise ValueError(f"attacker_spec input size must equal target dimension {d}")
    return attacker_spec


def _mean_l2(out: np.ndarray, xs: np.ndarray) -> float:
    return float(np.mean(np.sqrt(np.sum((out - xs) ** 2, axis=1))))


def whitebox_loss_and_grad(generator, attacker_spec: NetworkSpec, attacker_params: np.ndarray,
                           xs) -> tuple[float, np.ndarray]:
    """Mean L2 attack loss and its analytic gradient over the attacker params."""
    xs = _as_targets(xs)
    view = _decoder_view(generator)
    if view is None:
        raise TypeError("white-box gradients need a differentiable generator model")
    gen_spec, gen_params = view
    n = xs.shape[0]
    z, atk_tape = forward(attacker_spec, attacker_params, xs)
    out, gen_tape = forward(gen_spec, gen_params, z)
    diff = out - xs
    norms = np.sqrt(np.sum(diff * diff, axis=1))
    # d(mean_i ||diff_i||)/d(out_i) = diff_i / (n ||diff_i||); 0 at an exact hit
    safe = np.where(norms > 0.0, norms, 1.0)
    gout = diff / (n * safe[:, None])
    _, dz = backward(gen_spec, gen_params, gen_tape, gout)
    grad, _ = backward(attacker_spec, attacker_params, atk_tape, dz)
    return float(np.mean(norms)), grad


def blackbox_loss_and_grad(generator, attacker_spec: NetworkSpec, attacker_params: np.ndarray,
                           xs, fd_step: float) -> tuple[float, np.ndarray]:
    """Forward-difference gradient of the attack loss over opaque generator queries.

    Uses exactly len(attacker_params) + 1 generator evaluations.
    """
    xs = _as_targets(xs)
    gen_fn = _generator_callable(generator)

    def loss_at(gamma: np.ndarray) -> float:
        z, _ = forward(attacker_spec, gamma, xs)
        return _mean_l2(np.asarray(gen_fn(z), dtype=np.float64), xs)

    base = loss_at(attacker_params)
    grad = np.empty_like(attacker_params)
    for i in range(attacker_params.size):
        bumped = attacker_params.copy()
        bumped[i] += fd_step
        grad[i] = (loss_at(bumped) - base) / fd_step
    return base, grad


def _make_stepper(cfg: AttackConfig, num_params: int):
    if cfg.optimizer == "adam":
        state = AdamState.fresh(num_params, learning_rate=cfg.learning_rate)

        def step(params, grad):
            nonlocal state
            params, state = adam_step(params, grad, state)
            return params

        return step
    return lambda params, grad: sgd_step(params, grad, cfg.learning_rate)


def _run_restart(generator, attacker_spec: NetworkSpec, gamma: np.ndarray, xs: np.ndarray,
                 cfg: AttackConfig) -> tuple[float, np.ndarray] | None:
    """One restart: optimize gamma in place, return (true loss, reconstruction).

    White-box mode descends the squared distance (same minimizer, far better
    conditioned near zero); black-box mode follows the finite-difference
    gradient of the plain distance. Returns None if the restart hit a
    non-finite value.
    """
    view = _decoder_view(generator)
    n = xs.shape[0]
    reg = attacker_spec.l2_reg_coeff
    step = _make_stepper(cfg, gamma.size)
    for _ in range(cfg.iterations):
        if cfg.gradient_mode == "white_box":
            gen_spec, gen_params = view
            z, atk_tape = forward(attacker_spec, gamma, xs)
            out, gen_tape = forward(gen_spec, gen_params, z)
            diff = out - xs
            objective = float(np.mean(np.sum(diff * diff, axis=1)))
            _, dz = backward(gen_spec, gen_params, gen_tape, 2.0 * diff / n)
            grad, _ = backward(attacker_spec, gamma, atk_tape, dz)
        else:
            objective, grad = blackbox_loss_and_grad(
                generator, attacker_spec, gamma, xs, cfg.fd_step
            )
        if reg > 0.0:
            objective += reg * float(gamma @ gamma)
            grad = grad + 2.0 * reg * gamma
        if not np.isfinite(objective):
            return None
        gamma = step(gamma, grad)
    gen_fn = _generator_callable(generator)
    z, _ = forward(attacker_spec, gamma, xs)
    out = np.asarray(gen_fn(z), dtype=np.float64)
    loss = _mean_l2(out, xs)
    if not np.isfinite(loss):
        return None
    return loss, out


def attack_co(generator, xs, cfg: AttackConfig, target_ids=None) -> AttackResult:
    """Co-attack: one attacker net optimized on the group's mean reconstruction loss.

    The generator is read-only. Each restart reinitializes the attacker from
    derive_seed(cfg.seed, "restart", r), so runs with a shared seed use the
    same schedule regardless of group size.
    """
    start = time.perf_counter()
    xs = _as_targets(xs)
    attacker_spec = _check_dims(generator, cfg.attacker_spec, xs)
    if cfg.gradient_mode == "white_box" and _decoder_view(generator) is None:
        raise TypeError("white-box attacks need a differentiable generator model")
    per_restart = []
    best_loss = np.inf
    best_out = None
    for r in range(cfg.restarts):
        gamma = init_params(attacker_spec, derive_seed(cfg.seed, "restart", r))
        outcome = _run_restart(generator, attacker_spec, gamma, xs, cfg)
        if outcome is None:
            per_restart.append(np.inf)
            continue
        loss, out = outcome
        per_restart.append(loss)
        if loss < best_loss:
            best_loss, best_out = loss, out
    if best_out is None:
        raise AttackFailedError(f"all {cfg.restarts} restarts hit non-finite losses")
    ids = list(target_ids) if target_ids is not None else list(range(xs.shape[0]))
    return AttackResult(
        loss=best_loss,
        per_restart_losses=per_restart,
        target_ids=ids,
        reconstruction=best_out,
        wall_time=time.perf_counter() - start,
    )


def attack_single(generator, x, cfg: AttackConfig, target_id=None) -> AttackResult:
    """Single-instance attack; identical trajectory to a one-element co-attack."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("attack_single takes one target vector; use attack_co for groups")
    ids = None if target_id is None else [target_id]
    result = attack_co(generator, x[None, :], cfg, target_ids=ids)
    result.reconstruction = result.reconstruction[0]
    return result


def attack_direct_projection(generator, x, cfg: AttackConfig, target_id=None) -> AttackResult:
    """Baseline: optimize the latent code itself; cannot attack groups."""
    start = time.perf_counter()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("direct projection cannot attack a group")
    view = _decoder_view(generator)
    if view is None:
        raise TypeError("direct projection needs a generator model")
    gen_spec, gen_params = view
    if gen_spec.output_size != x.size:
        raise ValueError("target dimension must equal generator output dimension")
    latent = gen_spec.input_size
    prior = getattr(generator, "latent_prior", "standard_normal")
    xs = x[None, :]
    per_restart = []
    best_loss = np.inf
    best_out = None
    for r in range(cfg.restarts):
        rng = rng_from(cfg.seed, "restart", r)
        z = latent_sample(prior, rng, 1, latent)
        step = _make_stepper(cfg, z.size)
        failed = False
        for _ in range(cfg.iterations):
            out, tape = forward(gen_spec, gen_params, z)
            diff = out - xs
            if not np.isfinite(diff).all():
                failed = True
                break
            _, dz = backward(gen_spec, gen_params, tape, 2.0 * diff)
            z = step(z.ravel(), dz.ravel()).reshape(1, latent)
        if failed:
            per_restart.append(np.inf)
            continue
        out, _ = forward(gen_spec, gen_params, z)
        loss = _mean_l2(out, xs)
        if not np.isfinite(loss):
            per_restart.append(np.inf)
            continue
        per_restart.append(loss)
        if loss < best_loss:
            best_loss, best_out = loss, out[0]
    if best_out is None:
        raise AttackFailedError(f"all {cfg.restarts} restarts hit non-finite losses")
    return AttackResult(
        loss=best_loss,
        per_restart_losses=per_restart,
        target_ids=[target_id if target_id is not None else 0],
        reconstruction=best_out,
        wall_time=time.perf_counter() - start,
        mode="direct_projection",
    )


def attack_nearest_neighbor(generated_pool, x) -> float:
    """Minimum L2 distance from x to any row of the generated pool."""
    pool = np.asarray(generated_pool, dtype=np.float64)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise ValueError("generated pool must be a nonempty (m, d) matrix")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (pool.shape[1],):
        raise ValueError("target dimension must match the pool")
    return float(np.min(np.sqrt(np.sum((pool - x) ** 2, axis=1))))


def decide_membership(loss: float, threshold: float) -> bool:
    """Member iff loss is strictly below the threshold."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return bool(loss < threshold)


def format_attack_row(group_id, n: int, true_membership, result: AttackResult,
                      cfg: AttackConfig) -> str:
    """One CSV line per attack outcome; membership empty when unknown."""
    member = "" if true_membership is None else str(int(bool(true_membership)))
    return (f"{group_id},{n},{member},{result.loss!r},"
            f"{cfg.restarts},{cfg.iterations},{result.mode}")
