"""Tests for the attacker network, co-attacks, baselines, and black-box mode."""
import numpy as np
import pytest

from genleak.attacks import (
    ATTACK_CSV_HEADER,
    AttackConfig,
    AttackFailedError,
    attack_co,
    attack_direct_projection,
    attack_nearest_neighbor,
    attack_single,
    blackbox_loss_and_grad,
    decide_membership,
    default_attacker_spec,
    format_attack_row,
    whitebox_loss_and_grad,
)
from genleak.models import GeneratorModel, VaeModel
from genleak.nets import NetworkSpec, forward, init_params, param_count, unpack_params


def identity_generator(d):
    spec = NetworkSpec((d, d))
    params = np.zeros(param_count(spec))
    unpack_params(spec, params)[0][0][:] = np.eye(d)
    return GeneratorModel(spec, params, latent_dim=d)


def constant_generator(c):
    c = np.asarray(c, dtype=np.float64)
    spec = NetworkSpec((2, c.size))
    params = np.zeros(param_count(spec))
    unpack_params(spec, params)[0][1][:] = c
    return GeneratorModel(spec, params, latent_dim=2)


def linear_generator(weight):
    k, d = weight.shape
    spec = NetworkSpec((k, d))
    params = np.zeros(param_count(spec))
    unpack_params(spec, params)[0][0][:] = weight
    return GeneratorModel(spec, params, latent_dim=k)


# -- config and result contracts ------------------------------------------------

def test_attack_config_defaults_and_validation():
    cfg = AttackConfig()
    assert cfg.iterations == 1000
    assert cfg.restarts == 4
    assert cfg.optimizer == "adam"
    assert cfg.learning_rate == 1e-3
    assert cfg.gradient_mode == "white_box"
    with pytest.raises(ValueError):
        AttackConfig(iterations=0)
    with pytest.raises(ValueError):
        AttackConfig(restarts=0)
    with pytest.raises(ValueError):
        AttackConfig(optimizer="lbfgs")
    with pytest.raises(ValueError):
        AttackConfig(gradient_mode="grey_box")
    with pytest.raises(ValueError):
        AttackConfig(fd_step=0.0)


def test_default_attacker_spec_shape():
    spec = default_attacker_spec(64, 16)
    assert spec.layer_sizes == (64, 100, 100, 16)
    assert spec.hidden_activation == "relu"
    assert spec.output_activation == "identity"


# -- identity-generator fixture ---------------------------------------------------

def test_attack_single_inverts_identity_generator():
    gen = identity_generator(4)
    rng = np.random.default_rng(0)
    before = gen.params.copy()
    for trial in range(2):
        x = rng.uniform(0.0, 1.0, 4)
        result = attack_single(gen, x, AttackConfig(seed=trial))
        assert result.loss <= 1e-3
        assert result.loss == min(result.per_restart_losses)
        assert len(result.per_restart_losses) == 4
        assert result.reconstruction.shape == (4,)
        assert np.allclose(result.reconstruction, x, atol=1e-2)
        assert result.wall_time > 0.0
    assert np.array_equal(gen.params, before)  # attacks never touch the model


def test_attack_co_group_of_eight():
    gen = identity_generator(4)
    xs = np.random.default_rng(3).uniform(0.0, 1.0, (8, 4))
    result = attack_co(gen, xs, AttackConfig(seed=5))
    assert result.loss <= 1e-2
    assert result.reconstruction.shape == (8, 4)
    assert result.target_ids == list(range(8))


def test_attack_co_n1_equals_attack_single():
    gen = identity_generator(3)
    x = np.array([0.2, 0.7, 0.4])
    cfg = AttackConfig(iterations=40, restarts=2, seed=9)
    single = attack_single(gen, x, cfg)
    co = attack_co(gen, x[None, :], cfg)
    assert single.loss == co.loss
    assert single.per_restart_losses == co.per_restart_losses
    assert np.array_equal(single.reconstruction, co.reconstruction[0])


def test_duplicate_group_equals_single():
    gen = identity_generator(3)
    x = np.array([0.9, 0.1, 0.5])
    cfg = AttackConfig(iterations=40, restarts=2, seed=4)
    single = attack_single(gen, x, cfg)
    trio = attack_co(gen, np.tile(x, (3, 1)), cfg)
    assert trio.loss == pytest.approx(single.loss, rel=1e-12, abs=1e-12)
    assert np.allclose(trio.reconstruction, np.tile(single.reconstruction, (3, 1)), atol=1e-12)


def test_restart_prefix_and_min_property():
    gen = identity_generator(3)
    x = np.array([0.3, 0.6, 0.8])
    one = attack_single(gen, x, AttackConfig(iterations=30, restarts=1, seed=2))
    four = attack_single(gen, x, AttackConfig(iterations=30, restarts=4, seed=2))
    assert four.per_restart_losses[0] == one.loss
    assert four.loss <= one.loss
    assert four.loss == min(four.per_restart_losses)


def test_constant_generator_loss_is_fixed_distance():
    c = np.array([0.5, 0.5, 0.5])
    gen = constant_generator(c)
    x = np.array([0.9, 0.5, 0.5])
    cfg = AttackConfig(iterations=20, restarts=3, seed=0)
    result = attack_single(gen, x, cfg)
    expected = float(np.linalg.norm(x - c))
    assert result.loss == pytest.approx(expected, abs=1e-12)
    assert all(l == pytest.approx(expected, abs=1e-12) for l in result.per_restart_losses)
    assert np.allclose(result.reconstruction, c, atol=1e-12)
    dp = attack_direct_projection(gen, x, cfg)
    assert dp.loss == pytest.approx(expected, abs=1e-12)


def test_attack_rejects_dimension_mismatch():
    gen = identity_generator(4)
    with pytest.raises(ValueError):
        attack_single(gen, np.zeros(3), AttackConfig(iterations=1))
    with pytest.raises(ValueError):
        attack_co(gen, np.zeros((2, 5)), AttackConfig(iterations=1))
    bad_spec = NetworkSpec((4, 10, 3))  # wrong output size for latent_dim 4
    with pytest.raises(ValueError):
        attack_single(gen, np.zeros(4), AttackConfig(attacker_spec=bad_spec, iterations=1))


def test_attack_on_vae_targets_decoder_only():
    dec = NetworkSpec((3, 3))
    dec_params = np.zeros(param_count(dec))
    unpack_params(dec, dec_params)[0][0][:] = np.eye(3)
    enc = NetworkSpec((3, 6))
    model = VaeModel(enc, init_params(enc, 0), dec, dec_params, latent_dim=3)
    x = np.array([0.4, 0.2, 0.6])
    result = attack_single(model, x, AttackConfig(iterations=400, restarts=2, seed=1))
    assert result.loss <= 1e-2


# -- direct projection -------------------------------------------------------------

def test_direct_projection_identity_generator():
    gen = identity_generator(4)
    x = np.array([0.2, 0.8, 0.5, 0.1])
    result = attack_direct_projection(gen, x, AttackConfig(seed=1, learning_rate=1e-2))
    assert result.loss <= 1e-4
    assert np.allclose(result.reconstruction, x, atol=1e-3)
    assert result.mode == "direct_projection"


def test_direct_projection_rejects_groups():
    gen = identity_generator(3)
    with pytest.raises(ValueError):
        attack_direct_projection(gen, np.zeros((2, 3)), AttackConfig(iterations=1))


def test_direct_projection_matches_least_squares_oracle():
    rng = np.random.default_rng(7)
    weight = rng.standard_normal((3, 6))
    gen = linear_generator(weight)
    x = rng.uniform(0.0, 1.0, 6)
    z_opt, *_ = np.linalg.lstsq(weight.T, x, rcond=None)
    oracle = float(np.linalg.norm(x - z_opt @ weight))
    result = attack_direct_projection(gen, x, AttackConfig(seed=2, learning_rate=5e-2))
    assert result.loss == pytest.approx(oracle, abs=1e-8)


# -- black-box mode ------------------------------------------------------------------

def test_blackbox_matches_whitebox_gradient():
    gen = identity_generator(3)
    atk = NetworkSpec((3, 4, 3))
    assert param_count(atk) <= 50
    rng = np.random.default_rng(0)
    for seed in range(3):
        gamma = init_params(atk, seed)
        x = rng.uniform(0.0, 1.0, (1, 3))
        white_loss, white_grad = whitebox_loss_and_grad(gen, atk, gamma, x)
        black_loss, black_grad = blackbox_loss_and_grad(gen, atk, gamma, x, 1e-4)
        assert black_loss == pytest.approx(white_loss, abs=1e-12)
        rel = np.abs(black_grad - white_grad) / (np.abs(white_grad) + 1e-12)
        assert rel.max() <= 5e-2


def test_blackbox_generator_evaluation_count():
    atk = NetworkSpec((2, 3, 2))
    gamma = init_params(atk, 1)
    calls = []

    def counting_gen(z):
        calls.append(1)
        return np.asarray(z)

    blackbox_loss_and_grad(counting_gen, atk, gamma, np.array([[0.5, 0.5]]), 1e-3)
    assert len(calls) == gamma.size + 1


def test_blackbox_constant_generator_zero_gradient():
    gen = constant_generator(np.array([0.3, 0.7]))
    atk = NetworkSpec((2, 3, 2))
    gamma = init_params(atk, 2)
    loss, grad = blackbox_loss_and_grad(gen, atk, gamma, np.array([[0.1, 0.1]]), 1e-3)
    assert loss == pytest.approx(np.linalg.norm([0.2, 0.6]), abs=1e-12)
    assert np.all(grad == 0.0)


def test_blackbox_exact_on_affine_composition():
    # 1-D identity generator and a single affine attacker layer keep the
    # distance locally affine in gamma, so forward differences are exact
    gen = identity_generator(1)
    atk = NetworkSpec((1, 1))
    gamma = np.array([2.0, 0.5])  # w=2, b=0.5
    x = np.array([[1.0]])
    loss, grad = blackbox_loss_and_grad(gen, atk, gamma, x, 1e-3)
    assert loss == pytest.approx(1.5, abs=1e-12)
    assert grad[0] == pytest.approx(1.0, abs=1e-9)  # d|wx+b-x|/dw = x
    assert grad[1] == pytest.approx(1.0, abs=1e-9)


def test_blackbox_attack_runs_on_opaque_callable():
    atk = NetworkSpec((2, 3, 2))
    cfg = AttackConfig(attacker_spec=atk, iterations=60, restarts=1, seed=0,
                       gradient_mode="black_box", learning_rate=1e-2)
    result = attack_co(lambda z: np.asarray(z), np.array([[0.4, 0.6]]), cfg)
    assert np.isfinite(result.loss)
    assert result.loss < np.linalg.norm([0.4, 0.6])  # beats the zero attacker


def test_whitebox_mode_rejects_opaque_generator():
    atk = NetworkSpec((2, 3, 2))
    cfg = AttackConfig(attacker_spec=atk, iterations=1)
    with pytest.raises(TypeError):
        attack_co(lambda z: z, np.array([[0.4, 0.6]]), cfg)
    with pytest.raises(ValueError):
        # opaque generator without an explicit attacker spec
        attack_co(lambda z: z, np.array([[0.4, 0.6]]),
                  AttackConfig(iterations=1, gradient_mode="black_box"))


# -- failure handling ------------------------------------------------------------------

def test_failed_restarts_excluded_from_min():
    atk = NetworkSpec((2, 3, 2))
    x = np.array([[0.4, 0.6]])

    def flaky(z):
        out = np.array(z, dtype=float, copy=True)
        out[z[:, 0] < 0.0] = np.nan
        return out

    cfg = AttackConfig(attacker_spec=atk, iterations=3, restarts=4, seed=2,
                       gradient_mode="black_box")
    result = attack_co(flaky, x, cfg)
    assert np.isinf(result.per_restart_losses[3])
    finite = [l for l in result.per_restart_losses if np.isfinite(l)]
    assert len(finite) == 3
    assert result.loss == min(finite)


def test_all_restarts_failing_is_an_error():
    atk = NetworkSpec((2, 3, 2))
    cfg = AttackConfig(attacker_spec=atk, iterations=2, restarts=3, seed=0,
                       gradient_mode="black_box")
    with pytest.raises(AttackFailedError):
        attack_co(lambda z: np.full_like(np.asarray(z), np.nan),
                  np.array([[0.4, 0.6]]), cfg)


# -- plain GD option ----------------------------------------------------------------

def test_plain_gd_optimizer_reduces_loss():
    gen = identity_generator(3)
    x = np.array([0.3, 0.5, 0.7])
    atk_spec = default_attacker_spec(3, 3)
    gamma0 = init_params(atk_spec, 0)
    z0, _ = forward(atk_spec, gamma0, x[None, :])
    out0, _ = forward(gen.spec, gen.params, z0)
    initial = float(np.linalg.norm(out0[0] - x))
    cfg = AttackConfig(iterations=200, restarts=1, seed=0, optimizer="plain_gd",
                       learning_rate=0.05)
    result = attack_single(gen, x, cfg)
    assert result.loss < initial


# -- nearest neighbor ----------------------------------------------------------------

def test_nearest_neighbor_examples():
    pool = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert attack_nearest_neighbor(pool, np.array([1.0, 1.0])) == 0.0
    assert attack_nearest_neighbor(pool, np.array([0.9, 0.9])) == pytest.approx(
        np.sqrt(0.02), abs=1e-12
    )
    with pytest.raises(ValueError):
        attack_nearest_neighbor(np.empty((0, 2)), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        attack_nearest_neighbor(pool, np.array([0.0, 0.0, 0.0]))


def test_nearest_neighbor_matches_linear_scan_oracle():
    rng = np.random.default_rng(12)
    pool = rng.uniform(0.0, 1.0, (40, 5))
    x = rng.uniform(0.0, 1.0, 5)
    oracle = min(float(np.linalg.norm(row - x)) for row in pool)
    assert attack_nearest_neighbor(pool, x) == pytest.approx(oracle, abs=1e-15)


# -- membership decision ----------------------------------------------------------------

def test_decide_membership_is_strict():
    assert decide_membership(0.1, 0.2) is True
    assert decide_membership(0.2, 0.2) is False
    assert decide_membership(0.3, 0.2) is False
    with pytest.raises(ValueError):
        decide_membership(0.1, np.inf)


# -- CSV emission ----------------------------------------------------------------

def test_attack_csv_row_format():
    gen = identity_generator(2)
    cfg = AttackConfig(iterations=5, restarts=2, seed=0)
    result = attack_single(gen, np.array([0.25, 0.75]), cfg)
    row = format_attack_row("g7", 1, True, result, cfg)
    fields = row.split(",")
    assert ATTACK_CSV_HEADER.count(",") == row.count(",")
    assert fields[0] == "g7"
    assert fields[1] == "1"
    assert fields[2] == "1"
    assert float(fields[3]) == result.loss
    assert fields[4] == "2"
    assert fields[5] == "5"
    assert fields[6] == "attacker_net"
    assert format_attack_row(3, 8, None, result, cfg).split(",")[2] == ""
