"""genleak: a desk-scale lab for auditing membership privacy of generative models.

Train small GANs/VAEs, invert their generators with attacker networks, and
measure attack success, generalization gap and sample dispersion.
"""

__version__ = "0.1.0"

from .attacks import (  # noqa: F401
    AttackConfig,
    AttackFailedError,
    AttackResult,
    attack_co,
    attack_direct_projection,
    attack_nearest_neighbor,
    attack_single,
    decide_membership,
    default_attacker_spec,
)
from .metrics import (  # noqa: F401
    EFFECTIVE_AUC_THRESHOLD,
    DispersionResult,
    GapReport,
    RocReport,
    adversarial_sampling,
    dispersion_exact,
    dispersion_greedy,
    dispersion_profile,
    generalization_gap,
    learning_curve,
    roc_and_auc,
)
from .models import (  # noqa: F401
    GanTrainConfig,
    GanTrainer,
    GeneratorModel,
    TrainingDivergedError,
    VaeModel,
    VaeTrainConfig,
    sample_generator,
    train_gan_vanilla,
    train_vae,
    train_wgan,
)
from .nets import (  # noqa: F401
    NetworkSpec,
    Tape,
    backward,
    finite_diff_grad,
    forward,
    init_params,
    l2_distance,
    param_count,
)
from .optim import AdamState, DivergenceError, adam_step, clip_weights, sgd_step  # noqa: F401
from .seeding import derive_seed, rng_from  # noqa: F401
