"""Optimizers over flat parameter vectors: Adam, plain gradient descent, clipping."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step", "sgd_step", "clip_weights", "DivergenceError"]


class DivergenceError(RuntimeError):
    """Raised when an optimization step receives non-finite gradients."""


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for one Adam-optimized vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, num_params: int, learning_rate: float = 1e-3, **kw) -> "AdamState":
        return cls(
            first_moment=np.zeros(num_params),
            second_moment=np.zeros(num_params),
            learning_rate=learning_rate,
            **kw,
        )

    def __post_init__(self):
        if self.first_moment.shape != self.second_moment.shape:
            raise ValueError("moment arrays must have matching shapes")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.step_count < 0:
            raise ValueError("step_count must be nonnegative")


def adam_step(
    params: np.ndarray, grads: np.ndarray, state: AdamState
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Pure: returns new params and new state."""
    grads = np.asarray(grads)
    if grads.shape != params.shape or grads.shape != state.first_moment.shape:
        raise ValueError("params, grads and Adam moments must share one shape")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError("non-finite gradient passed to adam_step")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        first_moment=m,
        second_moment=v,
        step_count=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_params, new_state


def sgd_step(params: np.ndarray, grads: np.ndarray, learning_rate: float) -> np.ndarray:
    """Plain gradient-descent update."""
    grads = np.asarray(grads)
    if grads.shape != params.shape:
        raise ValueError("params and grads must share one shape")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError("non-finite gradient passed to sgd_step")
    return params - learning_rate * grads


def clip_weights(params: np.ndarray, c: float) -> np.ndarray:
    """Clamp every component into [-c, c] (WGAN Lipschitz constraint)."""
    if c <= 0:
        raise ValueError("clip constant must be positive")
    return np.clip(params, -c, c)
