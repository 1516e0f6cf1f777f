import logging
from dataclasses import dataclass, field

import numpy as np

from forecast.exceptions import GradientMissingError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, param, **hyper):
        return cls(
            m=np.zeros_like(param.data), v=np.zeros_like(param.data), **hyper
        )


def adam_step(param, state):
    """Bias-corrected Adam update in place; the gradient is consumed."""
    if param.grad is None:
        raise GradientMissingError(
            f"parameter {param.name or param.shape!r} has no gradient"
        )
    grad = param.grad
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.data = param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    param.grad = None
    return param, state


@dataclass
class Adam:
    params: dict
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = dict(self.params)
        for name, param in self.params.items():
            self.states[name] = AdamState.for_param(
                param, lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps
            )

    def zero_grad(self):
        for param in self.params.values():
            param.grad = None

    def step(self):
        # parameters untouched by the current loss keep their moments
        for name, param in self.params.items():
            if param.grad is not None:
                adam_step(param, self.states[name])
