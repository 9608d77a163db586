from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass
class AdamMoments:
    """First and second moment estimates over the flattened training variable."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamMoments":
        """Moments at the start of training."""
        return cls(m=np.zeros(size), v=np.zeros(size), t=0)

    def copy(self) -> "AdamMoments":
        """Deep copy."""
        return AdamMoments(m=self.m.copy(), v=self.v.copy(), t=self.t)


def adam_update(
    moments: AdamMoments, gradient: np.ndarray, lr: float, beta1: float, beta2: float, eps: float
) -> Tuple[np.ndarray, AdamMoments]:
    """One Adam step with bias correction.

    The moments are not modified; the caller commits the returned ones once the step is accepted.

    Args:
        moments (AdamMoments): current estimates
        gradient (np.ndarray): flattened gradient
        lr (float): learning rate
        beta1 (float): decay of the first moment
        beta2 (float): decay of the second moment
        eps (float): added to the denominator

    Returns:
        (step to add to the variable, updated moments)
    """
    t = moments.t + 1
    m = beta1 * moments.m + (1.0 - beta1) * gradient
    v = beta2 * moments.v + (1.0 - beta2) * gradient * gradient
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    step = -lr * m_hat / (np.sqrt(v_hat) + eps)
    return step, AdamMoments(m=m, v=v, t=t)
