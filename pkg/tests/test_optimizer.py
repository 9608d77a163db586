import numpy as np

from lureid.trainer import AdamMoments, adam_update


def test_first_step_is_signed_learning_rate():
    """With bias correction the first step is -lr * sign(g)."""
    g = np.array([3.0, -0.2, 1e-3])
    step, moments = adam_update(AdamMoments.zeros(3), g, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
    np.testing.assert_allclose(step, -0.01 * np.sign(g), rtol=1e-4)
    assert moments.t == 1


def test_zero_gradient_gives_zero_step():
    """Nothing moves without a gradient."""
    step, _ = adam_update(AdamMoments.zeros(4), np.zeros(4), lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    assert not step.any()


def test_moments_are_not_modified():
    """The caller decides whether to commit the new moments."""
    moments = AdamMoments.zeros(2)
    adam_update(moments, np.ones(2), lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    assert moments.t == 0
    assert not moments.m.any()


def test_converges_on_quadratic():
    """Minimizing (x - eta)^2 ends near eta."""
    eta = np.array([1.5, -2.0])
    x = np.zeros(2)
    moments = AdamMoments.zeros(2)
    for _ in range(5000):
        step, moments = adam_update(moments, 2 * (x - eta), lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
        x = x + step
    np.testing.assert_allclose(x, eta, atol=0.05)
