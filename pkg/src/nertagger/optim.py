"""Momentum SGD with annealed Gaussian gradient noise."""
import numpy as np

from .errors import ConfigError, StateError


class NoisySGD:
    """Classical momentum SGD whose gradients are perturbed by annealed noise.

    At step ``t`` (counted from 0) each gradient entry receives independent
    ``N(0, sigma_t**2)`` noise with ``sigma_t**2 = eta / (1 + t)**gamma``,
    *before* it enters the velocity::

        g = grad + noise
        v = momentum * v + g
        param -= lr * v

    Parameters
    ----------
    params : sequence of Tensor or (name, Tensor)
    lr : float
    momentum : float
        In ``[0, 1)``.
    eta : float
        Noise scale; 0 disables noise and draws nothing from ``rng``.
    gamma : float
        Annealing exponent.
    rng : numpy.random.Generator, optional
        Required when ``eta > 0``.
    clip : float, optional
        If set, rescale the raw gradients so their global L2 norm is at most
        ``clip`` (applied before the noise).
    """

    def __init__(self, params, lr=0.005, momentum=0.9, eta=0.0, gamma=0.55, rng=None,
                 clip=None):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
        if eta < 0:
            raise ConfigError(f"noise scale eta must be >= 0, got {eta}")
        if gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {gamma}")
        if clip is not None and clip <= 0:
            raise ConfigError(f"clip must be positive, got {clip}")
        if eta > 0 and rng is None:
            raise ConfigError("gradient noise needs a random generator")
        self.params = [p[1] if isinstance(p, tuple) else p for p in params]
        self.lr = lr
        self.momentum = momentum
        self.eta = eta
        self.gamma = gamma
        self.rng = rng
        self.clip = clip
        self.t = 0
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def noise_std(self, t=None):
        """``sqrt(eta / (1 + t)**gamma)`` at step ``t`` (default: current)."""
        t = self.t if t is None else t
        return float(np.sqrt(self.eta / (1.0 + t) ** self.gamma))

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        for k, p in enumerate(self.params):
            if p.grad is None:
                raise StateError(f"parameter {k} (shape {p.shape}) has no gradient")
        grads = [p.grad for p in self.params]
        if self.clip is not None:
            norm = np.sqrt(float(sum(np.vdot(g, g) for g in grads)))
            if norm > self.clip:
                grads = [g * (self.clip / norm) for g in grads]
        sigma = self.noise_std() if self.eta > 0 else 0.0
        for p, v, g in zip(self.params, self.velocity, grads):
            if sigma > 0:
                g = g + self.rng.normal(0.0, sigma, size=g.shape)
            v *= self.momentum
            v += g
            p.data -= self.lr * v
        self.t += 1
