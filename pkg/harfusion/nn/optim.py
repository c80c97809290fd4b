import numpy as np


class SGD:
    """
    Stochastic gradient descent with classical momentum.

    velocity <- momentum · velocity - lr · grad; param <- param + velocity.
    Parameters are updated in place.
    """

    def __init__(self, params: list[np.ndarray], lr: float = 0.001, momentum: float = 0.9):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        for param, velocity, grad in zip(self.params, self.velocity, grads):
            velocity *= self.momentum
            velocity -= self.lr * grad
            param += velocity
