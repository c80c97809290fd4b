import numpy as np

from harfusion.core.exceptions import ShapeMismatchError
from harfusion.nn.layers import softmax


PROB_FLOOR = 1e-12

__all__ = ["PROB_FLOOR", "softmax", "cross_entropy", "l2_penalty", "loss", "cross_entropy_grad"]


def _check_labels(probs: np.ndarray, labels: np.ndarray) -> None:
    if probs.ndim != 2 or len(labels) != len(probs):
        raise ShapeMismatchError("loss", (probs.shape, labels.shape), "N×C probabilities with N labels")


def cross_entropy(probs: np.ndarray, labels, reduction: str = "sum") -> float:
    """
    Negative log-likelihood of the true classes, probabilities clamped at 1e-12.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(probs, labels)
    picked = np.clip(probs[np.arange(len(labels)), labels], PROB_FLOOR, None)
    total = float(-np.sum(np.log(picked)))
    return total / max(len(labels), 1) if reduction == "mean" else total


def l2_penalty(weights: list[np.ndarray], l2_lambda: float) -> float:
    return float(l2_lambda * sum(float(np.sum(w * w)) for w in weights))


def loss(
    probs: np.ndarray,
    labels,
    weights: list[np.ndarray] | None = None,
    l2_lambda: float = 0.0,
    reduction: str = "sum",
) -> float:
    """
    Regularized cross-entropy.

    L = -Σ_n log P(y_n | X_n) + λ Σ w² over weight tensors (biases excluded).
    With reduction "mean" the data term is divided by N; the penalty is not.

    :param probs: np.ndarray
        N×C predicted distributions.
    :param labels: array-like
        N true class indices.
    :param weights: list[np.ndarray] | None, optional
        Weight tensors to regularize.
    :param l2_lambda: float, optional
        Regularization coefficient λ.
    :param reduction: str, optional
        "sum" or "mean" of the data term.
    :return: float
        The loss value.
    """
    return cross_entropy(probs, labels, reduction) + l2_penalty(weights or [], l2_lambda)


def cross_entropy_grad(probs: np.ndarray, labels, reduction: str = "sum") -> np.ndarray:
    """
    Gradient of the data term with respect to the softmax scores: P - onehot(y).
    """
    labels = np.asarray(labels, dtype=np.int64)
    grad = np.array(probs, dtype=np.float64, copy=True)
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / max(len(labels), 1) if reduction == "mean" else grad
