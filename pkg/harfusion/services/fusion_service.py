import logging

import numpy as np

from harfusion.core.exceptions import InvalidParameterError, NonFiniteInputError
from harfusion.schemas.fusion import Decision, FusionInput, FusionMethod, ProbDist


logger = logging.getLogger(__name__)


def fuse_max(fi: FusionInput) -> np.ndarray:
    return fi.matrix.max(axis=0)


def fuse_avg(fi: FusionInput) -> np.ndarray:
    return fi.matrix.mean(axis=0)


def informativity(p: ProbDist | np.ndarray, k: int | None = None) -> float:
    """
    Confidence weight of one distribution from its top-K candidates.

    The K largest probabilities are renormalized to sum 1, then
    γ = Σ p_k log p_k / log K + 1 with 0·log 0 = 0, clamped to [0, 1].
    γ is exactly 0 for a uniform top-K and exactly 1 for a one-hot top-1.
    The ratio of logs makes it independent of the logarithm base.

    :param p: ProbDist | np.ndarray
        Class distribution.
    :param k: int | None, optional
        Number of candidates; defaults to the class count.
    :raises InvalidParameterError:
        If K < 2 or K exceeds the class count.
    :return: float
        Informativity in [0, 1].
    """
    probs = p.p if isinstance(p, ProbDist) else np.asarray(p, dtype=np.float64)
    k = probs.size if k is None else int(k)
    if k < 2 or k > probs.size:
        raise InvalidParameterError("K", f"must lie in [2, {probs.size}], got {k}")
    top = np.sort(probs)[::-1][:k]
    total = top.sum()
    if total <= 0:
        return 0.0
    top = top / total
    if np.all(top == top[0]):
        return 0.0
    if top[1] == 0.0:
        return 1.0
    nonzero = top[top > 0]
    gamma = float(np.sum(nonzero * np.log(nonzero)) / np.log(k) + 1.0)
    return min(max(gamma, 0.0), 1.0)


def fuse_weighted(fi: FusionInput, mode: str = "avg", k: int | None = None) -> np.ndarray:
    """
    Informativity-weighted max or average; scores are not renormalized.
    """
    weights = np.array([informativity(d, k) for d in fi.dists])
    weighted = weights[:, None] * fi.matrix
    if mode == "max":
        return weighted.max(axis=0)
    if mode == "avg":
        return weighted.mean(axis=0)
    raise InvalidParameterError("mode", f"expected 'max' or 'avg', got {mode!r}")


def decide(scores: np.ndarray) -> Decision:
    """
    Lowest-index argmax; `tie` records that another class shares the maximum.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteInputError("fusion scores")
    index = int(np.argmax(scores))
    tie = int(np.count_nonzero(scores == scores[index])) > 1
    return Decision(index=index, tie=tie)


class FusionService:
    """
    Applies one fusion strategy to per-modality probabilities.
    """

    @staticmethod
    def fuse(fi: FusionInput, method: FusionMethod, k: int | None = None) -> np.ndarray:
        if method is FusionMethod.max:
            return fuse_max(fi)
        if method is FusionMethod.avg:
            return fuse_avg(fi)
        return fuse_weighted(fi, "max" if method is FusionMethod.wmax else "avg", k)

    @staticmethod
    def fuse_many(
        probabilities: list[np.ndarray],
        method: FusionMethod,
        k: int | None = None,
        modalities: list[str] | None = None,
    ) -> tuple[np.ndarray, list[Decision]]:
        """
        Fuse aligned N×C probability arrays sample by sample.

        :param probabilities: list[np.ndarray]
            One N×C array per modality, rows aligned by sample.
        :param method: FusionMethod
            Fusion strategy.
        :param k: int | None, optional
            Top-K for the weighted strategies.
        :param modalities: list[str] | None, optional
            Modality names kept in each FusionInput.
        :return: tuple[np.ndarray, list[Decision]]
            N×C fused scores and one decision per sample.
        """
        stacked = np.stack([np.asarray(p, dtype=np.float64) for p in probabilities], axis=1)
        scores, decisions = [], []
        for row in stacked:
            fi = FusionInput(dists=[ProbDist(p=p) for p in row], modalities=modalities or [])
            fused = FusionService.fuse(fi, method, k)
            scores.append(fused)
            decisions.append(decide(fused))
        ties = sum(d.tie for d in decisions)
        if ties:
            logger.warning(f"{ties} of {len(decisions)} {method.value} decisions were ties, resolved to the lowest class.")
        return np.array(scores).reshape(len(stacked), -1), decisions
