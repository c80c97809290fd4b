import logging
import math
from itertools import combinations

import numpy as np

from harfusion.core.exceptions import EmptyMatrixError, LengthMismatchError, ProtocolError
from harfusion.schemas.evaluation import (
    ClassMetrics,
    ConfusionMatrix,
    Fold,
    FoldMetrics,
    FoldPrediction,
    GridRow,
    MetricReport,
    ProtocolName,
)
from harfusion.schemas.fusion import FusionMethod
from harfusion.schemas.imu import Dataset
from harfusion.services.fusion_service import FusionService


logger = logging.getLogger(__name__)

SINGLE = "-"


def confusion(preds, truths, classes: int) -> ConfusionMatrix:
    """
    C×C counts with rows indexed by ground truth and columns by prediction.
    """
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    truths = np.asarray(truths, dtype=np.int64).reshape(-1)
    if len(preds) != len(truths):
        raise LengthMismatchError(len(preds), len(truths))
    counts = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts=counts)


def _ratio(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den > 0 else (0.0, True)


def metrics(cm: ConfusionMatrix, class_names: list[str] | None = None) -> MetricReport:
    """
    Accuracy, per-class and macro precision/recall/F1 of a confusion matrix.

    A 0/0 precision or recall is reported as 0 and listed in `zero_division`
    (e.g. "precision:RA"). F1 is 0 when precision and recall are both 0.

    :param cm: ConfusionMatrix
        Counts to summarize.
    :param class_names: list[str] | None, optional
        Names for the per-class rows; indices when omitted.
    :raises EmptyMatrixError:
        If the matrix holds no samples.
    :return: MetricReport
        Metrics with macro averages as headline.
    """
    if cm.total == 0:
        raise EmptyMatrixError()
    names = class_names or [str(c) for c in range(cm.classes)]
    counts = cm.counts
    per_class, flags = [], []
    for c, name in enumerate(names):
        tp = counts[c, c]
        precision, p_zero = _ratio(tp, counts[:, c].sum())
        recall, r_zero = _ratio(tp, counts[c, :].sum())
        if p_zero:
            flags.append(f"precision:{name}")
        if r_zero:
            flags.append(f"recall:{name}")
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(
            ClassMetrics(name=name, precision=precision, recall=recall, f1=f1, support=int(counts[c, :].sum()))
        )
    if flags:
        logger.warning(f"Zero division reported as 0 for {', '.join(flags)}.")
    return MetricReport(
        accuracy=float(np.trace(counts) / cm.total),
        macro_precision=float(np.mean([m.precision for m in per_class])),
        macro_recall=float(np.mean([m.recall for m in per_class])),
        macro_f1=float(np.mean([m.f1 for m in per_class])),
        per_class=per_class,
        zero_division=flags,
        confusion=counts.tolist(),
    )


def split_half_half(ds: Dataset, seed: int, stratified: bool = False) -> tuple[Dataset, Dataset]:
    """
    Seeded shuffle; the first ceil(N/2) windows train, the rest test.

    With `stratified` the rule is applied per class.
    """
    fold = half_half_fold(ds, seed, stratified)
    return ds.subset(fold.train), ds.subset(fold.test)


def half_half_fold(ds: Dataset, seed: int, stratified: bool = False) -> Fold:
    if len(ds) < 2:
        raise ProtocolError("hh", "at least two windows are needed")
    rng = np.random.default_rng(seed)
    if not stratified:
        order = rng.permutation(len(ds))
        cut = math.ceil(len(ds) / 2)
        return Fold(name="hh", train=sorted(order[:cut].tolist()), test=sorted(order[cut:].tolist()))
    train, test = [], []
    labels = ds.labels
    for c in range(len(ds.class_names)):
        members = rng.permutation(np.flatnonzero(labels == c))
        cut = math.ceil(len(members) / 2)
        train.extend(members[:cut].tolist())
        test.extend(members[cut:].tolist())
    return Fold(name="hh", train=sorted(train), test=sorted(test))


def leave_one_out_folds(ds: Dataset) -> list[Fold]:
    subjects = ds.window_subjects
    present = [s for s in ds.subjects if np.any(subjects == s)]
    if len(present) < 2:
        raise ProtocolError("loo", f"needs at least two subjects with windows, found {len(present)}")
    return [
        Fold(
            name=subject,
            train=np.flatnonzero(subjects != subject).tolist(),
            test=np.flatnonzero(subjects == subject).tolist(),
        )
        for subject in present
    ]


def split_leave_one_out(ds: Dataset) -> list[tuple[Dataset, Dataset]]:
    """
    One fold per subject whose windows form the test set.
    """
    return [(ds.subset(f.train), ds.subset(f.test)) for f in leave_one_out_folds(ds)]


def subsample(indices: list[int], fraction: float, seed: int) -> list[int]:
    """
    Seeded subset of ceil(fraction · n) indices, kept in ascending order.
    """
    if fraction >= 1.0 or not indices:
        return list(indices)
    keep = max(1, math.ceil(fraction * len(indices)))
    chosen = np.random.default_rng(seed).choice(len(indices), size=keep, replace=False)
    return [indices[i] for i in sorted(chosen.tolist())]


def modality_subsets(modalities: list[str], grid: bool) -> list[list[str]]:
    """
    Every non-empty subset, smallest first, when `grid` is set; otherwise the full set only.
    """
    if not grid:
        return [list(modalities)]
    return [list(c) for size in range(1, len(modalities) + 1) for c in combinations(modalities, size)]


class EvaluationService:
    """
    Scores fold predictions under the half-half and leave-one-out protocols.
    """

    @staticmethod
    def folds(ds: Dataset, protocol: ProtocolName, seed: int, stratified: bool = False) -> list[Fold]:
        if protocol is ProtocolName.hh:
            return [half_half_fold(ds, seed, stratified)]
        return leave_one_out_folds(ds)

    @staticmethod
    def fold_decisions(
        prediction: FoldPrediction, modalities: list[str], method: FusionMethod, k: int | None = None
    ) -> list[int]:
        probabilities = [prediction.probabilities[m] for m in modalities]
        _, decisions = FusionService.fuse_many(probabilities, method, k, modalities)
        return [d.index for d in decisions]

    @staticmethod
    def score(
        predictions: list[FoldPrediction],
        modalities: list[str],
        method: FusionMethod,
        class_names: list[str],
        protocol: ProtocolName,
        k: int | None = None,
    ) -> MetricReport:
        """
        Fuse, decide and score every fold.

        Per-class metrics come from the pooled confusion matrix. The
        leave-one-out headline is the unweighted mean of fold metrics; the
        half-half headline is the single fold's.

        :param predictions: list[FoldPrediction]
            Fold outputs in fold order.
        :param modalities: list[str]
            Modalities to fuse.
        :param method: FusionMethod
            Fusion strategy.
        :param class_names: list[str]
            Class catalog.
        :param protocol: ProtocolName
            Protocol the folds came from.
        :param k: int | None, optional
            Top-K for the weighted strategies.
        :return: MetricReport
            Headline, per-class and per-fold metrics.
        """
        classes = len(class_names)
        pooled = np.zeros((classes, classes), dtype=np.int64)
        fold_metrics = []
        for prediction in predictions:
            if not prediction.truths:
                continue
            decisions = EvaluationService.fold_decisions(prediction, modalities, method, k)
            cm = confusion(decisions, prediction.truths, classes)
            pooled += cm.counts
            report = metrics(cm, class_names)
            fold_metrics.append(
                FoldMetrics(
                    fold=prediction.fold,
                    accuracy=report.accuracy,
                    macro_precision=report.macro_precision,
                    macro_recall=report.macro_recall,
                    macro_f1=report.macro_f1,
                    n_test=cm.total,
                )
            )

        summary = metrics(ConfusionMatrix(counts=pooled), class_names)
        if protocol is ProtocolName.loo:
            summary = summary.model_copy(
                update={
                    "accuracy": float(np.mean([f.accuracy for f in fold_metrics])),
                    "macro_precision": float(np.mean([f.macro_precision for f in fold_metrics])),
                    "macro_recall": float(np.mean([f.macro_recall for f in fold_metrics])),
                    "macro_f1": float(np.mean([f.macro_f1 for f in fold_metrics])),
                }
            )
        return summary.model_copy(update={"folds": fold_metrics})

    @staticmethod
    def grid(
        predictions: list[FoldPrediction],
        modalities: list[str],
        method: FusionMethod,
        class_names: list[str],
        protocol: ProtocolName,
        k: int | None = None,
        grid: bool = True,
    ) -> list[GridRow]:
        """
        One row per modality subset; single-modality rows are unfused.
        """
        rows = []
        for subset in modality_subsets(modalities, grid):
            row_method = method if len(subset) > 1 else FusionMethod.avg
            report = EvaluationService.score(predictions, subset, row_method, class_names, protocol, k)
            rows.append(
                GridRow(
                    modalities=subset,
                    method=method.value if len(subset) > 1 else SINGLE,
                    reports={protocol.value: report},
                )
            )
        return rows

    @staticmethod
    def fusion_comparison(
        predictions: list[FoldPrediction],
        modalities: list[str],
        class_names: list[str],
        protocol: ProtocolName,
        k: int | None = None,
    ) -> dict[str, MetricReport]:
        return {
            method.value: EvaluationService.score(predictions, modalities, method, class_names, protocol, k)
            for method in FusionMethod
        }
