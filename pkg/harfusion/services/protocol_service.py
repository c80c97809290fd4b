import logging

import numpy as np

from harfusion.core.config import PipelineConfig, derive_seed
from harfusion.core.exceptions import ProtocolError
from harfusion.schemas.augmentation import AugmentMode
from harfusion.schemas.evaluation import EvaluationReport, Fold, FoldPrediction, MetricReport
from harfusion.schemas.fusion import FusionMethod
from harfusion.schemas.imu import Dataset
from harfusion.services.evaluation_service import EvaluationService, subsample
from harfusion.tasks.fold_tasks import FoldJob, run_folds


logger = logging.getLogger(__name__)


class ProtocolService:
    """
    Runs an evaluation protocol end to end: split, train per fold and modality, fuse, score.
    """

    @staticmethod
    def configured_fold(ds: Dataset, cfg: PipelineConfig) -> tuple[Fold, list[int]]:
        """
        The fold selected by `protocol.fold` and its (subsampled) training indices.

        Uses the same split and subsampling seeds as `run_protocol`, so staged
        runs see the same partition as in-process evaluation.

        :raises ProtocolError:
            If `protocol.fold` is out of range.
        """
        folds = EvaluationService.folds(ds, cfg.protocol.name, cfg.stage_seed("split"), cfg.protocol.stratified)
        index = cfg.protocol.fold
        if not 0 <= index < len(folds):
            raise ProtocolError(cfg.protocol.name.value, f"fold {index} outside 0..{len(folds) - 1}")
        fold = folds[index]
        seed = derive_seed(cfg.stage_seed("train"), f"subsample:{index}")
        return fold, subsample(fold.train, cfg.protocol.train_fraction, seed)

    @staticmethod
    def predict_folds(
        ds: Dataset,
        cfg: PipelineConfig,
        modalities: list[str],
        external: dict[str, dict[str, np.ndarray]] | None = None,
        workers: int = 1,
    ) -> list[FoldPrediction]:
        folds = EvaluationService.folds(ds, cfg.protocol.name, cfg.stage_seed("split"), cfg.protocol.stratified)
        jobs = [
            FoldJob(dataset=ds, fold=fold, index=i, config=cfg, modalities=modalities, external=external or {})
            for i, fold in enumerate(folds)
        ]
        return run_folds(jobs, workers)

    @staticmethod
    def run_protocol(
        ds: Dataset,
        cfg: PipelineConfig,
        external: dict[str, dict[str, np.ndarray]] | None = None,
        grid: bool = False,
        augment_sweep: bool = False,
        workers: int = 1,
    ) -> EvaluationReport:
        """
        Evaluate the configured modalities under the configured protocol.

        :param ds: Dataset
            Windowed dataset.
        :param cfg: PipelineConfig
            Pipeline configuration; `fusion.modalities` lists the modalities,
            `fusion.external` the externally supplied ones.
        :param external: dict | None, optional
            Loaded external tables, modality -> window id -> probabilities.
        :param grid: bool, optional
            Score every modality subset, not just the full set.
        :param augment_sweep: bool, optional
            Repeat the run for every augmentation mode.
        :param workers: int, optional
            Concurrent folds.
        :return: EvaluationReport
            Grid rows, fusion-method comparison and optional sweep.
        """
        modalities = list(cfg.fusion.modalities) + [m for m in (external or {}) if m not in cfg.fusion.modalities]
        protocol = cfg.protocol.name
        predictions = ProtocolService.predict_folds(ds, cfg, modalities, external, workers)

        rows = EvaluationService.grid(
            predictions, modalities, cfg.fusion.method, ds.class_names, protocol, cfg.fusion.k, grid
        )
        comparison: dict[str, MetricReport] = {}
        if len(modalities) > 1:
            comparison = EvaluationService.fusion_comparison(predictions, modalities, ds.class_names, protocol, cfg.fusion.k)
        for row in rows:
            report = row.reports[protocol.value]
            logger.info(f"{protocol.value} {'+'.join(row.modalities)} ({row.method}): accuracy {report.accuracy:.4f}")

        sweep = {}
        if augment_sweep:
            sweep = ProtocolService.augmentation_sweep(ds, cfg, modalities, external, workers)

        return EvaluationReport(
            protocol=protocol.value,
            class_names=ds.class_names,
            config_hash=cfg.stage_hash("eval"),
            seed=cfg.seed,
            grid=rows,
            fusion_comparison=comparison,
            augmentation_sweep=sweep,
        )

    @staticmethod
    def augmentation_sweep(
        ds: Dataset,
        cfg: PipelineConfig,
        modalities: list[str],
        external: dict[str, dict[str, np.ndarray]] | None = None,
        workers: int = 1,
    ) -> dict[str, dict[str, float]]:
        """
        Accuracy per modality (and of the fused set) under every augmentation mode.

        :return: dict[str, dict[str, float]]
            row name -> augmentation mode -> accuracy.
        """
        internal = [m for m in modalities if m not in (external or {})]
        rows = [[m] for m in internal]
        if len(modalities) > 1:
            rows.append(list(modalities))
        sweep: dict[str, dict[str, float]] = {"+".join(r): {} for r in rows}
        for mode in AugmentMode:
            mode_cfg = cfg.model_copy(
                update={"augmentation": cfg.augmentation.model_copy(update={"mode": mode})}
            )
            predictions = ProtocolService.predict_folds(ds, mode_cfg, modalities, external, workers)
            for row in rows:
                method = cfg.fusion.method if len(row) > 1 else FusionMethod.avg
                report = EvaluationService.score(predictions, row, method, ds.class_names, cfg.protocol.name, cfg.fusion.k)
                sweep["+".join(row)][mode.value] = report.accuracy
            logger.info(f"Augmentation {mode.value}: " + ", ".join(f"{k} {v[mode.value]:.4f}" for k, v in sweep.items()))
        return sweep
