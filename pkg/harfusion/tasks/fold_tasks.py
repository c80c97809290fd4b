import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from harfusion.core.config import PipelineConfig, derive_seed
from harfusion.core.exceptions import ShapeMismatchError
from harfusion.schemas.evaluation import Fold, FoldPrediction
from harfusion.schemas.imu import Dataset
from harfusion.services.evaluation_service import subsample
from harfusion.services.training_service import TrainingService


logger = logging.getLogger(__name__)


class FoldJob(BaseModel):
    """
    Everything one fold needs; jobs share nothing mutable.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset: Dataset
    fold: Fold
    index: int
    config: PipelineConfig
    modalities: list[str]
    external: dict[str, dict[str, np.ndarray]] = {}


def run_fold(job: FoldJob) -> FoldPrediction:
    """
    Train every internal modality on the fold's training windows and predict its test windows.

    Training windows are subsampled by `protocol.train_fraction` before
    augmentation; test windows are never augmented. External modalities are
    looked up by window id.

    :param job: FoldJob
        Dataset, fold partition and configuration.
    :raises ShapeMismatchError:
        If an external table lacks a test window.
    :return: FoldPrediction
        Per-modality N_test×C probabilities and the truths.
    """
    cfg, ds = job.config, job.dataset
    base_seed = cfg.stage_seed("train")
    train_idx = subsample(job.fold.train, cfg.protocol.train_fraction, derive_seed(base_seed, f"subsample:{job.index}"))
    train_windows = [ds.windows[i] for i in train_idx]
    test_windows = [ds.windows[i] for i in job.fold.test]
    window_ids = [w.window_id for w in test_windows]
    prediction = FoldPrediction(
        fold=job.fold.name, window_ids=window_ids, truths=[w.label for w in test_windows]
    )
    logger.info(f"Fold {job.fold.name}: {len(train_windows)} training and {len(test_windows)} test windows.")

    for modality in job.modalities:
        if modality in job.external:
            table = job.external[modality]
            missing = [wid for wid in window_ids if wid not in table]
            if missing:
                raise ShapeMismatchError(f"external modality {modality}", f"no row for {missing[0]}", "one row per test window")
            prediction.probabilities[modality] = np.array([table[wid] for wid in window_ids])
            continue
        seed = derive_seed(base_seed, f"{modality}:{job.fold.name}")
        network, result = TrainingService.train_modality(train_windows, modality, len(ds.class_names), cfg, seed)
        test_images = TrainingService.modality_images(test_windows, modality, cfg)
        prediction.probabilities[modality] = TrainingService.predict(
            network, test_images, cfg.modalities[modality].train.batch_size
        )
        prediction.loss_curves[modality] = result.loss_curve
    return prediction


def run_folds(jobs: list[FoldJob], workers: int = 1) -> list[FoldPrediction]:
    """
    Run fold jobs, concurrently when `workers` > 1; results keep job order.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [run_fold(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_fold, jobs))
