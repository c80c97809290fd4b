from harfusion.tasks.fold_tasks import FoldJob, run_fold, run_folds


__all__ = ["FoldJob", "run_fold", "run_folds"]
