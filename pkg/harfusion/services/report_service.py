import logging

from harfusion.core.exceptions import ProvenanceError
from harfusion.schemas.evaluation import EvaluationReport, GridRow, MetricReport


logger = logging.getLogger(__name__)

METRIC_COLUMNS = (("acc", "accuracy"), ("prec", "macro_precision"), ("rec", "macro_recall"), ("f1", "macro_f1"))


def _pct(value: float) -> str:
    return f"{100.0 * value:6.2f}"


def _table(head: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths))) for r in [head] + rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


class ReportService:
    """
    Merges evaluation reports and renders them as aligned text tables.
    """

    @staticmethod
    def merge(reports: list[EvaluationReport], force: bool = False) -> list[GridRow]:
        """
        Combine per-protocol reports into one grid keyed by modality subset and method.

        :param reports: list[EvaluationReport]
            Reports to merge, typically one per protocol.
        :param force: bool, optional
            Accept reports produced by different configurations.
        :raises ProvenanceError:
            If config hashes differ and `force` is not set.
        :return: list[GridRow]
            Rows in first-seen order with one report per protocol.
        """
        hashes = sorted({r.config_hash for r in reports})
        if len(hashes) > 1:
            if not force:
                raise ProvenanceError("evaluation reports", hashes[1], hashes[0])
            logger.warning(f"Merging reports from {len(hashes)} configurations, forced.")
        merged: dict[tuple, GridRow] = {}
        for report in reports:
            for row in report.grid:
                key = (tuple(row.modalities), row.method)
                target = merged.setdefault(key, GridRow(modalities=row.modalities, method=row.method))
                target.reports.update(row.reports)
        return list(merged.values())

    @staticmethod
    def grid_table(rows: list[GridRow], protocols: list[str]) -> str:
        """
        Modality subsets down, protocol metrics (percent) across.
        """
        head = ["modalities", "fusion"] + [f"{p} {name}" for p in protocols for name, _ in METRIC_COLUMNS]
        body = []
        for row in rows:
            cells = ["+".join(row.modalities), row.method]
            for protocol in protocols:
                report = row.reports.get(protocol)
                cells += [_pct(getattr(report, field)) if report else "-" for _, field in METRIC_COLUMNS]
            body.append(cells)
        return _table(head, body)

    @staticmethod
    def comparison_table(comparison: dict[str, MetricReport]) -> str:
        head = ["method"] + [name for name, _ in METRIC_COLUMNS]
        body = [[method] + [_pct(getattr(r, field)) for _, field in METRIC_COLUMNS] for method, r in comparison.items()]
        return _table(head, body)

    @staticmethod
    def per_class_table(report: MetricReport) -> str:
        """
        Per-class accuracy (recall), precision and F1 with support.
        """
        head = ["class", "acc", "prec", "f1", "n"]
        body = [[m.name, _pct(m.recall), _pct(m.precision), _pct(m.f1), str(m.support)] for m in report.per_class]
        return _table(head, body)

    @staticmethod
    def sweep_table(sweep: dict[str, dict[str, float]]) -> str:
        modes = list(next(iter(sweep.values())).keys()) if sweep else []
        head = ["modalities"] + modes
        body = [[row] + [_pct(values[m]) for m in modes] for row, values in sweep.items()]
        return _table(head, body)

    @staticmethod
    def fold_table(report: MetricReport) -> str:
        head = ["fold", "n"] + [name for name, _ in METRIC_COLUMNS]
        body = [[f.fold, str(f.n_test)] + [_pct(getattr(f, field)) for _, field in METRIC_COLUMNS] for f in report.folds]
        return _table(head, body)

    @staticmethod
    def render(report: EvaluationReport) -> str:
        """
        Full text rendering of one evaluation report.
        """
        sections = [
            f"protocol: {report.protocol}  config: {report.config_hash}  seed: {report.seed}",
            ReportService.grid_table(report.grid, [report.protocol]),
        ]
        headline = report.grid[-1].reports.get(report.protocol) if report.grid else None
        if report.fusion_comparison:
            sections.append("fusion methods\n" + ReportService.comparison_table(report.fusion_comparison))
        if headline:
            label = "+".join(report.grid[-1].modalities)
            sections.append(f"per class ({label})\n" + ReportService.per_class_table(headline))
            if len(headline.folds) > 1:
                sections.append(f"folds ({label})\n" + ReportService.fold_table(headline))
            if headline.zero_division:
                sections.append("zero division reported as 0: " + ", ".join(headline.zero_division))
        if report.augmentation_sweep:
            sections.append("augmentation (accuracy)\n" + ReportService.sweep_table(report.augmentation_sweep))
        return "\n\n".join(sections) + "\n"
