import pytest

from harfusion.core.exceptions import ProvenanceError
from harfusion.schemas.evaluation import EvaluationReport, GridRow, MetricReport
from harfusion.services.report_service import ReportService


def headline(accuracy):
    return MetricReport(accuracy=accuracy, macro_precision=accuracy, macro_recall=accuracy, macro_f1=accuracy)


def report(protocol, config_hash="abc", accuracy=0.5):
    rows = [
        GridRow(modalities=["freq"], method="-", reports={protocol: headline(accuracy)}),
        GridRow(modalities=["freq", "och"], method="avg", reports={protocol: headline(accuracy + 0.25)}),
    ]
    return EvaluationReport(protocol=protocol, class_names=["A", "B"], config_hash=config_hash, seed=0, grid=rows)


def test_merge_joins_protocols():
    rows = ReportService.merge([report("hh", accuracy=0.5), report("loo", accuracy=0.6)])
    assert len(rows) == 2
    assert set(rows[1].reports) == {"hh", "loo"}
    assert rows[1].reports["loo"].accuracy == pytest.approx(0.85)


def test_merge_refuses_mixed_configurations():
    with pytest.raises(ProvenanceError):
        ReportService.merge([report("hh", "abc"), report("loo", "def")])
    assert len(ReportService.merge([report("hh", "abc"), report("loo", "def")], force=True)) == 2


def test_grid_table_renders_percentages():
    rows = ReportService.merge([report("hh")])
    table = ReportService.grid_table(rows, ["hh", "loo"])
    lines = table.splitlines()
    assert lines[0].split()[:2] == ["modalities", "fusion"]
    assert "freq+och" in lines[3] and "75.00" in lines[3]
    assert lines[2].split()[-1] == "-"


def test_render_includes_per_class_section():
    text = ReportService.render(report("hh"))
    assert text.startswith("protocol: hh  config: abc  seed: 0")
    assert "per class (freq+och)" in text
