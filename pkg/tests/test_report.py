import csv
import io
import json

from models.report import CSV_COLUMNS, BenchRow, RunReport


def sample_report() -> RunReport:
    report = RunReport(primal={"price": 3.25})
    report.add_derivative("d(V)", 27.5)
    report.add_derivative("d(S)*d(V)", -0.125)
    report.bench.append(BenchRow(order=0, outputs=1, mean_ns=800.0, R=1.0, RR=None))
    report.bench.append(BenchRow(order=1, outputs=6, mean_ns=2400.0, R=3.0, RR=3.0))
    return report


class TestJson:

    def test_layout(self):
        data = json.loads(sample_report().to_json())
        assert data["primal"] == {"price": 3.25}
        assert data["derivatives"][1] == {"request": "d(S)*d(V)", "value": -0.125}
        assert data["bench"][0]["RR"] is None
        assert set(data["bench"][1]) == {"order", "outputs", "mean_ns", "R", "RR"}

    def test_reads_back(self):
        report = sample_report()
        assert RunReport.from_json(report.to_json()) == report

    def test_empty_sections(self):
        assert RunReport.from_dict({"primal": {"y": 1}}).to_dict() == {
            "primal": {"y": 1.0}, "derivatives": [], "bench": []}


class TestCsv:

    def test_rows(self):
        text = sample_report().to_csv()
        assert text.endswith("\n")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert list(rows[0]) == CSV_COLUMNS
        assert [row["kind"] for row in rows] == ["primal", "derivative", "derivative", "bench", "bench"]
        assert rows[2]["name"] == "d(S)*d(V)"
        assert float(rows[2]["value"]) == -0.125
        assert rows[3]["RR"] == ""
        assert (rows[4]["order"], rows[4]["outputs"], float(rows[4]["R"])) == ("1", "6", 3.0)

    def test_values_keep_full_precision(self):
        report = RunReport(primal={"y": 0.1 + 0.2})
        row = next(csv.DictReader(io.StringIO(report.to_csv())))
        assert float(row["value"]) == 0.1 + 0.2
