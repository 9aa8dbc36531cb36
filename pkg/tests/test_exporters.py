"""
报告导出测试
测试漂移报告、轨迹集合与普通字典的 CSV/JSON 输出
"""

import csv
import json

import pytest

from src.stochastic.loewner import TRAJECTORY_HEADER, SdeParams, evolve_ensemble
from src.stochastic.martingale import McReport
from src.tools.exporters import MC_CSV_HEADER, emit_report, load_mc_report, to_json_text


def _report(components=None) -> McReport:
    if components is None:
        components = [
            {"name": "Re_bulk", "means": [1.0, 0.99], "ses": [0.0, 0.01], "zscores": [0.0, -1.0]},
            {"name": "Re_theta", "means": [-0.5, -0.52], "ses": [0.0, 0.02], "zscores": [0.0, -1.0]},
        ]
    return McReport(
        observable="M",
        checkpoints=[0.0, 0.1],
        components=components,
        n_paths=200,
        seed=7,
        params={"kappa": 4.0, "kappa_hat": -16 / 3},
        absorbed_counts=[0, 1],
        max_abs=[1.0, 1.7],
        clipped_counts=[0, 0],
    )


def _read_csv(path):
    with open(path, encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.reader(lines))


class TestMcReportExport:
    """漂移报告导出测试"""

    def test_csv_header_and_rows(self, tmp_path):
        """测试 CSV 表头与行数（分量 × 检查点）"""
        path = emit_report(_report(), "csv", str(tmp_path / "report.csv"), header={"seed": 7})
        rows = _read_csv(path)
        assert rows[0] == MC_CSV_HEADER
        assert len(rows) == 1 + 2 * 2
        assert rows[2][:2] == ["Re_bulk", "0.1"]
        with open(path, encoding="utf-8") as handle:
            assert handle.readline().startswith("# config: ")

    def test_expected_column_and_null_hypothesis(self, tmp_path):
        """测试期望值列与零假设注释"""
        report = _report(components=[
            {"name": "bulk[x=1.0]", "means": [1.0, 0.55], "expected": [1.0, 0.5205], "ses": [0.0, 0.02], "zscores": [0.0, 1.5]},
        ])
        report.null_hypothesis = "local: E[M(t)] = M(0) P(T0 > t)"
        path = emit_report(report, "csv", str(tmp_path / "local.csv"), header={"seed": 7})
        rows = _read_csv(path)
        column = MC_CSV_HEADER.index("expected")
        assert [float(row[column]) for row in rows[1:]] == [1.0, 0.5205]
        with open(path, encoding="utf-8") as handle:
            comments = [line for line in handle if line.startswith("#")]
        assert comments[-1] == "# null_hypothesis: local: E[M(t)] = M(0) P(T0 > t)\n"
        assert load_mc_report(emit_report(report, "json", str(tmp_path / "local.json"))).null_hypothesis == report.null_hypothesis

    def test_expected_defaults_to_initial_mean(self, tmp_path):
        """测试分量没有 expected 时以 t=0 的均值为期望值"""
        rows = _read_csv(emit_report(_report(), "csv", str(tmp_path / "report.csv")))
        column = MC_CSV_HEADER.index("expected")
        assert [row[column] for row in rows[1:3]] == ["1.0", "1.0"]

    def test_empty_report_writes_header_only(self, tmp_path):
        """测试没有分量时只写表头"""
        path = emit_report(_report(components=[]), "csv", str(tmp_path / "empty.csv"))
        assert _read_csv(path) == [MC_CSV_HEADER]

    def test_json_per_checkpoint_arrays(self, tmp_path):
        """测试 JSON 中每个分量按检查点给出数组"""
        path = emit_report(_report(), "json", str(tmp_path / "report.json"), header={"seed": 7})
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        assert data["config"] == {"seed": 7}
        for component in data["components"]:
            assert len(component["means"]) == 2
            assert len(component["zscores"]) == 2

    def test_json_round_trip(self, tmp_path):
        """测试 JSON 报告可以读回"""
        report = _report()
        path = emit_report(report, "json", str(tmp_path / "report.json"))
        assert load_mc_report(path) == report

    def test_stable_text(self):
        """测试 JSON 文本键排序且与字典顺序无关"""
        assert to_json_text({"b": 1, "a": 2}) == to_json_text({"a": 2, "b": 1})


class TestTrajectoryExport:
    """轨迹集合导出测试"""

    def setup_method(self):
        params = SdeParams(kappa=4.0, kappa_hat=-16 / 3, dt=0.01, t_max=0.1, seed=3)
        self.ensemble = evolve_ensemble([1j, 0.5 + 0.5j], params, [0.0, 0.1], n_paths=3)

    def test_csv(self, tmp_path):
        """测试轨迹 CSV 行数为 路径 × 点 × 检查点"""
        path = emit_report(self.ensemble, "csv", str(tmp_path / "traj.csv"))
        rows = _read_csv(path)
        assert rows[0] == TRAJECTORY_HEADER
        assert len(rows) == 1 + 3 * 2 * 2
        assert rows[1][:3] == ["0", "0", "0.0"]

    def test_json(self, tmp_path):
        """测试轨迹 JSON 的列与行"""
        path = emit_report(self.ensemble, "json", str(tmp_path / "traj.json"))
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        assert data["columns"] == TRAJECTORY_HEADER
        assert len(data["rows"]) == 12


class TestPlainExport:
    """普通字典与错误处理测试"""

    def test_key_value_csv(self, tmp_path):
        """测试普通字典写成 key/value 两列"""
        path = emit_report({"gamma": "2 - 8/3θ", "central": "1"}, "csv", str(tmp_path / "nv.csv"))
        assert _read_csv(path) == [["key", "value"], ["central", "1"], ["gamma", "2 - 8/3θ"]]

    def test_tabular_dict_csv(self, tmp_path):
        """测试带 columns/rows 的字典按表格写出，其余键写成注释"""
        report = {"columns": ["a", "b"], "rows": [[1, 2.5]], "seed": 3}
        path = emit_report(report, "csv", str(tmp_path / "table.csv"))
        assert _read_csv(path) == [["a", "b"], ["1", "2.5"]]
        with open(path, encoding="utf-8") as handle:
            assert handle.readline() == "# seed: 3\n"

    def test_creates_parent_directories(self, tmp_path):
        """测试自动创建不存在的父目录"""
        target = tmp_path / "a" / "b" / "out.json"
        emit_report({"x": 1}, "JSON", str(target))
        assert json.loads(target.read_text(encoding="utf-8")) == {"x": 1}

    def test_unknown_format(self, tmp_path):
        """测试未知格式"""
        with pytest.raises(ValueError, match="unknown format"):
            emit_report({"x": 1}, "xml", str(tmp_path / "out.xml"))


if __name__ == "__main__":
    pytest.main([__file__])
