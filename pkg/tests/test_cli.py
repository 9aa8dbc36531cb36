"""
命令行测试模块
测试子命令的退出状态、输出文件与可复现性
"""

import json

import pytest
from typer.testing import CliRunner

from main import app, parse_and_dispatch


runner = CliRunner()

MARTINGALE_ARGS = [
    "martingale", "--n-paths", "100", "--dt", "0.01", "--t-max", "0.1",
    "--checkpoints", "0,0.05,0.1", "--points", "1,2", "--seed", "7",
]


class TestCommands:
    """子命令测试"""

    def test_nullvector_writes_json(self, tmp_path):
        """测试 nullvector 写出 JSON 报告并以 0 退出"""
        out = tmp_path / "nv.json"
        result = runner.invoke(app, ["nullvector", "--delta", "1/4", "--out", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["gamma"] == "2 - 8/3θ"
        assert data["config"]["delta"] == "1/4"

    def test_gamma_pole_exits_nonzero(self):
        """测试 Δ = −1/2 以 1 退出"""
        result = runner.invoke(app, ["nullvector", "--delta=-1/2"])
        assert result.exit_code == 1
        assert "--delta" in result.output

    def test_malformed_delta(self):
        """测试浮点数 Δ 被拒绝"""
        result = runner.invoke(app, ["nullvector", "--delta", "0.25"])
        assert result.exit_code == 1

    def test_link_csv(self, tmp_path):
        """测试 link 写出 key/value CSV"""
        out = tmp_path / "link.csv"
        result = runner.invoke(app, ["link", "--format", "csv", "--out", str(out)])
        assert result.exit_code == 0
        assert "key,value" in out.read_text(encoding="utf-8")

    def test_martingale_is_reproducible(self, tmp_path):
        """测试相同参数与种子两次运行写出逐字节相同的报告"""
        out = tmp_path / "report.json"
        first = runner.invoke(app, MARTINGALE_ARGS + ["--out", str(out)])
        assert first.exit_code == 0
        first_bytes = out.read_bytes()
        second = runner.invoke(app, MARTINGALE_ARGS + ["--out", str(out)])
        assert second.exit_code == 0
        assert out.read_bytes() == first_bytes

    def test_martingale_reports_null_hypothesis(self, tmp_path):
        """测试默认停止高度下报告注明停止过程的零假设"""
        out = tmp_path / "report.json"
        result = runner.invoke(app, MARTINGALE_ARGS + ["--out", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["null_hypothesis"].startswith("stopped")
        assert data["config"]["stop_level"] == 0.05

    def test_martingale_stop_level_above_points(self):
        """测试停止高度不低于种子点时以 1 退出"""
        result = runner.invoke(app, MARTINGALE_ARGS + ["--stop-level", "1.5"])
        assert result.exit_code == 1
        assert "--stop-level" in result.output

    def test_simulate_defaults_to_grid(self, tmp_path):
        """测试 simulate 不给 --points 时使用上半平面网格"""
        out = tmp_path / "traj.json"
        args = ["simulate", "--n-paths", "2", "--dt", "0.01", "--t-max", "0.02", "--checkpoints", "0,0.02", "--out", str(out)]
        result = runner.invoke(app, args)
        assert result.exit_code == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert len(data["config"]["points"]) == 20
        im_h = data["columns"].index("Im_h")
        assert all(row[im_h] > 0 for row in data["rows"])

    def test_martingale_too_few_paths(self):
        """测试路径数不足"""
        args = [a if a != "100" else "10" for a in MARTINGALE_ARGS]
        result = runner.invoke(app, args)
        assert result.exit_code == 1
        assert "--n-paths" in result.output

    def test_config_file(self, tmp_path):
        """测试配置文件中的未知键"""
        path = tmp_path / "bad.toml"
        path.write_text("colour = blue\n", encoding="utf-8")
        result = runner.invoke(app, ["nullvector", "--config", str(path)])
        assert result.exit_code == 1


class TestDispatch:
    """parse_and_dispatch 退出状态测试"""

    def test_usage_error(self):
        """测试未知子命令返回 2"""
        assert parse_and_dispatch(["bogus"]) == 2

    def test_version(self):
        """测试 version 返回 0"""
        assert parse_and_dispatch(["version"]) == 0

    def test_validation_error(self):
        """测试校验失败返回 1"""
        assert parse_and_dispatch(["link", "--kappa=-1"]) == 1

    def test_bad_option_value(self):
        """测试无法解析的选项值按用法错误返回 2"""
        assert parse_and_dispatch(["martingale", "--n-paths", "many"]) == 2


if __name__ == "__main__":
    pytest.main([__file__])
