"""
报告导出工具
把漂移报告、轨迹集合和符号计算摘要写成 CSV 或 JSON
"""

import csv
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from loguru import logger

from src.stochastic.loewner import TRAJECTORY_HEADER, EnsembleTrajectory, trajectory_rows
from src.stochastic.martingale import McReport


MC_CSV_HEADER = ["component", "t", "mean", "expected", "se", "zscore", "absorbed", "max_abs"]


def _json_default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def to_json_text(payload: Dict[str, Any]) -> str:
    """键排序的稳定 JSON 文本"""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default) + "\n"


def mc_report_rows(report: McReport) -> Iterable[Dict[str, Any]]:
    for component in report.components:
        expected = component.get("expected") or [component["means"][0]] * len(report.checkpoints)
        for i, t in enumerate(report.checkpoints):
            yield {
                "component": component["name"],
                "t": t,
                "mean": component["means"][i],
                "expected": expected[i],
                "se": component["ses"][i],
                "zscore": component["zscores"][i],
                "absorbed": report.absorbed_counts[i],
                "max_abs": report.max_abs[i],
            }


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Dict[str, Any]], comments: List[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in comments:
            handle.write(f"# {line}\n")
        writer = csv.DictWriter(handle, fieldnames=list(header), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def emit_report(report: Any, format: str, path: str, header: Optional[Dict[str, Any]] = None) -> str:
    """
    写出报告文件

    Args:
        report: McReport、EnsembleTrajectory 或普通字典
        format: "csv" 或 "json"
        path: 输出路径（父目录不存在时自动创建）
        header: 可选的完整运行配置，作为可复现性头部写入

    Returns:
        写出的文件路径

    Raises:
        ValueError: 未知格式
        OSError: 路径不可写
    """
    format = format.lower()
    if format not in ("csv", "json"):
        raise ValueError(f"unknown format {format!r}")
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)

    if format == "json":
        if isinstance(report, McReport):
            payload = report.to_dict()
        elif isinstance(report, EnsembleTrajectory):
            payload = {"columns": TRAJECTORY_HEADER, "rows": [[row[c] for c in TRAJECTORY_HEADER] for row in trajectory_rows(report)]}
        else:
            payload = dict(report)
        if header is not None:
            payload["config"] = header
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(to_json_text(payload))
    else:
        comments = [f"config: {json.dumps(header, sort_keys=True, default=_json_default)}"] if header else []
        if isinstance(report, McReport):
            if report.null_hypothesis:
                comments.append(f"null_hypothesis: {report.null_hypothesis}")
            _write_csv(path, MC_CSV_HEADER, mc_report_rows(report), comments)
        elif isinstance(report, EnsembleTrajectory):
            _write_csv(path, TRAJECTORY_HEADER, trajectory_rows(report), comments)
        elif "columns" in report and "rows" in report:
            columns = list(report["columns"])
            extras = {k: v for k, v in report.items() if k not in ("columns", "rows")}
            comments += [f"{k}: {json.dumps(v, default=_json_default)}" for k, v in sorted(extras.items())]
            _write_csv(path, columns, (dict(zip(columns, row)) for row in report["rows"]), comments)
        else:
            rows = ({"key": k, "value": v} for k, v in sorted(dict(report).items()))
            _write_csv(path, ["key", "value"], rows, comments)

    logger.info(f"报告已写出: {path} ({format})")
    return path


def load_mc_report(path: str) -> McReport:
    """读回 JSON 格式的漂移报告"""
    with open(path, "r", encoding="utf-8") as handle:
        return McReport.from_dict(json.load(handle))
