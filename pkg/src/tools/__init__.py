"""
工具模块
包含 CSV/JSON 报告导出
"""

from .exporters import emit_report, load_mc_report

__all__ = ['emit_report', 'load_mc_report']
