"""
LogSLE - 对数共形场论中的随机 Löwner 演化
源代码包初始化文件
"""

__version__ = "1.0.0"
__author__ = "LogSLE Team"
__description__ = "Jordan 胞 Virasoro 模、耦合随机 Löwner 方程与鞅性检验"
