"""
配置模块
包含环境变量默认值、配置文件读取和运行配置校验
"""

from .config import Config, ConfigError, RunConfig, parse_number, parse_points, parse_rational

__all__ = ['Config', 'ConfigError', 'RunConfig', 'parse_number', 'parse_points', 'parse_rational']
