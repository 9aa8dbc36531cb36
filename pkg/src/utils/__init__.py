"""
工具模块
包含日志配置与退出安全的日志函数
"""

from .safe_logger import (
    configure_logging,
    safe_logger,
    safe_log_debug,
    safe_log_error,
    safe_log_info,
)

__all__ = [
    'configure_logging',
    'safe_logger',
    'safe_log_debug',
    'safe_log_info',
    'safe_log_error',
]
