"""
日志工具模块
配置 loguru 输出，并提供在解释器退出或工作进程中也不会抛错的日志函数
"""

import atexit
import sys
import threading
from typing import Optional

from loguru import logger


LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - {message}"


def configure_logging(verbose: bool = False, log_file: Optional[str] = None, level: str = "WARNING") -> None:
    """
    替换 loguru 默认输出

    Args:
        verbose: 为 True 时输出 DEBUG 级别
        log_file: 可选的日志文件路径（按 10 MB 轮转）
        level: 非 verbose 时的控制台级别
    """
    logger.remove()
    console_level = "DEBUG" if verbose else level.upper()
    logger.add(sys.stderr, level=console_level, format=LOG_FORMAT)
    if log_file:
        logger.add(log_file, level="DEBUG", rotation="10 MB", encoding="utf-8")
    logger.debug(f"日志已配置: level={console_level}, file={log_file}")


class SafeLogger:
    """退出阶段安全的日志记录器：atexit 之后的调用直接忽略"""

    def __init__(self):
        self._lock = threading.Lock()
        self._closed = False
        atexit.register(self._close)

    def _close(self):
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        return self._closed

    def log(self, level: str, message: str) -> None:
        if self._closed:
            return
        try:
            with self._lock:
                if not self._closed:
                    logger.log(level, message)
        except Exception:
            # 清理阶段 sink 可能已经关闭
            pass


safe_logger = SafeLogger()


def safe_log_debug(message: str) -> None:
    safe_logger.log("DEBUG", message)


def safe_log_info(message: str) -> None:
    safe_logger.log("INFO", message)


def safe_log_error(message: str) -> None:
    safe_logger.log("ERROR", message)
