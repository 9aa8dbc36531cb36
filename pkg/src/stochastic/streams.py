"""
随机数子流模块
由 (主种子, 路径编号) 确定性地派生每条路径的 Brownian 增量，
并把路径集合切成块，按块串行或多进程执行，结果与进程数无关
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Tuple

import numpy as np
from loguru import logger

from src.utils.safe_logger import safe_log_debug


def path_rng(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """
    第 index 条路径的独立随机数生成器

    stream = 0 为 Brownian 增量，其余编号是同一路径上互不相关的辅助子流
    """
    spawn_key = (int(index),) if stream == 0 else (int(index), int(stream))
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=spawn_key))


def brownian_increments(seed: int, n: int, dt: float) -> np.ndarray:
    """
    生成 n 个独立的 N(0, dt) 增量

    Args:
        seed: 随机种子
        n: 增量个数（≥ 1）
        dt: 时间步长（> 0）

    Returns:
        长度为 n 的数组，相同 (seed, n, dt) 输出完全相同
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    rng = np.random.default_rng(int(seed))
    return rng.standard_normal(int(n)) * np.sqrt(dt)


def path_increments(master_seed: int, index: int, n: int, dt: float) -> np.ndarray:
    return path_rng(master_seed, index).standard_normal(int(n)) * np.sqrt(dt)


def block_increments(master_seed: int, start: int, stop: int, n: int, dt: float) -> np.ndarray:
    """路径 start..stop-1 的增量矩阵，形状 (stop-start, n)"""
    increments = np.empty((stop - start, int(n)))
    for row, index in enumerate(range(start, stop)):
        increments[row] = path_increments(master_seed, index, n, dt)
    return increments


def block_uniforms(master_seed: int, start: int, stop: int, n: int, stream: int = 1) -> np.ndarray:
    """路径 start..stop-1 在辅助子流上的 U(0, 1) 样本，形状 (stop-start, n)"""
    return np.vstack([path_rng(master_seed, index, stream).random(int(n)) for index in range(start, stop)])


def block_ranges(n_paths: int, block_size: int) -> List[Tuple[int, int]]:
    if n_paths < 1:
        raise ValueError(f"n_paths must be at least 1, got {n_paths}")
    if block_size < 1:
        raise ValueError(f"block_size must be at least 1, got {block_size}")
    return [(start, min(start + block_size, n_paths)) for start in range(0, n_paths, block_size)]


def _call_block(task: Tuple[Callable[[int, int], Any], int, int]) -> Any:
    fn, start, stop = task
    safe_log_debug(f"路径块 [{start}, {stop}) 开始")
    return fn(start, stop)


def run_blocks(
    fn: Callable[[int, int], Any],
    n_paths: int,
    block_size: int = 1000,
    workers: int = 1,
) -> List[Any]:
    """
    对每个路径块调用 fn(start, stop)

    Args:
        fn: 可 pickle 的块函数（多进程时需为模块级函数或 functools.partial）
        n_paths: 路径总数
        block_size: 每块路径数
        workers: 进程数，1 表示在当前进程内执行

    Returns:
        按块起始编号排序的结果列表
    """
    ranges = block_ranges(n_paths, block_size)
    logger.debug(f"路径分块: {len(ranges)} 块, block_size={block_size}, workers={workers}")
    tasks = [(fn, start, stop) for start, stop in ranges]
    if workers <= 1 or len(ranges) == 1:
        return [_call_block(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_call_block, tasks))
