"""
工作流模块
包含符号计算与随机模拟两类工作流的编排逻辑
"""

from .stochastic_workflow import StochasticWorkflow
from .symbolic_workflow import SymbolicWorkflow

__all__ = ['StochasticWorkflow', 'SymbolicWorkflow']
