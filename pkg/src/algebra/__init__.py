"""
代数模块
包含对偶数运算、Virasoro Jordan 胞模计算、游走系数到 Löwner 方程的链接映射
"""

from .dualnum import (
    ONE,
    THETA,
    ZERO,
    DualBranchError,
    DualScalar,
    DualSingularError,
    InexactOperationError,
    NonInvertibleDualError,
    dual,
    dual_exp,
    dual_inv,
    dual_log,
    dual_mul,
    dual_pow,
    dual_sqrt,
    forward_derivative,
)
from .linkmap import LaurentPoly, compute_mu, compute_nu, expand_tau, sde_coefficients, sle_walk
from .virasoro import (
    GammaPoleError,
    ModuleContext,
    ModuleState,
    NotNullVectorError,
    TruncatedOperator,
    act,
    check_vanishing,
    classify_level2,
    drift_state,
    null_vector_level2,
    quotient_project,
)

__all__ = [
    'ONE', 'THETA', 'ZERO',
    'DualScalar', 'dual', 'dual_mul', 'dual_inv', 'dual_log', 'dual_exp', 'dual_sqrt', 'dual_pow',
    'forward_derivative',
    'NonInvertibleDualError', 'DualBranchError', 'DualSingularError', 'InexactOperationError',
    'ModuleContext', 'ModuleState', 'TruncatedOperator',
    'act', 'check_vanishing', 'classify_level2', 'drift_state', 'null_vector_level2', 'quotient_project',
    'GammaPoleError', 'NotNullVectorError',
    'LaurentPoly', 'compute_mu', 'compute_nu', 'expand_tau', 'sde_coefficients', 'sle_walk',
]
