"""
随机模块
包含随机数子流、耦合 Löwner 方程积分和鞅性 Monte Carlo 检验
"""

from .loewner import (
    EnsembleTrajectory,
    MapPointState,
    SdeParams,
    bessel_hit_probability,
    estimate_strong_order,
    evolve,
    evolve_ensemble,
    step,
    to_g_frame,
)
from .martingale import (
    AbsorbedPointError,
    AllPathsAbsorbedError,
    McReport,
    NonGradedWalkError,
    drift_coefficient,
    expected_observable_mean,
    mc_drift_report,
    module_expected_state,
    module_mc_state,
    observable_M,
)
from .streams import brownian_increments, path_rng

__all__ = [
    'SdeParams', 'MapPointState', 'EnsembleTrajectory', 'bessel_hit_probability',
    'step', 'evolve', 'evolve_ensemble', 'to_g_frame', 'estimate_strong_order',
    'McReport', 'drift_coefficient', 'observable_M', 'mc_drift_report', 'expected_observable_mean',
    'module_expected_state', 'module_mc_state',
    'AbsorbedPointError', 'AllPathsAbsorbedError', 'NonGradedWalkError',
    'brownian_increments', 'path_rng',
]
