"""
符号工作流模块
nullvector：构造并检验二级对数零矢量；link：由游走系数得到耦合 Löwner 方程
"""

from typing import Any, Dict

from loguru import logger

from src.algebra.dualnum import InexactOperationError, as_dual
from src.algebra.linkmap import kappa_dual, sde_coefficients, sle_walk
from src.algebra.virasoro import check_vanishing, classify_level2, null_vector_level2
from src.configs.config import RunConfig
from src.stochastic.martingale import module_drift_check


class SymbolicWorkflow:
    """符号计算工作流"""

    def __init__(self, config: RunConfig):
        self.config = config

    def _new_results(self) -> Dict[str, Any]:
        return {
            'command': self.config.command,
            'steps': [],
            'summary': {},
            'report': None,
            'success': False,
            'exit_ok': False,
            'error': None,
        }

    def execute_nullvector(self) -> Dict[str, Any]:
        """
        执行零矢量工作流

        Returns:
            结果字典；exit_ok 为 True 当且仅当 χ 为零矢量且 θ 无关中心荷下的消没结果与对数分类一致
        """
        delta = self.config.delta
        logger.info(f"开始执行零矢量工作流，Δ={delta}")
        results = self._new_results()

        try:
            # 步骤1: 构造零矢量
            logger.info("步骤1: 构造二级零矢量")
            gamma, central, chi = null_vector_level2(delta)
            results['steps'].append({'step': 'construct', 'chi': str(chi), 'success': True})

            # 步骤2: 检验 L₁χ = L₂χ = 0
            logger.info("步骤2: 检验消没条件")
            check = check_vanishing(chi)
            results['steps'].append({'step': 'vanishing', 'is_null': check.is_null, 'success': True})

            # 步骤3: 对数分类
            logger.info("步骤3: 中心荷 θ 分量分类")
            classification = classify_level2(delta)
            results['steps'].append({'step': 'classify', 'logarithmic': classification.logarithmic, 'success': True})

            results['summary'] = {
                'delta': str(delta),
                'gamma': str(gamma),
                'central': str(central),
                'k': str(classification.k),
                'kappa_bulk': str(classification.kappa_bulk),
                'kappa_positive': classification.kappa_positive,
                'is_null': check.is_null,
                'is_null_theta_free': classification.is_null_theta_free,
                'logarithmic': classification.logarithmic,
                'chi': str(chi),
            }
            results['report'] = dict(results['summary'])
            results['exit_ok'] = classification.consistent
            results['success'] = True
            if not classification.kappa_positive:
                logger.warning(f"Δ={delta} 对应的主部 κ={classification.kappa_bulk} 不为正")
            logger.info("零矢量工作流执行成功")

        except Exception as e:
            logger.error(f"零矢量工作流执行失败: {str(e)}")
            results['error'] = str(e)
            results['success'] = False

        return results

    def execute_link(self) -> Dict[str, Any]:
        """执行链接映射工作流：SLE 游走系数 -> (μ, ν) -> τ 展开"""
        logger.info(f"开始执行链接映射工作流，κ={self.config.kappa}, κ̂={self.config.kappa_hat}")
        results = self._new_results()

        try:
            # 步骤1: 游走系数
            logger.info("步骤1: 构造 SLE 游走系数")
            k = kappa_dual(self.config.kappa, self.config.kappa_hat)
            try:
                a, b = sle_walk(k)
                exact = True
            except InexactOperationError:
                a, b = sle_walk(k.to_float())
                exact = False
                logger.info("√κ 不是有理数，改用浮点模式")
            results['steps'].append({'step': 'walk', 'exact': exact, 'success': True})

            # 步骤2: μ、ν 与 τ 展开
            logger.info("步骤2: 计算 μ、ν 并按 τ 展开")
            coeffs = sde_coefficients(a, b)
            results['steps'].append({'step': 'expand', 'success': True})

            summary = {
                'k': str(as_dual(k)),
                'exact': exact,
                'mu': coeffs.mu.to_string(),
                'nu': coeffs.nu.to_string(),
                'dh_drift': coeffs.drift.bulk.to_string("h"),
                'dh_diffusion': coeffs.diffusion.bulk.to_string("h"),
                'dhhat_drift_const': coeffs.drift.hat_const.to_string("h"),
                'dhhat_drift_linear': coeffs.drift.hat_linear.to_string("h"),
                'dhhat_diffusion': coeffs.diffusion.hat_const.to_string("h"),
            }

            # 步骤3: 漂移态是否落在零子模中
            if exact and 2 * self.config.delta + 1 != 0:
                logger.info("步骤3: 检验漂移态与零矢量的关系")
                _, _, chi = null_vector_level2(self.config.delta)
                drift_check = module_drift_check(a, b, chi)
                summary['drift_state'] = str(drift_check.drift)
                summary['drift_in_null_submodule'] = drift_check.in_null_submodule
                results['steps'].append({'step': 'drift_check', 'success': True})

            results['summary'] = summary
            results['report'] = dict(summary)
            results['exit_ok'] = True
            results['success'] = True
            logger.info("链接映射工作流执行成功")

        except Exception as e:
            logger.error(f"链接映射工作流执行失败: {str(e)}")
            results['error'] = str(e)
            results['success'] = False

        return results

    def execute(self) -> Dict[str, Any]:
        if self.config.command == "nullvector":
            return self.execute_nullvector()
        if self.config.command == "link":
            return self.execute_link()
        raise ValueError(f"symbolic workflow does not handle {self.config.command!r}")
