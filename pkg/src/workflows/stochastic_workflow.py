"""
随机工作流模块
simulate：导出耦合 Löwner 轨迹；martingale：观测量漂移报告；module-mc：截断模期望的 Monte Carlo 对照
"""

from fractions import Fraction
from typing import Any, Dict, List

from loguru import logger

from src.algebra.dualnum import InexactOperationError
from src.algebra.linkmap import kappa_dual, sle_walk
from src.algebra.virasoro import ModuleState, null_vector_level2, quotient_project
from src.configs.config import RunConfig
from src.stochastic.loewner import SdeParams, evolve_ensemble
from src.stochastic.martingale import mc_drift_report, module_expected_state, module_mc_state


# 模 Monte Carlo 的验收带：SE 倍数与 Euler 偏差系数
MODULE_SE_FACTOR = 4.0
MODULE_BIAS_FACTOR = 4.0


def module_tolerance(se: float, expected: float, dt: float, t: float) -> float:
    """
    |mean − expected| 的容许上限：SE 带加上 Euler 偏差

    E[Π(I + A dt + B dB)] = (I + A dt)^N，与 exp(tA) 在 2k 级上的相对偏差约为 k(k−1)dt/(2t)
    """
    bias = MODULE_BIAS_FACTOR * dt * (1.0 + abs(expected) / t) if t > 0 else 0.0
    return MODULE_SE_FACTOR * se + bias


class StochasticWorkflow:
    """随机模拟工作流"""

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

    def sde_params(self, stop_level: float = 0.0) -> SdeParams:
        c = self.config
        return SdeParams(
            kappa=float(c.kappa),
            kappa_hat=float(c.kappa_hat),
            dt=c.dt,
            t_max=c.t_max,
            swallow_eps=c.swallow_eps,
            seed=c.seed,
            stop_level=stop_level,
        )

    def execute_simulate(self) -> Dict[str, Any]:
        """模拟路径集合并返回轨迹快照"""
        c = self.config
        logger.info(f"开始执行轨迹模拟工作流，{c.n_paths} 条路径，{len(c.points)} 个种子点")
        results = self._new_results()

        try:
            # 步骤1: 积分耦合方程
            logger.info("步骤1: 积分耦合 Löwner 方程")
            ensemble = evolve_ensemble(
                c.points, self.sde_params(), c.checkpoints, c.n_paths,
                workers=c.workers, block_size=c.block_size,
            )
            results['steps'].append({'step': 'evolve', 'success': True})

            results['report'] = ensemble
            results['summary'] = {
                'n_paths': c.n_paths,
                'n_points': len(c.points),
                'n_checkpoints': len(ensemble.checkpoints),
                'n_rows': c.n_paths * len(c.points) * len(ensemble.checkpoints),
                'absorbed_fraction': ensemble.absorbed_fraction(),
            }
            results['exit_ok'] = True
            results['success'] = True
            logger.info("轨迹模拟工作流执行成功")

        except Exception as e:
            logger.error(f"轨迹模拟工作流执行失败: {str(e)}")
            results['error'] = str(e)
            results['success'] = False

        return results

    def execute_martingale(self) -> Dict[str, Any]:
        """观测量 M 的漂移检验"""
        c = self.config
        logger.info(f"开始执行鞅性检验工作流，Δ={c.delta}, κ={c.kappa}, κ̂={c.kappa_hat}")
        results = self._new_results()

        try:
            # 步骤1: Monte Carlo 漂移报告
            logger.info("步骤1: 生成 Monte Carlo 漂移报告")
            report = mc_drift_report(
                c.points, c.delta, self.sde_params(stop_level=c.stop_level), c.n_paths, c.checkpoints,
                workers=c.workers, block_size=c.block_size, clip_quantile=c.clip_quantile,
            )
            results['steps'].append({'step': 'mc_drift', 'success': True})

            # 步骤2: 判定
            logger.info("步骤2: 按 3σ/5σ 阈值判定")
            verdict = report.verdict()
            if verdict != "pass":
                logger.warning(f"漂移检验结果: {verdict}, max|z|={report.max_abs_z():.3f}")
            results['steps'].append({'step': 'verdict', 'verdict': verdict, 'success': True})

            results['report'] = report
            results['summary'] = {
                'null_hypothesis': report.null_hypothesis,
                'verdict': verdict,
                'max_abs_z': report.max_abs_z(),
                'absorbed_counts': report.absorbed_counts,
                'clipped_counts': report.clipped_counts,
            }
            results['exit_ok'] = True
            results['success'] = True
            logger.info("鞅性检验工作流执行成功")

        except Exception as e:
            logger.error(f"鞅性检验工作流执行失败: {str(e)}")
            results['error'] = str(e)
            results['success'] = False

        return results

    def execute_module_mc(self) -> Dict[str, Any]:
        """截断模上 E[G_t|Δ+θ⟩] 的确定性解与 Monte Carlo 对照"""
        c = self.config
        t = c.horizon
        logger.info(f"开始执行模 Monte Carlo 工作流，Δ={c.delta}, t={t}, cutoff={c.level_cutoff}")
        results = self._new_results()

        try:
            # 步骤1: 游走系数与模上下文
            logger.info("步骤1: 构造游走系数")
            _, _, chi = null_vector_level2(c.delta)
            ctx = chi.context
            k = kappa_dual(c.kappa, c.kappa_hat)
            try:
                a, b = sle_walk(k)
                exact = True
                t_exact = Fraction(str(t))
            except InexactOperationError:
                a, b = sle_walk(k.to_float())
                exact = False
                t_exact = t
            results['steps'].append({'step': 'walk', 'exact': exact, 'success': True})

            # 步骤2: 确定性期望
            logger.info("步骤2: 计算 exp(tA)|Δ+θ⟩")
            expected = module_expected_state(t_exact, c.level_cutoff, a, b, ctx)
            conserved = None
            if exact:
                projected = quotient_project(expected, chi, c.level_cutoff)
                conserved = projected == ModuleState.highest_weight(ctx)
            results['steps'].append({'step': 'oracle', 'conserved': conserved, 'success': True})

            # 步骤3: Monte Carlo
            logger.info("步骤3: 矩阵 SDE Monte Carlo")
            mc = module_mc_state(
                t, c.level_cutoff, a, b, ctx, c.n_paths, c.seed, dt=c.dt,
                workers=c.workers, block_size=c.block_size,
            )
            results['steps'].append({'step': 'monte_carlo', 'success': True})

            # 步骤4: 逐系数比较
            logger.info("步骤4: 逐系数比较")
            rows: List[List[Any]] = []
            all_within = True
            for partition in _basis_union(expected, mc.mean):
                exp_c = expected.coefficient(partition)
                mean_c = mc.mean.coefficient(partition)
                se_c = mc.stderr.coefficient(partition)
                for name, e_val, m_val, s_val in (
                    ("bulk", exp_c.body, mean_c.body, se_c.body),
                    ("slope", exp_c.slope, mean_c.slope, se_c.slope),
                ):
                    e_val, m_val, s_val = float(e_val), float(m_val), float(s_val)
                    within = abs(m_val - e_val) <= module_tolerance(s_val, e_val, c.dt, t)
                    all_within &= within
                    rows.append([_partition_label(partition), name, e_val, m_val, s_val, within])

            if not all_within:
                logger.warning("部分系数超出容许带")
            results['report'] = {
                'columns': ["partition", "component", "expected", "mean", "se", "within"],
                'rows': rows,
                'n_paths': c.n_paths,
                'seed': c.seed,
                't': t,
                'conserved_in_quotient': conserved,
            }
            results['summary'] = {
                'n_coefficients': len(rows),
                'all_within': all_within,
                'conserved_in_quotient': conserved,
                'exact_oracle': exact,
            }
            results['exit_ok'] = True
            results['success'] = True
            logger.info("模 Monte Carlo 工作流执行成功")

        except Exception as e:
            logger.error(f"模 Monte Carlo 工作流执行失败: {str(e)}")
            results['error'] = str(e)
            results['success'] = False

        return results

    def execute(self) -> Dict[str, Any]:
        handlers = {
            "simulate": self.execute_simulate,
            "martingale": self.execute_martingale,
            "module-mc": self.execute_module_mc,
        }
        if self.config.command not in handlers:
            raise ValueError(f"stochastic workflow does not handle {self.config.command!r}")
        return handlers[self.config.command]()


def _basis_union(*states: ModuleState):
    seen = []
    for state in states:
        for partition in state.terms:
            if partition not in seen:
                seen.append(partition)
    return sorted(seen, key=lambda p: (sum(p), tuple(-x for x in p)))


def _partition_label(partition) -> str:
    """(2, 1, 1) -> "L-2L-1L-1"，空分拆为最高权态 "1" """
    return "".join(f"L-{p}" for p in partition) or "1"
