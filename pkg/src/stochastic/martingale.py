"""
鞅性检验模块
- 对偶漂移系数 D = h(k(2h+1) − 6) 的闭式计算
- 边界观测量 M = (f')^{Δ+θ} f^{−2(Δ+θ)} 的 Monte Carlo 漂移报告
- 截断模上 E[G_t|Δ+θ⟩] 的确定性解与矩阵 SDE 的 Monte Carlo 估计
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import special, stats

from src.algebra.dualnum import DualBranchError, DualScalar, as_dual, dual_pow
from src.algebra.virasoro import (
    Coefficients,
    ModuleContext,
    ModuleState,
    TruncatedOperator,
    check_vanishing,
    drift_state,
    quotient_project,
)
from .loewner import MapPointState, SdeParams, as_points, evolve_ensemble
from .streams import block_increments, run_blocks


WARN_SIGMA = 3.0
FAIL_SIGMA = 5.0
MIN_PATHS = 100

# 沿对偶方向对解析均值做中心差分的步长
SLOPE_STEP = 1e-6
LOCUS_TOL = 1e-9


class AbsorbedPointError(ValueError):
    """观测量在已吞没的点上无定义"""


class NonGradedWalkError(ValueError):
    """游走系数含非负指标，截断不再精确"""


class AllPathsAbsorbedError(RuntimeError):
    """某检查点上所有路径都被吞没"""


def drift_coefficient(h: Any, k: Any) -> DualScalar:
    """
    观测量 M 的对偶 Ito 漂移系数 D = h·(k·(2h+1) − 6)

    D 的两个分量同时为零当且仅当 k = 6/(2h+1)（或 h = 0）
    """
    h, k = as_dual(h), as_dual(k)
    return h * (k * (h * 2 + 1) - 6)


def classical_boundary_exponent(kappa: Any) -> Any:
    """经典 SLE 边界指数 h = (6−κ)/(2κ)"""
    if isinstance(kappa, float):
        return (6.0 - kappa) / (2.0 * kappa)
    kappa = Fraction(kappa)
    return (6 - kappa) / (2 * kappa)


def observable_arrays(h, h_hat, dh, dh_hat, delta: Any) -> DualScalar:
    """
    向量化的 M = (∂h + θ∂ĥ)^{Δ+θ} (h + θĥ)^{−2(Δ+θ)}

    Returns:
        主部与 θ 分量均为数组的对偶数
    """
    weight = DualScalar(Fraction(delta), Fraction(1))
    f = DualScalar(np.asarray(h), np.asarray(h_hat))
    fprime = DualScalar(np.asarray(dh), np.asarray(dh_hat))
    return dual_pow(fprime, weight) * dual_pow(f, weight * -2)


def observable_M(state: MapPointState, delta: Any, params: Optional[SdeParams] = None) -> DualScalar:
    """
    单个状态上的观测量 M

    Raises:
        AbsorbedPointError: 状态已被吞没
        DualBranchError: 实轴模式下 h ≤ 0
    """
    if state.swallowed:
        raise AbsorbedPointError(f"absorbed point: z0={state.z0} at t={state.t}")
    values = [state.h, state.h_hat, state.dh_dz, state.dh_hat_dz]
    if not any(isinstance(v, complex) for v in values) and state.h <= 0:
        raise DualBranchError(f"non-positive real h={state.h}: observable undefined on the real axis")
    m = observable_arrays(*[np.array([v]) for v in values], delta)
    cast = complex if np.iscomplexobj(m.body) or np.iscomplexobj(m.slope) else float
    return DualScalar(cast(m.body[0]), cast(m.slope[0]))


def _survival_mean(x: float, t: float, delta: float, kappa: float) -> float:
    """x^{−2Δ}·P(T₀ > t)，T₀ 为 1 + 4/κ − 4Δ 维 Bessel 过程从 x/√κ 出发的首中时"""
    m0 = x ** (-2.0 * delta)
    index = 0.5 - 2.0 / kappa + 2.0 * delta
    if t <= 0 or index <= 0:
        return m0
    return m0 * float(special.gammainc(index, x * x / (2.0 * kappa * t)))


def expected_observable_mean(
    x: float,
    t: float,
    delta: Any,
    kappa: float,
    kappa_hat: float,
) -> Optional[Tuple[float, float]]:
    """
    未停止的 E[M_t]（主部, θ 分量）的解析值

    主部零漂移 κ(2Δ+1) = 6 且 κ ≤ 4 时，M 是变测度密度：新测度下 h/√κ 为
    1 + 4/κ − 4Δ 维 Bessel 过程，维数小于 2，会在有限时间撞到 0，于是
    E[M_t] = x^{−2Δ}·P(T₀ > t) < M₀（严格局部鞅）。κ = 4、Δ = 1/4 时即 x^{−1/2}·erf(x/(2√(2t)))。
    θ 分量取上式沿 (Δ+τ, κ+τκ̂) 的 τ 导数（中心差分）。

    Returns:
        (bulk, slope)；不在主部零漂移轨迹上或 κ > 4 时返回 None
    """
    delta, kappa, kappa_hat = float(delta), float(kappa), float(kappa_hat)
    if kappa > 4 or abs(kappa * (2 * delta + 1) - 6) > LOCUS_TOL:
        return None
    bulk = _survival_mean(x, t, delta, kappa)
    step = SLOPE_STEP
    upper = _survival_mean(x, t, delta + step, kappa + step * kappa_hat)
    lower = _survival_mean(x, t, delta - step, kappa - step * kappa_hat)
    return bulk, (upper - lower) / (2 * step)


@dataclass
class McReport:
    """
    Monte Carlo 漂移报告

    components 中每一项为 {name, means, expected, ses, zscores}，列表长度等于检查点数；
    zscores = (means − expected)/ses，null_hypothesis 说明 expected 的来源
    """

    observable: str
    checkpoints: List[float]
    components: List[Dict[str, Any]]
    n_paths: int
    seed: int
    params: Dict[str, Any]
    absorbed_counts: List[int]
    max_abs: List[float]
    clipped_counts: List[int] = field(default_factory=list)
    null_hypothesis: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "McReport":
        return cls(
            observable=data["observable"],
            checkpoints=list(data["checkpoints"]),
            components=[dict(c) for c in data["components"]],
            n_paths=int(data["n_paths"]),
            seed=int(data["seed"]),
            params=dict(data["params"]),
            absorbed_counts=list(data["absorbed_counts"]),
            max_abs=list(data["max_abs"]),
            clipped_counts=list(data.get("clipped_counts", [])),
            null_hypothesis=data.get("null_hypothesis", ""),
        )

    def max_abs_z(self) -> float:
        values = [abs(z) for c in self.components for z in c["zscores"]]
        return max(values) if values else 0.0

    def p_values(self) -> Dict[str, List[float]]:
        """双侧正态尾概率 2·P(Z > |z|)"""
        return {c["name"]: [float(2 * stats.norm.sf(abs(z))) for z in c["zscores"]] for c in self.components}

    def verdict(self) -> str:
        """pass（全部 |z| < 3）/ warn（< 5）/ fail"""
        worst = self.max_abs_z()
        if worst < WARN_SIGMA:
            return "pass"
        if worst < FAIL_SIGMA:
            return "warn"
        return "fail"

    def component(self, name: str) -> Dict[str, Any]:
        for c in self.components:
            if c["name"] == name:
                return c
        raise KeyError(name)


def _zscores(means: np.ndarray, ses: np.ndarray, expected: np.ndarray) -> np.ndarray:
    """(mean − expected)/SE；SE 为零处（t=0 检查点）定义为 0"""
    diff = means - expected
    z = np.zeros_like(means)
    np.divide(diff, ses, out=z, where=ses > 0)
    return z


def null_hypothesis_of(params: SdeParams, delta: Any) -> Tuple[str, bool]:
    """
    漂移报告检验的零假设

    Returns:
        (说明文字, 是否使用解析均值)
    """
    if params.stop_level > 0:
        return f"stopped: E[M(t^T)] = M(0), T = first grid time with h <= {params.stop_level!r}", False
    if expected_observable_mean(1.0, 1.0, delta, params.kappa, params.kappa_hat) is not None:
        return "local: E[M(t)] = M(0) P(T0 > t), T0 = hitting time of Bessel(1 + 4/kappa - 4 delta)", True
    return "martingale: E[M(t)] = M(0)", False


def mc_drift_report(
    points: Sequence[float],
    delta: Any,
    params: SdeParams,
    n_paths: int,
    checkpoints: Sequence[float],
    workers: int = 1,
    block_size: int = 1000,
    clip_quantile: Optional[float] = None,
) -> McReport:
    """
    观测量 M 的 Monte Carlo 漂移报告

    每个种子点分别给出主部 (bulk) 与 θ 分量 (slope) 的均值、期望值、标准误差和 z 值。
    params.stop_level > 0 时检验停止过程 M(t∧T)，期望值为 t=0 的值；
    否则在主部零漂移且 κ ≤ 4 时用 expected_observable_mean 的解析均值，其余情形仍取 t=0 的值。
    被吞没或停止的路径按最后的有效状态计入，并按检查点计数；
    超过截断分位数的路径单独计数，不参与统计。

    Raises:
        ValueError: n_paths < 100、种子点不是正实数或 stop_level 不小于种子点
        AllPathsAbsorbedError: 某个 (检查点, 点) 上全部路径都已被吞没
    """
    if n_paths < MIN_PATHS:
        raise ValueError(f"n_paths must be at least {MIN_PATHS}, got {n_paths}")
    z0 = as_points(points)
    if np.iscomplexobj(z0) or np.any(z0 <= 0):
        raise ValueError(f"observable seeds must be positive reals, got {list(points)}")
    if params.stop_level >= z0.min():
        raise ValueError(f"stop_level={params.stop_level} must lie below every seed point")
    if len(checkpoints) and float(checkpoints[0]) != 0.0:
        raise ValueError(f"drift z-scores are taken against t=0, first checkpoint is {checkpoints[0]}")
    if clip_quantile is not None and not 0 < clip_quantile <= 1:
        raise ValueError(f"clip_quantile must lie in (0, 1], got {clip_quantile}")

    ensemble = evolve_ensemble(z0, params, checkpoints, n_paths, workers=workers, block_size=block_size)
    n_ck = len(ensemble.checkpoints)
    absorbed = ensemble.swallowed
    m = observable_arrays(ensemble.h, ensemble.h_hat, ensemble.dh_dz, ensemble.dh_hat_dz, delta)
    bulk, slope = np.asarray(m.body, dtype=float), np.asarray(m.slope, dtype=float)

    clipped = np.zeros(absorbed.shape, dtype=bool)
    if clip_quantile is not None:
        for c in range(n_ck):
            for p in range(len(z0)):
                threshold = np.quantile(np.abs(bulk[:, c, p]), clip_quantile)
                clipped[:, c, p] = np.abs(bulk[:, c, p]) > threshold
    keep = ~clipped
    null_hypothesis, analytic = null_hypothesis_of(params, delta)

    components: List[Dict[str, Any]] = []
    for p, x in enumerate(z0):
        oracle = None
        if analytic:
            oracle = np.array([
                expected_observable_mean(float(x), t, delta, params.kappa, params.kappa_hat)
                for t in ensemble.checkpoints
            ]).reshape(n_ck, 2)
        for column, (name, values) in enumerate((("bulk", bulk), ("slope", slope))):
            means = np.empty(n_ck)
            ses = np.empty(n_ck)
            for c in range(n_ck):
                sample = values[keep[:, c, p], c, p]
                if absorbed[:, c, p].all():
                    raise AllPathsAbsorbedError(
                        f"all paths absorbed at t={ensemble.checkpoints[c]} for x={x}"
                    )
                means[c] = sample.mean()
                ses[c] = stats.sem(sample) if sample.size > 1 else 0.0
            if oracle is not None:
                expected = oracle[:, column]
            else:
                expected = np.full(n_ck, means[0] if n_ck else 0.0)
            components.append({
                "name": f"{name}[x={float(x)}]",
                "means": means.tolist(),
                "expected": expected.tolist(),
                "ses": ses.tolist(),
                "zscores": _zscores(means, ses, expected).tolist() if n_ck else [],
            })

    absorbed_counts = [int(n) for n in ensemble.swallowed.sum(axis=(0, 2))] if n_ck else []
    clipped_counts = [int(n) for n in clipped.sum(axis=(0, 2))] if n_ck else []
    max_abs = [float(np.max(np.abs(bulk[:, c, :]), initial=0.0)) for c in range(n_ck)]
    if any(absorbed_counts):
        logger.warning(f"存在被吞没的路径（按停止值计入）: {absorbed_counts}")
    if any(clipped_counts):
        logger.warning(f"按分位数 {clip_quantile} 截断的路径: {clipped_counts}")

    params_echo = dict(params.to_dict(), delta=str(Fraction(delta)), points=[float(x) for x in z0])
    report = McReport(
        observable="M=(f')^(delta+theta) f^(-2(delta+theta))",
        checkpoints=list(ensemble.checkpoints),
        components=components,
        n_paths=n_paths,
        seed=params.seed,
        params=params_echo,
        absorbed_counts=absorbed_counts,
        max_abs=max_abs,
        clipped_counts=clipped_counts,
        null_hypothesis=null_hypothesis,
    )
    logger.info(f"漂移报告完成 [{null_hypothesis}]: max|z|={report.max_abs_z():.3f}, verdict={report.verdict()}")
    return report


def exceedance_fraction(reports: Sequence[McReport], threshold: float = WARN_SIGMA) -> float:
    """所有报告的全部 (检查点, 分量, 点) 单元中 |z| > threshold 的比例"""
    cells = [abs(z) for r in reports for c in r.components for z in c["zscores"]]
    if not cells:
        return 0.0
    return sum(z > threshold for z in cells) / len(cells)


# ---------------------------------------------------------------------------
# 截断模上的期望演化
# ---------------------------------------------------------------------------

def require_graded(a: Coefficients, b: Coefficients) -> None:
    for n in list(a) + list(b):
        if n >= 0:
            raise NonGradedWalkError(f"non-graded walk not supported: coefficient index {n} is not negative")


def module_expected_state(
    t: Any,
    level_cutoff: int,
    a: Coefficients,
    b: Coefficients,
    ctx: ModuleContext,
) -> ModuleState:
    """
    E[G_t|Δ+θ⟩] = exp(tA)|Δ+θ⟩，A 为 α₀ + ½β² 在截断基上的矩阵

    Raises:
        NonGradedWalkError: 系数含非负指标
    """
    if level_cutoff < 2:
        raise ValueError(f"level_cutoff must be at least 2, got {level_cutoff}")
    require_graded(a, b)
    operator = TruncatedOperator.walk_generator(a, b, ctx, level_cutoff)
    return operator.exp_apply(t, ModuleState.highest_weight(ctx))


class ModuleMcResult(NamedTuple):
    """模 Monte Carlo 的样本均值与逐系数标准误差（body/slope 分别给出）"""

    mean: ModuleState
    stderr: ModuleState
    n_paths: int
    dt: float


def _module_block(
    drift: np.ndarray,
    noise: np.ndarray,
    start_vector: np.ndarray,
    n_steps: int,
    dt: float,
    seed: int,
    start: int,
    stop: int,
) -> np.ndarray:
    """
    一块路径上的 V_N|Δ+θ⟩，V_N = Π(I + A dt + B dB_k)

    从右向左作用：w ← (I + A dt + B dB_k) w，k = N, …, 1
    """
    increments = block_increments(seed, start, stop, n_steps, dt)
    w = np.tile(start_vector, (stop - start, 1))
    drift_t, noise_t = drift.T, noise.T
    for k in range(n_steps - 1, -1, -1):
        w = w + dt * (w @ drift_t) + increments[:, k:k + 1] * (w @ noise_t)
    return w


def module_mc_state(
    t: float,
    level_cutoff: int,
    a: Coefficients,
    b: Coefficients,
    ctx: ModuleContext,
    n_paths: int,
    seed: int,
    dt: float = 1e-3,
    workers: int = 1,
    block_size: int = 1000,
) -> ModuleMcResult:
    """
    矩阵 SDE dG = G(A dt + B dB) 的 Euler–Maruyama 样本均值 E[G_t|Δ+θ⟩]

    A、B 分别是 α₀ + ½β² 与 β 在截断基上的矩阵，按 [[X,0],[Y,X]] 展开为实矩阵
    """
    if level_cutoff < 2:
        raise ValueError(f"level_cutoff must be at least 2, got {level_cutoff}")
    if n_paths < 2:
        raise ValueError(f"n_paths must be at least 2, got {n_paths}")
    if t < 0 or dt <= 0:
        raise ValueError(f"need t ≥ 0 and dt > 0, got t={t}, dt={dt}")
    require_graded(a, b)

    drift_op = TruncatedOperator.walk_generator(a, b, ctx, level_cutoff)
    noise_op = TruncatedOperator.linear(b, ctx, level_cutoff)
    drift, noise = drift_op.to_block_matrix(), noise_op.to_block_matrix()
    d = drift_op.dimension
    start_vector = np.zeros(2 * d)
    start_vector[0] = 1.0

    n_steps = int(round(t / dt))
    if n_steps == 0:
        samples = np.tile(start_vector, (n_paths, 1))
    else:
        block_fn = partial(_module_block, drift, noise, start_vector, n_steps, dt, int(seed))
        samples = np.concatenate(run_blocks(block_fn, n_paths, block_size, workers), axis=0)

    mean = samples.mean(axis=0)
    se = stats.sem(samples, axis=0) if n_steps else np.zeros(2 * d)
    mean_state = drift_op.state_of([DualScalar(float(mean[i]), float(mean[d + i])) for i in range(d)])
    se_state = drift_op.state_of([DualScalar(float(se[i]), float(se[d + i])) for i in range(d)])
    logger.debug(f"模 Monte Carlo 完成: {n_paths} 条路径, {n_steps} 步, 维数 {d}")
    return ModuleMcResult(mean_state, se_state, n_paths, dt)


class DriftCheck(NamedTuple):
    drift: ModuleState
    projected: ModuleState
    in_null_submodule: bool


def module_drift_check(a: Coefficients, b: Coefficients, chi: ModuleState) -> DriftCheck:
    """
    精确检验 (α₀ + ½β²)|Δ+θ⟩ 是否落在零矢量生成的子模中

    Raises:
        NotNullVectorError: chi 不是零矢量
    """
    drift = drift_state(a, b, chi.context)
    cutoff = max(drift.max_level(), 2)
    projected = quotient_project(drift, chi, cutoff)
    in_null = projected.is_zero()
    if not in_null:
        logger.warning(f"漂移态不在零子模中，商模投影残差: {projected}")
    return DriftCheck(drift, projected, in_null and check_vanishing(chi).is_null)
