"""
耦合随机 Löwner 方程积分模块
对 f_t(z, τ) = h_t(z) + τĥ_t(z) 做 Euler–Maruyama 积分，同时跟踪 ∂_z h 与 ∂_z ĥ：

    dh   = (2/h)dt − √κ dB
    dĥ   = −(2ĥ/h²)dt − (κ̂/(2√κ)) dB
    d∂h  = −(2∂h/h²)dt
    d∂ĥ  = (−2∂ĥ/h² + 4ĥ∂h/h³)dt

实轴点每步先按 Bessel 首中概率判定吞没（κ > 4 时非零）；stop_level > 0 时 |h| ≤ stop_level 的点在网格时刻停止。
"""

import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import special

from .streams import block_increments, block_uniforms, path_increments, run_blocks


# 步长相对 |h| 过大时的细分阈值
SUBSTEP_ETA = 0.25
NEAR_SWALLOW_FACTOR = 10.0

TRAJECTORY_HEADER = [
    "path", "point_index", "t",
    "Re_h", "Im_h", "Re_hhat", "Im_hhat",
    "Re_dh", "Im_dh", "Re_dhhat", "Im_dhhat",
    "B", "swallowed",
]


@dataclass(frozen=True)
class SdeParams:
    """耦合方程参数：k(τ) = κ + τκ̂"""

    kappa: float
    kappa_hat: float = 0.0
    dt: float = 1e-3
    t_max: float = 0.5
    swallow_eps: float = 1e-6
    seed: int = 0
    max_substep_depth: int = 8
    stop_level: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "kappa_hat", float(self.kappa_hat))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "swallow_eps", float(self.swallow_eps))
        object.__setattr__(self, "stop_level", float(self.stop_level))
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.dt > self.t_max:
            raise ValueError(f"dt={self.dt} exceeds t_max={self.t_max}")
        if not self.swallow_eps > 0:
            raise ValueError(f"swallow_eps must be positive, got {self.swallow_eps}")
        if self.stop_level < 0:
            raise ValueError(f"stop_level must be non-negative, got {self.stop_level}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def sqrt_kappa(self) -> float:
        return math.sqrt(self.kappa)

    @property
    def hat_diffusion(self) -> float:
        """κ̂/(2√κ)"""
        return self.kappa_hat / (2 * self.sqrt_kappa)

    @property
    def hit_index(self) -> float:
        """实轴上 h/√κ 是 1 + 4/κ 维 Bessel 过程，指数 1/2 − 2/κ 为正时会撞到 0"""
        return 0.5 - 2.0 / self.kappa

    @property
    def absorbs_on_real_axis(self) -> bool:
        return self.hit_index > 0

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def step_index(self, t: float) -> int:
        return int(round(t / self.dt))

    def with_dt(self, dt: float) -> "SdeParams":
        return replace(self, dt=dt)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa,
            "kappa_hat": self.kappa_hat,
            "dt": self.dt,
            "t_max": self.t_max,
            "swallow_eps": self.swallow_eps,
            "seed": self.seed,
            "stop_level": self.stop_level,
        }


@dataclass(frozen=True)
class MapPointState:
    """单个种子点在时刻 t 的状态"""

    z0: Any
    h: Any
    h_hat: Any
    dh_dz: Any
    dh_hat_dz: Any
    t: float = 0.0
    swallowed: bool = False

    @classmethod
    def initial(cls, z0: Any) -> "MapPointState":
        zero = 0j if isinstance(z0, complex) else 0.0
        one = 1 + 0j if isinstance(z0, complex) else 1.0
        return cls(z0=z0, h=z0, h_hat=zero, dh_dz=one, dh_hat_dz=zero, t=0.0, swallowed=False)


@dataclass
class _Batch:
    """一维数组形式的一批点，原地推进"""

    h: np.ndarray
    h_hat: np.ndarray
    dh: np.ndarray
    dh_hat: np.ndarray
    swallowed: np.ndarray

    @classmethod
    def initial(cls, z0: np.ndarray) -> "_Batch":
        z0 = np.array(z0)
        return cls(
            h=z0.copy(),
            h_hat=np.zeros_like(z0),
            dh=np.ones_like(z0),
            dh_hat=np.zeros_like(z0),
            swallowed=np.zeros(z0.shape, dtype=bool),
        )

    @classmethod
    def from_state(cls, state: MapPointState) -> "_Batch":
        dtype = complex if np.iscomplexobj(np.asarray([state.h, state.h_hat, state.dh_dz, state.dh_hat_dz])) else float
        return cls(
            h=np.array([state.h], dtype=dtype),
            h_hat=np.array([state.h_hat], dtype=dtype),
            dh=np.array([state.dh_dz], dtype=dtype),
            dh_hat=np.array([state.dh_hat_dz], dtype=dtype),
            swallowed=np.array([state.swallowed]),
        )

    def take(self, idx: np.ndarray) -> "_Batch":
        return _Batch(self.h[idx], self.h_hat[idx], self.dh[idx], self.dh_hat[idx], self.swallowed[idx])

    def put(self, idx: np.ndarray, other: "_Batch") -> None:
        self.h[idx] = other.h
        self.h_hat[idx] = other.h_hat
        self.dh[idx] = other.dh
        self.dh_hat[idx] = other.dh_hat
        self.swallowed[idx] = other.swallowed

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.h)


def _euler_update(batch: _Batch, idx: np.ndarray, dB: np.ndarray, dt: float, params: SdeParams) -> None:
    """
    对 idx 处的点做一步 Euler–Maruyama

    越过奇点（实轴上 h 变号或 ∂h 不再为正）的点标记为吞没，并保留上一步的值
    """
    h = batch.h[idx]
    hh = batch.h_hat[idx]
    dh = batch.dh[idx]
    dhh = batch.dh_hat[idx]
    inv = 1.0 / h
    inv2 = inv * inv

    new_h = h + 2.0 * inv * dt - params.sqrt_kappa * dB
    new_hh = hh - 2.0 * hh * inv2 * dt - params.hat_diffusion * dB
    new_dh = dh - 2.0 * dh * inv2 * dt
    new_dhh = dhh + (-2.0 * dhh * inv2 + 4.0 * hh * dh * inv2 * inv) * dt

    valid = np.isfinite(new_h) & np.isfinite(new_hh) & np.isfinite(new_dh) & np.isfinite(new_dhh)
    valid &= np.abs(new_h) >= params.swallow_eps
    if batch.is_real:
        valid &= np.sign(new_h) == np.sign(h)
        valid &= new_dh > 0

    ok = idx[valid]
    batch.h[ok] = new_h[valid]
    batch.h_hat[ok] = new_hh[valid]
    batch.dh[ok] = new_dh[valid]
    batch.dh_hat[ok] = new_dhh[valid]
    batch.swallowed[idx[~valid]] = True


def _advance(batch: _Batch, dB: np.ndarray, dt: float, params: SdeParams, depth: int = 0) -> None:
    """
    把整批点推进 dt；靠近奇点或步长相对 |h| 过大的点递归折半细分（Brownian 增量均分）
    """
    abs_h = np.abs(batch.h)
    near = ~batch.swallowed & (abs_h < params.swallow_eps)
    batch.swallowed[near] = True
    alive = ~batch.swallowed
    if not alive.any():
        return

    if depth < params.max_substep_depth:
        stiff = alive & (
            (abs_h < NEAR_SWALLOW_FACTOR * params.swallow_eps)
            | (2.0 * dt > SUBSTEP_ETA * abs_h ** 2)
            | (params.sqrt_kappa * np.abs(dB) > SUBSTEP_ETA * abs_h)
        )
    else:
        stiff = np.zeros_like(alive)

    plain = np.flatnonzero(alive & ~stiff)
    if plain.size:
        _euler_update(batch, plain, dB[plain], dt, params)

    refine = np.flatnonzero(stiff)
    if refine.size:
        sub = batch.take(refine)
        half = dB[refine] / 2.0
        _advance(sub, half, dt / 2.0, params, depth + 1)
        _advance(sub, half, dt / 2.0, params, depth + 1)
        batch.put(refine, sub)


def bessel_hit_probability(h: Any, dt: float, kappa: float) -> np.ndarray:
    """
    实轴点在 dt 内被吞没的概率

    h/√κ 是 d = 1 + 4/κ 维 Bessel 过程；d < 2 时从 x 出发的首中时 T₀ 满足
    T₀ = x²/(2G)，G ~ Gamma(1 − d/2)，因此 P(T₀ ≤ dt) = Q(1/2 − 2/κ, h²/(2κ dt))，
    Q 为正则化上不完全 Gamma 函数。κ ≤ 4 时恒为 0。
    """
    h = np.abs(np.asarray(h, dtype=float))
    index = 0.5 - 2.0 / kappa
    if index <= 0:
        return np.zeros_like(h)
    return special.gammaincc(index, h ** 2 / (2.0 * kappa * dt))


def _absorb_hits(batch: _Batch, u: np.ndarray, dt: float, params: SdeParams) -> None:
    """按 Bessel 首中概率吞没实轴点（u 为每个点的 U(0,1) 样本），状态停在步首"""
    alive = np.flatnonzero(~batch.swallowed)
    if not alive.size:
        return
    p = bessel_hit_probability(batch.h[alive], dt, params.kappa)
    batch.swallowed[alive[u[alive] < p]] = True


def _apply_stop(batch: _Batch, params: SdeParams) -> None:
    """|h| ≤ stop_level 的点在当前网格时刻停止"""
    if params.stop_level > 0:
        batch.swallowed |= np.abs(batch.h) <= params.stop_level


def step(
    state: MapPointState,
    dB: float,
    dt: float,
    params: SdeParams,
    u: Optional[float] = None,
) -> MapPointState:
    """
    单点单步更新

    Args:
        u: 可选的 U(0,1) 样本；给出时先按 Bessel 首中概率判定实轴点是否被吞没

    Returns:
        新状态；已吞没的状态原样返回
    """
    if state.swallowed:
        return state
    batch = _Batch.from_state(state)
    if u is not None and batch.is_real:
        _absorb_hits(batch, np.array([float(u)]), float(dt), params)
    _advance(batch, np.array([float(dB)]), float(dt), params)
    return _state_from(batch, 0, state.z0, state.t + dt)


def _state_from(batch: _Batch, i: int, z0: Any, t: float) -> MapPointState:
    cast = complex if np.iscomplexobj(batch.h) else float
    return MapPointState(
        z0=z0,
        h=cast(batch.h[i]),
        h_hat=cast(batch.h_hat[i]),
        dh_dz=cast(batch.dh[i]),
        dh_hat_dz=cast(batch.dh_hat[i]),
        t=float(t),
        swallowed=bool(batch.swallowed[i]),
    )


def as_points(points: Sequence[Any]) -> np.ndarray:
    """种子点数组：全部为实数时用 float，否则用 complex"""
    values = list(points)
    if not values:
        raise ValueError("empty point list")
    if np.iscomplexobj(np.asarray(values)):
        return np.asarray(values, dtype=complex)
    return np.asarray(values, dtype=float)


def validate_checkpoints(checkpoints: Sequence[float], t_max: float) -> List[float]:
    times = [float(t) for t in checkpoints]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError(f"checkpoints must be sorted, got {times}")
    if times and (times[0] < 0 or times[-1] > t_max + 1e-12):
        raise ValueError(f"checkpoints must lie within [0, {t_max}], got {times}")
    return times


def _integrate(
    z0: np.ndarray,
    increments: np.ndarray,
    dt: float,
    params: SdeParams,
    record_steps: Sequence[int],
    uniforms: Optional[np.ndarray] = None,
) -> Dict[str, np.ndarray]:
    """
    在共享增量上积分一组路径

    Args:
        z0: 种子点，形状 (n_points,)
        increments: Brownian 增量，形状 (n_paths, n_steps)
        record_steps: 需要快照的步号（已排序）
        uniforms: 可选的吞没判定样本，形状同 increments；同一路径上的各点共用

    Returns:
        h/h_hat/dh_dz/dh_hat_dz/swallowed 形状 (n_paths, n_records, n_points)，brownian 形状 (n_paths, n_records)
    """
    n_paths, n_steps = increments.shape
    n_points = z0.shape[0]
    n_records = len(record_steps)
    batch = _Batch.initial(np.tile(z0, n_paths))
    brownian_path = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)

    shape = (n_paths, n_records, n_points)
    out = {
        "h": np.empty(shape, dtype=z0.dtype),
        "h_hat": np.empty(shape, dtype=z0.dtype),
        "dh_dz": np.empty(shape, dtype=z0.dtype),
        "dh_hat_dz": np.empty(shape, dtype=z0.dtype),
        "swallowed": np.empty(shape, dtype=bool),
        "brownian": np.empty((n_paths, n_records)),
    }

    def _record(slot: int, step_no: int) -> None:
        out["h"][:, slot, :] = batch.h.reshape(n_paths, n_points)
        out["h_hat"][:, slot, :] = batch.h_hat.reshape(n_paths, n_points)
        out["dh_dz"][:, slot, :] = batch.dh.reshape(n_paths, n_points)
        out["dh_hat_dz"][:, slot, :] = batch.dh_hat.reshape(n_paths, n_points)
        out["swallowed"][:, slot, :] = batch.swallowed.reshape(n_paths, n_points)
        out["brownian"][:, slot] = brownian_path[:, step_no]

    _apply_stop(batch, params)
    slot = 0
    while slot < n_records and record_steps[slot] == 0:
        _record(slot, 0)
        slot += 1
    for k in range(n_steps):
        if slot >= n_records:
            break
        dB = np.repeat(increments[:, k], n_points)
        if uniforms is not None:
            _absorb_hits(batch, np.repeat(uniforms[:, k], n_points), dt, params)
        _advance(batch, dB, dt, params)
        _apply_stop(batch, params)
        while slot < n_records and record_steps[slot] == k + 1:
            _record(slot, k + 1)
            slot += 1
    return out


def _simulate_block(
    z0: np.ndarray,
    params: SdeParams,
    record_steps: Tuple[int, ...],
    start: int,
    stop: int,
) -> Dict[str, np.ndarray]:
    increments = block_increments(params.seed, start, stop, params.n_steps, params.dt)
    uniforms = None
    if params.absorbs_on_real_axis and not np.iscomplexobj(z0):
        uniforms = block_uniforms(params.seed, start, stop, params.n_steps)
    return _integrate(z0, increments, params.dt, params, record_steps, uniforms)


@dataclass
class EnsembleTrajectory:
    """
    路径集合的检查点快照

    数组形状为 (n_paths, n_checkpoints, n_points)，brownian 为 (n_paths, n_checkpoints)
    """

    points: np.ndarray
    checkpoints: List[float]
    params: SdeParams
    h: np.ndarray
    h_hat: np.ndarray
    dh_dz: np.ndarray
    dh_hat_dz: np.ndarray
    swallowed: np.ndarray
    brownian: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.h.shape[0]

    def state_at(self, path: int, checkpoint: int, point: int) -> MapPointState:
        return MapPointState(
            z0=self.points[point].item(),
            h=self.h[path, checkpoint, point].item(),
            h_hat=self.h_hat[path, checkpoint, point].item(),
            dh_dz=self.dh_dz[path, checkpoint, point].item(),
            dh_hat_dz=self.dh_hat_dz[path, checkpoint, point].item(),
            t=self.checkpoints[checkpoint],
            swallowed=bool(self.swallowed[path, checkpoint, point]),
        )

    def absorbed_counts(self) -> np.ndarray:
        """每个 (检查点, 点) 上被吞没的路径数"""
        return self.swallowed.sum(axis=0)

    def absorbed_fraction(self) -> float:
        if self.swallowed.size == 0:
            return 0.0
        return float(self.swallowed[:, -1, :].mean())

    def g_frame(self) -> Tuple[np.ndarray, np.ndarray]:
        B = self.brownian[:, :, None]
        return self.h + self.params.sqrt_kappa * B, self.h_hat + self.params.hat_diffusion * B


class TrajectoryRecord(NamedTuple):
    """单条 Brownian 路径驱动下的结果：states[i][j] 为第 i 个检查点、第 j 个点"""

    checkpoints: List[float]
    states: List[List[MapPointState]]
    brownian: List[float]


def evolve_ensemble(
    points: Sequence[Any],
    params: SdeParams,
    checkpoints: Sequence[float],
    n_paths: int,
    workers: int = 1,
    block_size: int = 1000,
) -> EnsembleTrajectory:
    """
    模拟 n_paths 条独立路径，第 i 条路径的增量只依赖 (params.seed, i)

    Raises:
        ValueError: 点列表为空或检查点不合法
    """
    z0 = as_points(points)
    times = validate_checkpoints(checkpoints, params.t_max)
    record_steps = tuple(params.step_index(t) for t in times)
    block_fn = partial(_simulate_block, z0, params, record_steps)
    blocks = run_blocks(block_fn, n_paths, block_size, workers)
    merged = {key: np.concatenate([b[key] for b in blocks], axis=0) for key in blocks[0]}
    ensemble = EnsembleTrajectory(points=z0, checkpoints=times, params=params, **merged)
    if times:
        logger.debug(f"集合模拟完成: {n_paths} 条路径, 末检查点吞没比例 {ensemble.absorbed_fraction():.4f}")
    return ensemble


def evolve(points: Sequence[Any], params: SdeParams, checkpoints: Sequence[float]) -> TrajectoryRecord:
    """用主种子的第 0 条路径驱动所有点，返回各检查点的状态与 B_t"""
    ensemble = evolve_ensemble(points, params, checkpoints, n_paths=1)
    states = [
        [ensemble.state_at(0, c, p) for p in range(len(ensemble.points))]
        for c in range(len(ensemble.checkpoints))
    ]
    return TrajectoryRecord(ensemble.checkpoints, states, [float(b) for b in ensemble.brownian[0]])


def to_g_frame(state: MapPointState, B_t: float, params: SdeParams) -> Tuple[Any, Any]:
    """g = h + √κ·B_t，ĝ = ĥ + (κ̂/(2√κ))·B_t"""
    return state.h + params.sqrt_kappa * B_t, state.h_hat + params.hat_diffusion * B_t


def from_g_frame(g: Any, g_hat: Any, B_t: float, params: SdeParams) -> Tuple[Any, Any]:
    return g - params.sqrt_kappa * B_t, g_hat - params.hat_diffusion * B_t


def g_frame_ode_rhs(g: Any, g_hat: Any, B_t: float, params: SdeParams) -> Tuple[Any, Any]:
    """
    g 坐标下的常微分方程右端：∂_t g = 2/(g − √κB)，∂_t ĝ = −2(ĝ − κ̂B/(2√κ))/(g − √κB)²
    """
    h, h_hat = from_g_frame(g, g_hat, B_t, params)
    return 2.0 / h, -2.0 * h_hat / h ** 2


def upper_half_plane_grid(
    n_re: int = 5,
    n_im: int = 4,
    re_range: Tuple[float, float] = (-1.0, 1.0),
    im_range: Tuple[float, float] = (0.25, 1.0),
) -> np.ndarray:
    """上半平面的矩形网格种子点（按行展开）"""
    if im_range[0] <= 0:
        raise ValueError("grid must lie strictly in the upper half-plane")
    re, im = np.meshgrid(np.linspace(*re_range, n_re), np.linspace(*im_range, n_im))
    return (re + 1j * im).ravel()


def trajectory_rows(ensemble: EnsembleTrajectory) -> Iterator[Dict[str, Any]]:
    """按 (路径, 点, 检查点) 顺序产生轨迹 CSV 行"""
    for path in range(ensemble.n_paths):
        for point in range(len(ensemble.points)):
            for c, t in enumerate(ensemble.checkpoints):
                h = complex(ensemble.h[path, c, point])
                hh = complex(ensemble.h_hat[path, c, point])
                dh = complex(ensemble.dh_dz[path, c, point])
                dhh = complex(ensemble.dh_hat_dz[path, c, point])
                yield {
                    "path": path,
                    "point_index": point,
                    "t": t,
                    "Re_h": h.real, "Im_h": h.imag,
                    "Re_hhat": hh.real, "Im_hhat": hh.imag,
                    "Re_dh": dh.real, "Im_dh": dh.imag,
                    "Re_dhhat": dhh.real, "Im_dhhat": dhh.imag,
                    "B": float(ensemble.brownian[path, c]),
                    "swallowed": int(ensemble.swallowed[path, c, point]),
                }


class StrongOrderResult(NamedTuple):
    dts: List[float]
    errors: List[float]
    order: float


def estimate_strong_order(
    z0: Any,
    params: SdeParams,
    n_paths: int = 200,
    levels: int = 3,
    refinement: int = 8,
) -> StrongOrderResult:
    """
    固定 Brownian 路径下的强收敛阶估计

    参考解用 dt/refinement；粗网格 dt, dt/2, … 的增量由参考增量分组求和得到。
    误差为终点处 |Δh| + |Δĥ| 的路径平均（任一网格吞没的路径不计入）。
    """
    fine_dt = params.dt / refinement
    n_fine = int(round(params.t_max / fine_dt))
    fine = np.vstack([path_increments(params.seed, i, n_fine, fine_dt) for i in range(n_paths)])
    start = as_points([z0])

    reference = _integrate(start, fine, fine_dt, params, (n_fine,))
    usable = ~reference["swallowed"][:, 0, 0]

    dts: List[float] = []
    endpoints = []
    for level in range(levels):
        group = refinement // (2 ** level)
        if group < 2 or n_fine % group:
            raise ValueError(f"refinement {refinement} does not support {levels} levels")
        coarse = fine.reshape(n_paths, n_fine // group, group).sum(axis=2)
        dt = fine_dt * group
        result = _integrate(start, coarse, dt, params, (n_fine // group,))
        usable &= ~result["swallowed"][:, 0, 0]
        dts.append(dt)
        endpoints.append(result)

    errors = []
    for result in endpoints:
        err = np.abs(result["h"][:, 0, 0] - reference["h"][:, 0, 0])
        err = err + np.abs(result["h_hat"][:, 0, 0] - reference["h_hat"][:, 0, 0])
        errors.append(float(err[usable].mean()))
    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    logger.debug(f"强收敛阶估计: dts={dts}, errors={errors}, order={order:.3f}")
    return StrongOrderResult(dts, errors, order)
