"""
Virasoro 代数模块
在秩二 Jordan 胞最高权模上做符号计算：
- 以对偶有理数为系数的 PBW 基态 L₋λ₁…L₋λₖ|Δ+θ⟩
- 二级对数零矢量的构造与消没条件检验
- 随机游走生成元 α₀ + ½β² 的作用与商模投影
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Any, Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .dualnum import ONE, ZERO, DualScalar, as_dual, dual_inv, dual_log, dual_pow


Partition = Tuple[int, ...]
Coefficients = Mapping[int, Any]


class GammaPoleError(ValueError):
    """2Δ+1 = 0 时 γ 有极点"""


class NotNullVectorError(ValueError):
    """给定态不满足 L₁χ = L₂χ = 0"""


def to_rational(value: Any) -> Fraction:
    """
    把共形权转换为有理数

    Args:
        value: Fraction、整数或形如 "p/q" 的字符串

    Returns:
        Fraction

    Raises:
        TypeError: 传入浮点数（符号层只接受精确有理数）
    """
    if isinstance(value, float):
        raise TypeError(f"Δ must be an exact rational, got float {value!r}")
    return Fraction(value)


def canonical_partition(parts: Iterable[int]) -> Partition:
    """把正整数序列整理成弱递减的分拆标签"""
    parts = tuple(sorted((int(p) for p in parts), reverse=True))
    if any(p <= 0 for p in parts):
        raise ValueError(f"partition parts must be positive: {parts}")
    return parts


def partition_level(partition: Partition) -> int:
    return sum(partition)


def partitions(level: int) -> List[Partition]:
    """
    列出给定级别的全部分拆

    Returns:
        按字典序从大到小排列，例如 level=2 -> [(2,), (1, 1)]
    """
    if level < 0:
        return []
    if level == 0:
        return [()]

    result: List[Partition] = []

    def _build(remaining: int, max_part: int, prefix: Tuple[int, ...]):
        if remaining == 0:
            result.append(prefix)
            return
        for part in range(min(remaining, max_part), 0, -1):
            _build(remaining - part, part, prefix + (part,))

    _build(level, level, ())
    return result


def basis(level_cutoff: int) -> List[Partition]:
    """截断到 level_cutoff 的 PBW 基，先按级别再按字典序从大到小"""
    result: List[Partition] = []
    for level in range(level_cutoff + 1):
        result.extend(partitions(level))
    return result


def _partition_sort_key(partition: Partition):
    return (partition_level(partition), tuple(-p for p in partition))


@dataclass(frozen=True)
class ModuleContext:
    """最高权模的参数：共形权 Δ（不含 θ）与中心荷 c（可含 θ）"""

    delta: Fraction
    central: DualScalar

    def __post_init__(self):
        object.__setattr__(self, "delta", to_rational(self.delta))
        object.__setattr__(self, "central", as_dual(self.central))

    @property
    def weight(self) -> DualScalar:
        """L₀ 在 |Δ+θ⟩ 上的本征值 Δ+θ"""
        return DualScalar(self.delta, Fraction(1))

    def require_gamma_regular(self) -> None:
        if 2 * self.delta + 1 == 0:
            raise GammaPoleError("gamma pole at Δ=-1/2: 2Δ+1 must be nonzero")

    def with_central(self, central: Any) -> "ModuleContext":
        return ModuleContext(self.delta, as_dual(central))


@dataclass(frozen=True, eq=False)
class ModuleState:
    """
    模中的态：分拆标签 -> 对偶有理系数 的有限线性组合

    θ⁰ 部分对应 |Φ⟩ 扇区，θ¹ 部分对应 |Ψ⟩ 扇区。
    """

    context: ModuleContext
    terms: Mapping[Partition, DualScalar]

    def __post_init__(self):
        cleaned: Dict[Partition, DualScalar] = {}
        for partition, coeff in self.terms.items():
            key = canonical_partition(partition)
            value = cleaned.get(key, ZERO) + as_dual(coeff)
            cleaned[key] = value
        ordered = {
            key: cleaned[key]
            for key in sorted(cleaned, key=_partition_sort_key)
            if not cleaned[key].is_zero()
        }
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    # 构造
    @classmethod
    def highest_weight(cls, context: ModuleContext) -> "ModuleState":
        return cls(context, {(): ONE})

    @classmethod
    def zero(cls, context: ModuleContext) -> "ModuleState":
        return cls(context, {})

    @classmethod
    def descendant(cls, context: ModuleContext, partition: Iterable[int], coeff: Any = ONE) -> "ModuleState":
        return cls(context, {tuple(partition): as_dual(coeff)})

    # 查询
    def coefficient(self, partition: Iterable[int]) -> DualScalar:
        return self.terms.get(canonical_partition(partition), ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def levels(self) -> List[int]:
        return sorted({partition_level(p) for p in self.terms})

    def max_level(self) -> int:
        levels = self.levels()
        return levels[-1] if levels else 0

    def is_homogeneous(self, level: Optional[int] = None) -> bool:
        levels = self.levels()
        if not levels:
            return True
        if len(levels) != 1:
            return False
        return level is None or levels[0] == level

    def assert_homogeneous(self, level: int) -> None:
        if not self.is_homogeneous(level):
            raise ValueError(f"state is not homogeneous at level {level}: levels {self.levels()}")

    def level_component(self, level: int) -> "ModuleState":
        return ModuleState(
            self.context, {p: c for p, c in self.terms.items() if partition_level(p) == level}
        )

    def truncate(self, level_cutoff: int) -> "ModuleState":
        return ModuleState(
            self.context, {p: c for p, c in self.terms.items() if partition_level(p) <= level_cutoff}
        )

    def with_context(self, context: ModuleContext) -> "ModuleState":
        return ModuleState(context, dict(self.terms))

    def bulk_part(self) -> "ModuleState":
        """θ⁰ 部分（|Φ⟩ 扇区）"""
        return ModuleState(self.context, {p: DualScalar(c.body) for p, c in self.terms.items()})

    def slope_part(self) -> "ModuleState":
        """θ¹ 部分（|Ψ⟩ 扇区）"""
        return ModuleState(self.context, {p: DualScalar(c.slope) for p, c in self.terms.items()})

    # 线性结构
    def __add__(self, other: "ModuleState") -> "ModuleState":
        if not isinstance(other, ModuleState):
            return NotImplemented
        merged = dict(self.terms)
        for p, c in other.terms.items():
            merged[p] = merged.get(p, ZERO) + c
        return ModuleState(self.context, merged)

    def __neg__(self) -> "ModuleState":
        return ModuleState(self.context, {p: -c for p, c in self.terms.items()})

    def __sub__(self, other: "ModuleState") -> "ModuleState":
        if not isinstance(other, ModuleState):
            return NotImplemented
        return self + (-other)

    def scale(self, factor: Any) -> "ModuleState":
        factor = as_dual(factor)
        return ModuleState(self.context, {p: factor * c for p, c in self.terms.items()})

    def __mul__(self, factor: Any) -> "ModuleState":
        if isinstance(factor, ModuleState):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, ModuleState):
            return NotImplemented
        return self.context == other.context and dict(self.terms) == dict(other.terms)

    __hash__ = None

    def __repr__(self) -> str:
        return f"ModuleState(Δ={self.context.delta}, c={self.context.central}, terms={dict(self.terms)!r})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for partition, coeff in self.terms.items():
            word = "".join(f"L₋{p}" for p in partition)
            pieces.append(f"({coeff}){word}|Δ+θ⟩")
        return " + ".join(pieces)


# ---------------------------------------------------------------------------
# 生成元作用
# ---------------------------------------------------------------------------

def _accumulate(target: Dict[Partition, DualScalar], source, factor: DualScalar) -> None:
    for partition, coeff in source:
        value = target.get(partition, ZERO) + factor * coeff
        if value.is_zero():
            target.pop(partition, None)
        else:
            target[partition] = value


@lru_cache(maxsize=None)
def _reduce_word(delta: Fraction, central: DualScalar, word: Tuple[int, ...]) -> Tuple[Tuple[Partition, DualScalar], ...]:
    """
    把 L_{m₁}…L_{mₖ}|Δ+θ⟩ 化成 PBW 基上的线性组合

    取最右侧的逆序相邻对 (a, b)（a > b），用
    L_a L_b = L_b L_a + (a−b)L_{a+b} + (c/12)(a³−a)δ_{a+b,0}
    交换；有序后最右的正模式湮灭最高权态，L₀ 给出 Δ+θ。
    """
    if not word:
        return (((), ONE),)

    out_of_order = None
    for i in range(len(word) - 2, -1, -1):
        if word[i] > word[i + 1]:
            out_of_order = i
            break

    if out_of_order is None:
        last = word[-1]
        if last > 0:
            return ()
        if last == 0:
            weight = DualScalar(delta, Fraction(1))
            result: Dict[Partition, DualScalar] = {}
            _accumulate(result, _reduce_word(delta, central, word[:-1]), weight)
            return tuple(result.items())
        return ((tuple(-m for m in word), ONE),)

    i = out_of_order
    a, b = word[i], word[i + 1]
    result = {}
    _accumulate(result, _reduce_word(delta, central, word[:i] + (b, a) + word[i + 2:]), ONE)
    _accumulate(result, _reduce_word(delta, central, word[:i] + (a + b,) + word[i + 2:]), as_dual(a - b))
    if a + b == 0:
        anomaly = central * Fraction(a ** 3 - a, 12)
        if not anomaly.is_zero():
            _accumulate(result, _reduce_word(delta, central, word[:i] + word[i + 2:]), anomaly)
    return tuple(result.items())


def act(n: int, state: ModuleState) -> ModuleState:
    """
    计算 Lₙ·state

    Args:
        n: 模式指标（任意整数）
        state: 模中的态

    Returns:
        新态，级别改变 −n
    """
    ctx = state.context
    result: Dict[Partition, DualScalar] = {}
    for partition, coeff in state.terms.items():
        word = (int(n),) + tuple(-p for p in partition)
        _accumulate(result, _reduce_word(ctx.delta, ctx.central, word), coeff)
    return ModuleState(ctx, result)


def apply_word(modes: Sequence[int], state: ModuleState) -> ModuleState:
    """L_{m₁}…L_{mₖ}·state，最右的模式最先作用"""
    for mode in reversed(tuple(modes)):
        state = act(mode, state)
    return state


def apply_partition(partition: Partition, state: ModuleState) -> ModuleState:
    """L₋λ₁…L₋λₖ·state"""
    return apply_word(tuple(-p for p in partition), state)


def commutator_action(m: int, n: int, state: ModuleState) -> ModuleState:
    """[Lₘ, Lₙ]·state = (m−n)Lₘ₊ₙ·state + (c/12)m(m²−1)δₘ₊ₙ,₀·state"""
    result = act(m + n, state).scale(m - n)
    if m + n == 0:
        result = result + state.scale(state.context.central * Fraction(m ** 3 - m, 12))
    return result


def apply_linear(coefficients: Coefficients, state: ModuleState) -> ModuleState:
    """Σₙ cₙ Lₙ·state"""
    result = ModuleState.zero(state.context)
    for n, coeff in sorted(coefficients.items()):
        coeff = as_dual(coeff)
        if coeff.is_zero():
            continue
        result = result + act(n, state).scale(coeff)
    return result


def apply_walk_generator(a: Coefficients, b: Coefficients, state: ModuleState) -> ModuleState:
    """(α₀ + ½β²)·state，α₀ = Σaₙ Lₙ，β = Σbₙ Lₙ"""
    beta_once = apply_linear(b, state)
    beta_twice = apply_linear(b, beta_once)
    return apply_linear(a, state) + beta_twice.scale(Fraction(1, 2))


# ---------------------------------------------------------------------------
# 二级对数零矢量
# ---------------------------------------------------------------------------

class NullVectorResult(NamedTuple):
    gamma: DualScalar
    central: DualScalar
    chi: ModuleState


class VanishingCheck(NamedTuple):
    residual1: ModuleState
    residual2: ModuleState
    is_null: bool


def gamma_of(delta: Any) -> DualScalar:
    """γ = 3/(2Δ+1+2θ)"""
    delta = to_rational(delta)
    if 2 * delta + 1 == 0:
        raise GammaPoleError("gamma pole at Δ=-1/2: 2Δ+1 must be nonzero")
    return dual_inv(DualScalar(2 * delta + 1, Fraction(2))) * 3


def k_theta(delta: Any) -> DualScalar:
    """k(θ) = 6/(2(Δ+θ)+1)，即零矢量所要求的扩散系数"""
    return gamma_of(delta) * 2


def null_vector_level2(delta: Any) -> NullVectorResult:
    """
    构造二级零矢量 χ = (−2L₋₂ + γL₋₁²)|Δ+θ⟩

    Args:
        delta: 有理共形权 Δ

    Returns:
        (gamma, central, chi)，其中 central = (6γ−8)(Δ+θ)，chi 的上下文携带该中心荷

    Raises:
        GammaPoleError: Δ = −1/2
    """
    delta = to_rational(delta)
    gamma = gamma_of(delta)
    weight = DualScalar(delta, Fraction(1))
    central = (gamma * 6 - 8) * weight
    ctx = ModuleContext(delta, central)
    chi = ModuleState(ctx, {(2,): DualScalar(-2), (1, 1): gamma})
    logger.debug(f"二级零矢量: Δ={delta}, γ={gamma}, c={central}")
    return NullVectorResult(gamma, central, chi)


def check_vanishing(chi: ModuleState) -> VanishingCheck:
    """
    检验 L₁χ = L₂χ = 0

    Returns:
        (residual1, residual2, is_null)
    """
    if not chi.is_zero():
        chi.assert_homogeneous(2)
    residual1 = act(1, chi)
    residual2 = act(2, chi)
    return VanishingCheck(residual1, residual2, residual1.is_zero() and residual2.is_zero())


def drift_state(a: Coefficients, b: Coefficients, ctx: ModuleContext) -> ModuleState:
    """(α₀ + ½β²)|Δ+θ⟩"""
    return apply_walk_generator(a, b, ModuleState.highest_weight(ctx))


def level1_null_check(delta: Any) -> VanishingCheck:
    """
    一级情形：L₁L₋₁|Δ+θ⟩ = 2(Δ+θ)|Δ+θ⟩，θ 分量恒为 2，因此 L₋₁|Δ+θ⟩ 永远不是对数零矢量
    """
    ctx = ModuleContext(to_rational(delta), ZERO)
    state = ModuleState.descendant(ctx, (1,))
    residual = act(1, state)
    return VanishingCheck(residual, act(2, state), residual.is_zero())


@dataclass(frozen=True)
class Level2Classification:
    """二级零矢量的分类结果"""

    delta: Fraction
    gamma: DualScalar
    central: DualScalar
    k: DualScalar
    is_null: bool
    is_null_theta_free: bool

    @property
    def logarithmic(self) -> bool:
        """中心荷不依赖 θ 时才存在对数零矢量"""
        return not self.central.has_slope()

    @property
    def kappa_bulk(self) -> Fraction:
        return self.k.body

    @property
    def kappa_positive(self) -> bool:
        return self.k.body > 0

    @property
    def consistent(self) -> bool:
        """θ 无关中心荷下的消没结果应与对数分类一致"""
        return self.is_null and self.is_null_theta_free == self.logarithmic


def classify_level2(delta: Any) -> Level2Classification:
    delta = to_rational(delta)
    gamma, central, chi = null_vector_level2(delta)
    check = check_vanishing(chi)
    frozen_ctx = chi.context.with_central(DualScalar(central.body))
    frozen_check = check_vanishing(chi.with_context(frozen_ctx))
    return Level2Classification(
        delta=delta,
        gamma=gamma,
        central=central,
        k=k_theta(delta),
        is_null=check.is_null,
        is_null_theta_free=frozen_check.is_null,
    )


def scan_logarithmic_weights(max_numerator: int = 8, max_denominator: int = 8) -> List[Level2Classification]:
    """
    扫描 Δ = p/q（|p| ≤ max_numerator，1 ≤ q ≤ max_denominator）

    Returns:
        中心荷 θ 分量为零的全部分类结果（按 Δ 排序）
    """
    seen = set()
    hits: List[Level2Classification] = []
    for q in range(1, max_denominator + 1):
        for p in range(-max_numerator, max_numerator + 1):
            delta = Fraction(p, q)
            if delta in seen or 2 * delta + 1 == 0:
                continue
            seen.add(delta)
            result = classify_level2(delta)
            if result.logarithmic:
                hits.append(result)
    logger.info(f"扫描了 {len(seen)} 个有理权，命中 {len(hits)} 个")
    return sorted(hits, key=lambda r: r.delta)


# ---------------------------------------------------------------------------
# 商模投影
# ---------------------------------------------------------------------------

def _row_reduce(rows: List[List[Fraction]]) -> List[Tuple[int, List[Fraction]]]:
    """
    有理数上的简化行阶梯形

    Returns:
        [(主元列, 归一化行)]，主元列上其余行全为零
    """
    rows = [list(r) for r in rows]
    n_cols = len(rows[0]) if rows else 0
    pivots: List[Tuple[int, List[Fraction]]] = []
    pivot_row = 0
    for col in range(n_cols):
        for i in range(pivot_row, len(rows)):
            if rows[i][col] != 0:
                break
        else:
            continue
        rows[pivot_row], rows[i] = rows[i], rows[pivot_row]
        lead = rows[pivot_row][col]
        rows[pivot_row] = [v / lead for v in rows[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [v - factor * w for v, w in zip(rows[r], rows[pivot_row])]
        pivots.append((col, rows[pivot_row]))
        pivot_row += 1
        if pivot_row == len(rows):
            break
    return pivots


def _coordinates(state: ModuleState, columns: List[Partition]) -> List[Fraction]:
    """(body, slope) 交错坐标：每个分拆先主部后 θ 部分"""
    coords: List[Any] = []
    for partition in columns:
        coeff = state.terms.get(partition, ZERO)
        coords.extend([coeff.body, coeff.slope])
    return coords


def quotient_project(state: ModuleState, chi: ModuleState, level_cutoff: int) -> ModuleState:
    """
    在商模 M / ⟨L₋λχ⟩ 中取 state 的标准代表元

    每一级把零子模生成元 {L₋λχ, θL₋λχ} 在有理数上化为简化行阶梯形，
    主元方向按分拆字典序从大到小（主部先于 θ 部分）消去。

    Raises:
        NotNullVectorError: chi 不满足消没条件
    """
    if not check_vanishing(chi).is_null:
        raise NotNullVectorError("not a null vector: L₁χ or L₂χ is nonzero")
    if state.max_level() > level_cutoff:
        raise ValueError(f"state level {state.max_level()} exceeds level_cutoff {level_cutoff}")
    if state.context != chi.context:
        raise ValueError("state and null vector live in different modules")

    result = state.truncate(1)
    for level in range(2, level_cutoff + 1):
        component = state.level_component(level)
        if component.is_zero():
            continue
        columns = partitions(level)
        rows: List[List[Any]] = []
        for partition in partitions(level - 2):
            generator = apply_partition(partition, chi)
            coords = _coordinates(generator, columns)
            rows.append(coords)
            # θ·generator：主部清零，θ 部分取原主部
            rows.append([coords[j - 1] if j % 2 == 1 else Fraction(0) for j in range(len(coords))])
        vector = _coordinates(component, columns)
        for col, row in _row_reduce(rows):
            factor = vector[col]
            if factor != 0:
                vector = [v - factor * w for v, w in zip(vector, row)]
        reduced = {
            partition: DualScalar(vector[2 * j], vector[2 * j + 1]) for j, partition in enumerate(columns)
        }
        result = result + ModuleState(state.context, reduced)
    return result


# ---------------------------------------------------------------------------
# 截断算子矩阵
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedOperator:
    """
    游走生成元在截断基上的矩阵，matrix[i][j] 为 op(basis[j]) 在 basis[i] 上的系数
    """

    context: ModuleContext
    basis: Tuple[Partition, ...]
    matrix: Tuple[Tuple[DualScalar, ...], ...]

    @classmethod
    def from_action(
        cls,
        context: ModuleContext,
        level_cutoff: int,
        action: Callable[[ModuleState], ModuleState],
    ) -> "TruncatedOperator":
        states = basis(level_cutoff)
        columns = []
        for partition in states:
            image = action(ModuleState.descendant(context, partition)).truncate(level_cutoff)
            columns.append([image.terms.get(row, ZERO) for row in states])
        matrix = tuple(tuple(columns[j][i] for j in range(len(states))) for i in range(len(states)))
        return cls(context, tuple(states), matrix)

    @classmethod
    def walk_generator(cls, a: Coefficients, b: Coefficients, context: ModuleContext, level_cutoff: int):
        return cls.from_action(context, level_cutoff, lambda s: apply_walk_generator(a, b, s))

    @classmethod
    def linear(cls, coefficients: Coefficients, context: ModuleContext, level_cutoff: int):
        return cls.from_action(context, level_cutoff, lambda s: apply_linear(coefficients, s))

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def vector_of(self, state: ModuleState) -> List[DualScalar]:
        return [state.terms.get(p, ZERO) for p in self.basis]

    def state_of(self, vector: Sequence[DualScalar]) -> ModuleState:
        return ModuleState(self.context, dict(zip(self.basis, vector)))

    def apply(self, vector: Sequence[DualScalar]) -> List[DualScalar]:
        result = []
        for row in self.matrix:
            total = ZERO
            for entry, value in zip(row, vector):
                if not entry.is_zero():
                    total = total + entry * value
            result.append(total)
        return result

    def is_strictly_raising(self) -> bool:
        """矩阵在按级别排序的基上严格下三角且级别严格升高"""
        for i, row in enumerate(self.matrix):
            for j, entry in enumerate(row):
                if not entry.is_zero() and partition_level(self.basis[i]) <= partition_level(self.basis[j]):
                    return False
        return True

    def exp_apply(self, t: Any, state: ModuleState) -> ModuleState:
        """
        exp(tA)·state；A 幂零时级数在有限项后终止，有理 t 下结果精确
        """
        term = self.vector_of(state)
        total = list(term)
        for k in range(1, self.dimension + 1):
            term = [value * t / k for value in self.apply(term)]
            if all(v.is_zero() for v in term):
                break
            total = [x + y for x, y in zip(total, term)]
        return self.state_of(total)

    def to_block_matrix(self) -> np.ndarray:
        """
        实数分块表示 [[X, 0], [Y, X]]：对偶数 x + θy 对应列向量 [x; y]
        """
        d = self.dimension
        body = np.array([[float(e.body) for e in row] for row in self.matrix], dtype=float).reshape(d, d)
        slope = np.array([[float(e.slope) for e in row] for row in self.matrix], dtype=float).reshape(d, d)
        block = np.zeros((2 * d, 2 * d))
        block[:d, :d] = body
        block[d:, d:] = body
        block[d:, :d] = slope
        return block


# ---------------------------------------------------------------------------
# Jordan 胞场的变换规则
# ---------------------------------------------------------------------------

def transform_jordan_pair(phi: Any, psi: Any, fprime: Any, delta: Any):
    """
    Jordan 胞两个场在共形变换下的像

    Returns:
        ((f')^Δ Φ, (f')^Δ (Ψ + ln f' · Φ))
    """
    scale = dual_pow(as_dual(fprime), as_dual(delta))
    log_fprime = dual_log(as_dual(fprime))
    phi, psi = as_dual(phi), as_dual(psi)
    return scale * phi, scale * (psi + log_fprime * phi)


def transform_unified(value: DualScalar, fprime: Any, delta: Any) -> DualScalar:
    """Υ = Φ + θΨ 以权 Δ+θ 变换：Υ -> (f')^{Δ+θ} Υ"""
    weight = DualScalar(delta, 1)
    return dual_pow(as_dual(fprime), weight) * as_dual(value)


def field_mode_action(n: int, z: Any, delta: Any) -> Tuple[DualScalar, DualScalar]:
    """
    [Lₙ, Υ(z,θ)] = (z^{n+1}∂_z + (Δ+θ)(n+1)zⁿ) Υ 的两个系数

    Returns:
        (z^{n+1}, (Δ+θ)(n+1)zⁿ)
    """
    z = as_dual(z)
    weight = DualScalar(delta, 1)
    return dual_pow(z, n + 1), weight * (n + 1) * dual_pow(z, n)
