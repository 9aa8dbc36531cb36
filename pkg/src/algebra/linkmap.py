"""
链接映射模块
把 Virasoro 随机游走的系数 (aₙ, bₙ) 翻译成 τ 依赖共形映射 f 的漂移 μ(f) 与扩散 ν(f)，
并在 f = h + τĥ 处按 τ 展开得到耦合的 (h, ĥ) 方程
"""

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Dict, Mapping, NamedTuple

from .dualnum import ZERO, DualScalar, as_dual, dual, dual_pow, dual_sqrt
from .virasoro import Coefficients, ModuleContext, ModuleState, drift_state


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """形式变量 f 的 Laurent 多项式：指数 -> 对偶系数，不存零系数"""

    coeffs: Mapping[int, DualScalar]

    def __post_init__(self):
        cleaned: Dict[int, DualScalar] = {}
        for power, coeff in self.coeffs.items():
            value = cleaned.get(int(power), ZERO) + as_dual(coeff)
            cleaned[int(power)] = value
        ordered = {p: cleaned[p] for p in sorted(cleaned) if not cleaned[p].is_zero()}
        object.__setattr__(self, "coeffs", MappingProxyType(ordered))

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls({})

    @classmethod
    def constant(cls, value: Any) -> "LaurentPoly":
        return cls({0: as_dual(value)})

    @classmethod
    def monomial(cls, power: int, coeff: Any = 1) -> "LaurentPoly":
        return cls({power: as_dual(coeff)})

    def coefficient(self, power: int) -> DualScalar:
        return self.coeffs.get(power, ZERO)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(p == 0 for p in self.coeffs)

    def bulk(self) -> "LaurentPoly":
        """系数的 θ⁰ 部分"""
        return LaurentPoly({p: DualScalar(c.body) for p, c in self.coeffs.items()})

    def slope(self) -> "LaurentPoly":
        """系数的 θ¹ 部分"""
        return LaurentPoly({p: DualScalar(c.slope) for p, c in self.coeffs.items()})

    def __add__(self, other: Any) -> "LaurentPoly":
        if not isinstance(other, LaurentPoly):
            other = as_dual(other)
            if other is NotImplemented:
                return NotImplemented
            other = LaurentPoly.constant(other)
        merged = dict(self.coeffs)
        for p, c in other.coeffs.items():
            merged[p] = merged.get(p, ZERO) + c
        return LaurentPoly(merged)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({p: -c for p, c in self.coeffs.items()})

    def __sub__(self, other: Any) -> "LaurentPoly":
        if not isinstance(other, LaurentPoly):
            other = as_dual(other)
            if other is NotImplemented:
                return NotImplemented
            other = LaurentPoly.constant(other)
        return self + (-other)

    def __mul__(self, other: Any) -> "LaurentPoly":
        if not isinstance(other, LaurentPoly):
            factor = as_dual(other)
            if factor is NotImplemented:
                return NotImplemented
            return LaurentPoly({p: factor * c for p, c in self.coeffs.items()})
        product: Dict[int, DualScalar] = {}
        for p, c in self.coeffs.items():
            for q, d in other.coeffs.items():
                product[p + q] = product.get(p + q, ZERO) + c * d
        return LaurentPoly(product)

    __rmul__ = __mul__

    def derivative(self) -> "LaurentPoly":
        """形式导数 ∂_f"""
        return LaurentPoly({p - 1: c * p for p, c in self.coeffs.items() if p != 0})

    def evaluate(self, point: Any) -> DualScalar:
        """
        在 point 处求值（point 可以是对偶数，例如 h + τĥ）

        Raises:
            DualSingularError: 存在负指数且 point 主部为零
        """
        point = as_dual(point)
        total = ZERO
        for p, c in self.coeffs.items():
            total = total + c * dual_pow(point, p)
        return total

    def __call__(self, point: Any) -> DualScalar:
        return self.evaluate(point)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return dict(self.coeffs) == dict(other.coeffs)

    __hash__ = None

    def to_string(self, var: str = "f") -> str:
        if not self.coeffs:
            return "0"
        pieces = []
        for p, c in self.coeffs.items():
            coeff = f"({c})" if c.has_slope() else str(c.body)
            if p == 0:
                pieces.append(coeff)
            elif p == 1:
                pieces.append(f"{coeff}·{var}")
            else:
                pieces.append(f"{coeff}·{var}^{p}")
        return " + ".join(pieces)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"LaurentPoly({dict(self.coeffs)!r})"


def _finite(coefficients: Coefficients) -> Dict[int, DualScalar]:
    return {int(n): as_dual(c) for n, c in coefficients.items()}


def compute_nu(b: Coefficients) -> LaurentPoly:
    """ν(f) = −Σₙ bₙ f^{n+1}"""
    return LaurentPoly({n + 1: -c for n, c in _finite(b).items()})


def compute_mu(a: Coefficients, b: Coefficients) -> LaurentPoly:
    """μ(f) = −Σₙ aₙ f^{n+1} + ½ ν ∂_f ν"""
    nu = compute_nu(b)
    first = LaurentPoly({n + 1: -c for n, c in _finite(a).items()})
    return first + nu * nu.derivative() * Fraction(1, 2)


class TauExpansion(NamedTuple):
    """
    p(h + τĥ) = bulk(h) + τ·(hat_const(h) + ĥ·hat_linear(h))

    hat_linear 恒等于 ∂_h bulk
    """

    bulk: LaurentPoly
    hat_const: LaurentPoly
    hat_linear: LaurentPoly

    def bulk_at(self, h: Any) -> Any:
        return self.bulk.evaluate(h).body

    def hat_at(self, h: Any, h_hat: Any) -> Any:
        return self.hat_const.evaluate(h).body + self.hat_linear.evaluate(h).body * h_hat

    def product(self, other: "TauExpansion") -> "TauExpansion":
        """展开式之积（Leibniz 规则）"""
        return TauExpansion(
            self.bulk * other.bulk,
            self.bulk * other.hat_const + self.hat_const * other.bulk,
            self.bulk * other.hat_linear + self.hat_linear * other.bulk,
        )


def expand_tau(p: LaurentPoly) -> TauExpansion:
    """
    在 f = h + τĥ（τ² = 0）处把 p 按 τ 展开

    Returns:
        TauExpansion(bulk, hat_const, hat_linear)：
        θ⁰ 部分、系数 θ 分量给出的常数部分、以及 ĥ 的乘子 ∂_h p_bulk
    """
    bulk = p.bulk()
    return TauExpansion(bulk, p.slope(), bulk.derivative())


def sle_walk(k: Any):
    """
    SLE 情形的游走系数

    Args:
        k: 对偶扩散系数 k(τ) = κ + τκ̂

    Returns:
        (a, b)：α₀ 系数 {−2: −2}，β 系数 {−1: √k}
    """
    k = as_dual(k)
    return {-2: dual(-2)}, {-1: dual_sqrt(k)}


def kappa_dual(kappa: Any, kappa_hat: Any) -> DualScalar:
    """k(τ) = κ + τκ̂"""
    return DualScalar(kappa, kappa_hat)


def alpha_from_alpha0(a: Coefficients, b: Coefficients, ctx: ModuleContext) -> ModuleState:
    """α|Δ+θ⟩ = (α₀ + ½β²)|Δ+θ⟩"""
    return drift_state(a, b, ctx)


class SdeCoefficients(NamedTuple):
    """耦合方程 dh = μ̄dt + ν̄dB，dĥ = μ̂dt + ν̂dB 的展开系数"""

    mu: LaurentPoly
    nu: LaurentPoly
    drift: TauExpansion
    diffusion: TauExpansion


def sde_coefficients(a: Coefficients, b: Coefficients) -> SdeCoefficients:
    mu = compute_mu(a, b)
    nu = compute_nu(b)
    return SdeCoefficients(mu, nu, expand_tau(mu), expand_tau(nu))
