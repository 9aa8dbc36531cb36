"""
对偶数运算模块
实现 a + θb (θ² = 0) 的精确与浮点算术，支持有理数、实数、复数三种基域
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Any, Callable, Optional

import numpy as np


FIELD_RATIONAL = "rational"
FIELD_REAL = "real"
FIELD_COMPLEX = "complex"


class NonInvertibleDualError(ZeroDivisionError):
    """主部为零的对偶数不可逆"""


class DualBranchError(ValueError):
    """对数或幂运算越过分支切割"""


class DualSingularError(DualBranchError):
    """主部为零导致的奇异运算"""


class InexactOperationError(ValueError):
    """有理模式下无法精确表示的运算"""


def _coerce(value: Any) -> Any:
    """把输入规整为基域元素：整数转为 Fraction，numpy 标量转为 Python 数"""
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Fraction):
        return value
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.complexfloating):
        return complex(value)
    if isinstance(value, (list, tuple)):
        return np.asarray(value)
    return value


def _field_of(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return FIELD_COMPLEX if np.iscomplexobj(value) else FIELD_REAL
    if isinstance(value, Fraction):
        return FIELD_RATIONAL
    if isinstance(value, complex):
        return FIELD_COMPLEX
    return FIELD_REAL


def _align(a: Any, b: Any):
    """numpy 数组与 Fraction 混算时先把 Fraction 转成 float，避免 object 数组"""
    if isinstance(a, np.ndarray) and isinstance(b, Fraction):
        return a, float(b)
    if isinstance(b, np.ndarray) and isinstance(a, Fraction):
        return float(a), b
    return a, b


def _add(a: Any, b: Any) -> Any:
    a, b = _align(a, b)
    return a + b


def _mul(a: Any, b: Any) -> Any:
    a, b = _align(a, b)
    return a * b


def _is_zero(value: Any) -> bool:
    if isinstance(value, np.ndarray):
        return bool(np.all(value == 0))
    return value == 0


def _any_zero(value: Any) -> bool:
    if isinstance(value, np.ndarray):
        return bool(np.any(value == 0))
    return value == 0


def _integer_value(value: Any) -> Optional[int]:
    """若 value 是整数值的标量则返回该整数，否则返回 None"""
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else None
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return None


def exact_rational_sqrt(value: Fraction) -> Optional[Fraction]:
    """
    计算有理数的精确平方根

    Args:
        value: 非负有理数

    Returns:
        若分子分母均为完全平方数则返回精确平方根，否则返回 None
    """
    if value < 0:
        return None
    num_root = math.isqrt(value.numerator)
    den_root = math.isqrt(value.denominator)
    if num_root * num_root == value.numerator and den_root * den_root == value.denominator:
        return Fraction(num_root, den_root)
    return None


@dataclass(frozen=True, eq=False)
class DualScalar:
    """对偶数 body + θ·slope，θ² = 0"""

    body: Any
    slope: Any = Fraction(0)

    # 让 numpy 数组与对偶数混算时交给对偶数的反射运算处理
    __array_ufunc__ = None

    def __post_init__(self):
        object.__setattr__(self, "body", _coerce(self.body))
        object.__setattr__(self, "slope", _coerce(self.slope))

    @property
    def field(self) -> str:
        """基域：rational / real / complex"""
        fields = {_field_of(self.body), _field_of(self.slope)}
        if FIELD_COMPLEX in fields:
            return FIELD_COMPLEX
        if fields == {FIELD_RATIONAL}:
            return FIELD_RATIONAL
        return FIELD_REAL

    @property
    def is_exact(self) -> bool:
        return self.field == FIELD_RATIONAL

    def is_zero(self) -> bool:
        return _is_zero(self.body) and _is_zero(self.slope)

    def has_slope(self) -> bool:
        return not _is_zero(self.slope)

    def to_float(self) -> "DualScalar":
        """转换到实数浮点模式"""
        if isinstance(self.body, np.ndarray) or isinstance(self.slope, np.ndarray):
            return DualScalar(np.asarray(self.body, dtype=float), np.asarray(self.slope, dtype=float))
        return DualScalar(float(self.body), float(self.slope))

    def to_complex(self) -> "DualScalar":
        """转换到复数浮点模式"""
        if isinstance(self.body, np.ndarray) or isinstance(self.slope, np.ndarray):
            return DualScalar(np.asarray(self.body, dtype=complex), np.asarray(self.slope, dtype=complex))
        return DualScalar(complex(self.body), complex(self.slope))

    # 算术协议
    def __add__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return DualScalar(_add(self.body, other.body), _add(self.slope, other.slope))

    __radd__ = __add__

    def __neg__(self) -> "DualScalar":
        return DualScalar(-self.body, -self.slope)

    def __pos__(self) -> "DualScalar":
        return self

    def __sub__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return dual_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return dual_mul(self, dual_inv(other))

    def __rtruediv__(self, other: Any) -> "DualScalar":
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        return dual_mul(other, dual_inv(self))

    def __pow__(self, exponent: Any, modulo=None) -> "DualScalar":
        return dual_pow(self, exponent)

    def __rpow__(self, base: Any) -> "DualScalar":
        return dual_pow(as_dual(base), self)

    def __eq__(self, other: Any) -> bool:
        other = as_dual(other)
        if other is NotImplemented:
            return NotImplemented
        body_eq = self.body == other.body
        slope_eq = self.slope == other.slope
        if isinstance(body_eq, np.ndarray) or isinstance(slope_eq, np.ndarray):
            return bool(np.all(body_eq) and np.all(slope_eq))
        return bool(body_eq and slope_eq)

    def __hash__(self) -> int:
        return hash((self.body, self.slope))

    def __repr__(self) -> str:
        return f"DualScalar({self.body!r}, {self.slope!r})"

    def __str__(self) -> str:
        if _is_zero(self.slope):
            return str(self.body)
        slope = self.slope
        sign = "+"
        if isinstance(slope, (Fraction, float)) and slope < 0:
            sign, slope = "-", -slope
        if _is_zero(self.body):
            return f"{'-' if sign == '-' else ''}{slope}θ"
        return f"{self.body} {sign} {slope}θ"


THETA = DualScalar(Fraction(0), Fraction(1))
ONE = DualScalar(Fraction(1), Fraction(0))
ZERO = DualScalar(Fraction(0), Fraction(0))


def as_dual(value: Any) -> Any:
    """把数字（或 numpy 数组）提升为对偶数；无法识别的类型返回 NotImplemented"""
    if isinstance(value, DualScalar):
        return value
    if isinstance(value, (Number, np.ndarray, np.number)):
        return DualScalar(value, Fraction(0))
    return NotImplemented


def dual(body: Any, slope: Any = 0) -> DualScalar:
    """构造对偶数的便捷函数"""
    return DualScalar(body, slope)


def dual_mul(x: DualScalar, y: DualScalar) -> DualScalar:
    """(a+θb)(c+θd) = ac + θ(ad+bc)，θ² 项直接丢弃"""
    return DualScalar(
        _mul(x.body, y.body),
        _add(_mul(x.body, y.slope), _mul(x.slope, y.body)),
    )


def dual_inv(x: DualScalar) -> DualScalar:
    """
    对偶数求逆

    Args:
        x: 主部非零的对偶数

    Returns:
        (1/a, -b/a²)

    Raises:
        NonInvertibleDualError: 主部为零
    """
    x = as_dual(x)
    if _any_zero(x.body):
        raise NonInvertibleDualError(f"non-invertible dual scalar: {x}")
    if x.field == FIELD_RATIONAL:
        inv_body = Fraction(1) / x.body
    else:
        inv_body = 1 / x.body
    return DualScalar(inv_body, _mul(-x.slope, _mul(inv_body, inv_body)))


def _log_body(body: Any, field: str) -> Any:
    """主部的自然对数（复数时取主值分支）"""
    if _any_zero(body):
        raise DualSingularError(f"logarithm of zero body: {body}")
    if field == FIELD_RATIONAL:
        if body == 1:
            return Fraction(0)
        raise InexactOperationError(f"ln({body}) is not exact in rational mode")
    if field == FIELD_COMPLEX:
        arr = np.asarray(body, dtype=complex)
        if np.any((arr.imag == 0) & (arr.real < 0)):
            raise DualBranchError(f"body {body} lies on the principal branch cut")
        result = np.log(arr)
        return result if isinstance(body, np.ndarray) else complex(result)
    arr = np.asarray(body, dtype=float)
    if np.any(arr < 0):
        raise DualBranchError(f"non-positive real body {body}: logarithm undefined in real mode")
    result = np.log(arr)
    return result if isinstance(body, np.ndarray) else float(result)


def dual_log(x: DualScalar) -> DualScalar:
    """ln(a+θb) = ln a + θ b/a"""
    x = as_dual(x)
    log_body = _log_body(x.body, x.field)
    inv_body = dual_inv(DualScalar(x.body)).body
    return DualScalar(log_body, _mul(x.slope, inv_body))


def dual_exp(x: DualScalar) -> DualScalar:
    """exp(a+θb) = e^a (1 + θb)"""
    x = as_dual(x)
    if x.field == FIELD_RATIONAL:
        if x.body != 0:
            raise InexactOperationError(f"exp({x.body}) is not exact in rational mode")
        return DualScalar(Fraction(1), x.slope)
    exp_body = np.exp(x.body)
    if not isinstance(x.body, np.ndarray):
        exp_body = complex(exp_body) if x.field == FIELD_COMPLEX else float(exp_body)
    return DualScalar(exp_body, _mul(exp_body, x.slope))


def dual_sqrt(x: DualScalar) -> DualScalar:
    """
    对偶数平方根 (√a, b/(2√a))

    有理模式只接受完全平方数主部，例如 √(4 + θκ̂) = 2 + θκ̂/4；
    浮点模式等价于指数 1/2 的 dual_pow（复数取主值）。
    """
    x = as_dual(x)
    if _any_zero(x.body):
        raise DualSingularError(f"square root of zero body: {x}")
    field = x.field
    if field == FIELD_RATIONAL:
        root = exact_rational_sqrt(x.body)
        if root is None:
            raise InexactOperationError(f"√{x.body} is not rational")
        return DualScalar(root, x.slope / (2 * root))
    if field == FIELD_COMPLEX:
        root = np.sqrt(np.asarray(x.body, dtype=complex))
        if not isinstance(x.body, np.ndarray):
            root = complex(root)
    else:
        arr = np.asarray(x.body, dtype=float)
        if np.any(arr < 0):
            raise DualBranchError(f"non-positive real body {x.body}: square root undefined in real mode")
        root = np.sqrt(arr)
        if not isinstance(x.body, np.ndarray):
            root = float(root)
    return DualScalar(root, _mul(x.slope, 1 / (2 * root)))


def dual_pow(x: DualScalar, e: Any) -> DualScalar:
    """
    对偶指数幂 x^e = exp(e · ln x)

    Args:
        x: 底数
        e: 指数（可带 θ 分量，如 Δ+θ）

    Returns:
        对偶数结果；主部为实数 a、指数为 Δ+θ 时得到 a^Δ (1 + θ ln a)

    Raises:
        DualSingularError: 主部为零且指数不是非负整数
        DualBranchError: 实数模式下主部为负、或复数主部位于分支切割上
        InexactOperationError: 有理模式下结果不是有理数
    """
    x = as_dual(x)
    e = as_dual(e)
    n = _integer_value(e.body) if not e.has_slope() else None

    if n is not None:
        # 整数指数走闭式 (a^n, n a^{n-1} b)，对负主部同样成立
        if n == 0:
            return DualScalar(_add(_mul(Fraction(0), x.body), Fraction(1)), _mul(Fraction(0), x.slope))
        if n < 0:
            if _any_zero(x.body):
                raise DualSingularError(f"zero body raised to negative power {n}")
            return dual_pow(dual_inv(x), -n)
        body_pow = x.body ** n
        return DualScalar(body_pow, _mul(n * x.body ** (n - 1), x.slope))

    if x.field == FIELD_RATIONAL and e.field == FIELD_RATIONAL and not e.has_slope():
        if e.body.denominator == 2:
            return dual_pow(dual_sqrt(x), e.body.numerator)
    if x.field == FIELD_RATIONAL and e.field == FIELD_RATIONAL:
        raise InexactOperationError(f"({x})^({e}) is not exact in rational mode")

    if _any_zero(x.body):
        raise DualSingularError(f"zero body raised to power {e}")
    if x.field == FIELD_RATIONAL:
        x = x.to_float()
    return dual_exp(e * dual_log(x))


def forward_derivative(fn: Callable[[DualScalar], DualScalar], point: Any) -> Any:
    """用对偶数计算 fn 在 point 处的一阶导数"""
    return fn(DualScalar(point, 1)).slope
