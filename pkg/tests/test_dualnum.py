"""
对偶数运算测试模块
测试有理模式下的环公理、精确分支、浮点模式下的导数与错误处理
"""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from src.algebra.dualnum import (
    FIELD_COMPLEX,
    FIELD_RATIONAL,
    FIELD_REAL,
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
    dual_pow,
    dual_sqrt,
    exact_rational_sqrt,
    forward_derivative,
)


def _random_dual(rng: random.Random) -> DualScalar:
    def _frac():
        return Fraction(rng.randint(-50, 50), rng.randint(1, 12))
    return dual(_frac(), _frac())


class TestRingAxioms:
    """有理模式环公理测试"""

    def setup_method(self):
        rng = random.Random(20240611)
        self.triples = [(_random_dual(rng), _random_dual(rng), _random_dual(rng)) for _ in range(10000)]

    def test_addition_and_multiplication_laws(self):
        """测试结合律、交换律与分配律精确成立"""
        for x, y, z in self.triples:
            assert (x + y) + z == x + (y + z)
            assert (x * y) * z == x * (y * z)
            assert x + y == y + x
            assert x * y == y * x
            assert x * (y + z) == x * y + x * z

    def test_identities_and_inverse(self):
        """测试单位元、加法逆元与乘法逆元"""
        for x, _, _ in self.triples:
            assert x + ZERO == x
            assert x * ONE == x
            assert x - x == ZERO
            if x.body != 0:
                assert x * dual_inv(x) == ONE
                assert (ONE / x) * x == ONE

    def test_results_stay_rational(self):
        """测试有理输入的运算结果仍在有理域"""
        x, y, _ = self.triples[0]
        assert (x * y + x).field == FIELD_RATIONAL
        assert (x * y).is_exact

    def test_theta_squares_to_zero(self):
        """测试 θ² = 0"""
        assert THETA * THETA == ZERO
        assert (dual(2, 3) * THETA) == dual(0, 2)

    def test_worked_examples(self):
        """测试乘法与求逆的手算结果"""
        assert dual(2, 3) * dual(4, 5) == dual(8, 22)
        assert dual_inv(dual(1, 1)) == dual(1, -1)
        assert dual_inv(dual(2)) == dual(Fraction(1, 2))


class TestExactBranches:
    """有理模式精确分支测试"""

    def test_sqrt_of_perfect_square(self):
        """测试 √(4 − 16/3θ) = 2 − 4/3θ"""
        assert dual_sqrt(dual(4, Fraction(-16, 3))) == dual(2, Fraction(-4, 3))
        assert exact_rational_sqrt(Fraction(9, 4)) == Fraction(3, 2)
        assert exact_rational_sqrt(Fraction(3)) is None

    def test_irrational_sqrt_raises(self):
        """测试 √3 在有理模式下报错"""
        with pytest.raises(InexactOperationError):
            dual_sqrt(dual(3))

    def test_integer_powers(self):
        """测试整数指数的闭式结果（含负主部与负指数）"""
        assert dual(-2, 1) ** 3 == dual(-8, 12)
        assert dual(2, 1) ** -1 == dual_inv(dual(2, 1))
        assert dual(5, 7) ** 0 == ONE

    def test_half_integer_powers(self):
        """测试完全平方数的半整数幂"""
        assert dual(Fraction(9, 4)) ** Fraction(1, 2) == dual(Fraction(3, 2))
        assert dual(Fraction(9, 4)) ** Fraction(-3, 2) == dual(Fraction(8, 27))

    def test_other_rational_powers_raise(self):
        """测试其他有理指数报错"""
        with pytest.raises(InexactOperationError):
            dual_pow(dual(2), Fraction(1, 3))
        with pytest.raises(InexactOperationError):
            dual_pow(dual(2), dual(Fraction(1, 4), 1))

    def test_log_and_exp(self):
        """测试 ln 只在主部为 1 时精确、exp 只在主部为 0 时精确"""
        assert dual_log(dual(1, 5)) == dual(0, 5)
        assert dual_exp(dual(0, 3)) == dual(1, 3)
        with pytest.raises(InexactOperationError):
            dual_log(dual(2))
        with pytest.raises(InexactOperationError):
            dual_exp(dual(1))

    def test_forward_derivative(self):
        """测试 θ 分量给出导数"""
        assert forward_derivative(lambda x: x * x * x, Fraction(2)) == 12

    def test_string_form(self):
        """测试字符串表示"""
        assert str(dual(2, Fraction(-8, 3))) == "2 - 8/3θ"
        assert str(dual(1)) == "1"


class TestFloatMode:
    """浮点与复数模式测试"""

    @pytest.mark.parametrize("x", [0.5, 1.3, 2.0, 3.7])
    def test_pow_slope_matches_finite_difference(self, x):
        """测试 dual_pow 的 θ 分量与中心差分一致（相对误差 1e-6）"""
        step = 1e-5
        exact = dual_pow(DualScalar(x, 1.0), 2.5).slope
        numeric = ((x + step) ** 2.5 - (x - step) ** 2.5) / (2 * step)
        assert exact == pytest.approx(numeric, rel=1e-6)

    @pytest.mark.parametrize("a,b", [(0.5, 3.0), (1.7, -0.4), (2.5, 2.5)])
    def test_pow_composition(self, a, b):
        """测试 (x^a)^b = x^{ab}，且 x^1 = x"""
        x = DualScalar(1.3, -0.6)
        assert dual_pow(x, 1.0).body == pytest.approx(x.body, rel=1e-12)
        lhs, rhs = dual_pow(dual_pow(x, a), b), dual_pow(x, a * b)
        assert lhs.body == pytest.approx(rhs.body, rel=1e-12)
        assert lhs.slope == pytest.approx(rhs.slope, rel=1e-12)

    def test_dual_weight_power(self):
        """测试 a^{Δ+θ} = a^Δ (1 + θ ln a)"""
        result = dual_pow(dual(2.0), dual(0.25, 1.0))
        assert result.body == pytest.approx(2 ** 0.25)
        assert result.slope == pytest.approx(2 ** 0.25 * math.log(2))

    def test_fields(self):
        """测试基域识别与转换"""
        assert dual(Fraction(1, 2), 1).field == FIELD_RATIONAL
        assert dual(Fraction(1, 2), 1).to_float().field == FIELD_REAL
        assert dual(1.0).to_complex().field == FIELD_COMPLEX

    def test_array_bodies(self):
        """测试数组主部的逐元素运算"""
        x = dual(np.array([1.0, 4.0]), np.array([1.0, 1.0]))
        root = dual_sqrt(x)
        np.testing.assert_allclose(root.body, [1.0, 2.0])
        np.testing.assert_allclose(root.slope, [0.5, 0.25])
        scaled = x * Fraction(1, 2)
        np.testing.assert_allclose(scaled.body, [0.5, 2.0])


class TestErrors:
    """错误处理测试"""

    def test_non_invertible(self):
        """测试主部为零不可逆"""
        with pytest.raises(NonInvertibleDualError, match="non-invertible dual scalar"):
            dual_inv(THETA)

    def test_branch_errors(self):
        """测试实数模式负主部与复数分支切割"""
        with pytest.raises(DualBranchError):
            dual_log(dual(-1.0))
        with pytest.raises(DualBranchError):
            dual_log(dual(-1 + 0j))
        with pytest.raises(DualBranchError):
            dual_pow(dual(-2.0), dual(0.25, 1.0))

    def test_singular_power(self):
        """测试零主部的非整数幂"""
        with pytest.raises(DualSingularError):
            dual_pow(dual(0.0), dual(0.5, 1.0))

    def test_unknown_operand(self):
        """测试与不支持的类型运算返回 TypeError"""
        with pytest.raises(TypeError):
            dual(1) + "x"

    def test_hash_and_equality(self):
        """测试相等的对偶数哈希相同"""
        assert hash(dual(1, 2)) == hash(dual(Fraction(1), Fraction(2)))
        assert dual(3) == 3
        assert {dual(1, 2): "a"}[dual(1, 2)] == "a"


if __name__ == "__main__":
    pytest.main([__file__])
