"""
耦合 Löwner 方程积分测试模块
测试随机数子流、单步更新、吞没处理、g 坐标、导数跟踪、强收敛阶与并行确定性
"""

import numpy as np
import pytest
from scipy import special

from src.stochastic.loewner import (
    TRAJECTORY_HEADER,
    MapPointState,
    SdeParams,
    as_points,
    bessel_hit_probability,
    estimate_strong_order,
    evolve,
    evolve_ensemble,
    from_g_frame,
    g_frame_ode_rhs,
    step,
    to_g_frame,
    trajectory_rows,
    upper_half_plane_grid,
    validate_checkpoints,
)
from src.stochastic.streams import block_ranges, block_uniforms, brownian_increments, path_rng


LOCUS = dict(kappa=4.0, kappa_hat=-16.0 / 3.0)


class TestStreams:
    """随机数子流测试"""

    def test_brownian_increments_deterministic(self):
        """测试相同种子输出完全相同"""
        np.testing.assert_array_equal(brownian_increments(7, 100, 0.01), brownian_increments(7, 100, 0.01))

    def test_brownian_increment_statistics(self):
        """测试增量均值为 0、方差为 dt"""
        n, dt = 100000, 0.01
        samples = brownian_increments(3, n, dt)
        assert abs(samples.mean()) < 5 * np.sqrt(dt / n)
        assert samples.var() == pytest.approx(dt, rel=0.02)

    def test_invalid_arguments(self):
        """测试 n < 1 与 dt ≤ 0"""
        with pytest.raises(ValueError):
            brownian_increments(0, 0, 0.01)
        with pytest.raises(ValueError):
            brownian_increments(0, 10, 0.0)

    def test_path_substreams_differ(self):
        """测试不同路径编号得到不同子流"""
        first = path_rng(5, 0).standard_normal(4)
        second = path_rng(5, 1).standard_normal(4)
        assert not np.array_equal(first, second)
        np.testing.assert_array_equal(first, path_rng(5, 0).standard_normal(4))

    def test_auxiliary_stream_is_separate(self):
        """测试辅助子流与 Brownian 子流互不相同且可复现"""
        uniforms = block_uniforms(5, 2, 4, 6)
        assert uniforms.shape == (2, 6)
        assert np.all((uniforms >= 0) & (uniforms < 1))
        np.testing.assert_array_equal(uniforms[0], path_rng(5, 2, stream=1).random(6))
        assert not np.array_equal(path_rng(5, 2, stream=1).random(6), path_rng(5, 2).random(6))

    def test_block_ranges(self):
        """测试路径分块覆盖全部编号"""
        assert block_ranges(7, 3) == [(0, 3), (3, 6), (6, 7)]
        with pytest.raises(ValueError):
            block_ranges(0, 3)


class TestSdeParams:
    """参数校验测试"""

    def test_rejects_bad_values(self):
        """测试 κ ≤ 0、dt > t_max 与负种子"""
        with pytest.raises(ValueError, match="kappa"):
            SdeParams(kappa=0.0)
        with pytest.raises(ValueError):
            SdeParams(kappa=4.0, dt=1.0, t_max=0.5)
        with pytest.raises(ValueError):
            SdeParams(kappa=4.0, seed=-1)
        with pytest.raises(ValueError, match="stop_level"):
            SdeParams(kappa=4.0, stop_level=-0.1)

    def test_derived_quantities(self):
        """测试 √κ、κ̂/(2√κ) 与步数"""
        params = SdeParams(dt=1e-3, t_max=0.5, **LOCUS)
        assert params.sqrt_kappa == pytest.approx(2.0)
        assert params.hat_diffusion == pytest.approx(-4.0 / 3.0)
        assert params.n_steps == 500

    def test_hit_index(self):
        """测试 κ > 4 时实轴才会被吞没"""
        assert not SdeParams(kappa=4.0).absorbs_on_real_axis
        assert SdeParams(kappa=8.0).hit_index == pytest.approx(0.25)
        assert SdeParams(kappa=6.0).absorbs_on_real_axis


class TestStep:
    """单步更新测试"""

    def test_one_step_matches_formulas(self):
        """测试单步结果与 Euler–Maruyama 公式一致"""
        params = SdeParams(dt=1e-4, t_max=0.1, **LOCUS)
        z, dB, dt = 1 + 1j, 0.01, 1e-4
        new = step(MapPointState.initial(z), dB, dt, params)
        assert new.h == pytest.approx(z + 2 * dt / z - 2.0 * dB)
        assert new.h_hat == pytest.approx((4.0 / 3.0) * dB)
        assert new.dh_dz == pytest.approx(1 - 2 * dt / z ** 2)
        assert new.dh_hat_dz == pytest.approx(0.0)
        assert new.t == pytest.approx(dt)
        assert not new.swallowed

    def test_sign_change_swallows(self):
        """测试实轴点变号时被吞没并保留上一步的值"""
        params = SdeParams(kappa=4.0, dt=1e-4, t_max=0.1, max_substep_depth=0)
        state = MapPointState.initial(0.01)
        new = step(state, 1.0, 1e-4, params)
        assert new.swallowed
        assert new.h == pytest.approx(0.01)
        assert step(new, 0.0, 1e-4, params) is new

    def test_substepping_keeps_real_point_alive(self):
        """测试细分后小增量不会误判吞没"""
        params = SdeParams(kappa=4.0, dt=1e-3, t_max=0.1)
        new = step(MapPointState.initial(0.05), 0.001, 1e-3, params)
        assert not new.swallowed
        assert new.h > 0.05

    def test_bessel_hit_probability(self):
        """测试单步吞没概率等于 Bessel 首中时分布"""
        h = np.array([0.0, 0.01, -0.01, 0.1, 1.0])
        assert np.all(bessel_hit_probability(h, 1e-3, 4.0) == 0)
        p = bessel_hit_probability(h, 1e-3, 8.0)
        assert p[0] == pytest.approx(1.0)
        assert p[1] == pytest.approx(p[2])
        assert p[1] == pytest.approx(special.gammaincc(0.25, 1e-4 / (16 * 1e-3)))
        assert 1.0 > p[1] > p[3] > p[4] >= 0.0
        assert p[4] < 1e-12

    def test_step_with_uniform_absorbs(self):
        """测试给出 U(0,1) 样本时按首中概率吞没，状态停在步首"""
        params = SdeParams(kappa=8.0, dt=1e-3, t_max=0.1)
        state = MapPointState.initial(0.01)
        hit = step(state, 0.0, 1e-3, params, u=0.0)
        assert hit.swallowed
        assert hit.h == 0.01 and hit.dh_dz == 1.0
        missed = step(state, 0.0, 1e-3, params, u=0.999999)
        assert not missed.swallowed
        assert missed.h > 0.01
        assert not step(state, 0.0, 1e-3, SdeParams(kappa=4.0, dt=1e-3, t_max=0.1), u=0.0).swallowed


class TestEnsemble:
    """路径集合测试"""

    def test_deterministic_and_worker_invariant(self):
        """测试相同种子的结果与块大小、进程数无关"""
        params = SdeParams(dt=1e-2, t_max=0.2, seed=42, **LOCUS)
        points = [0.5, 1.0 + 0.5j]
        base = evolve_ensemble(points, params, [0.0, 0.1, 0.2], n_paths=12)
        again = evolve_ensemble(points, params, [0.0, 0.1, 0.2], n_paths=12, block_size=5)
        parallel = evolve_ensemble(points, params, [0.0, 0.1, 0.2], n_paths=12, workers=2, block_size=4)
        for other in (again, parallel):
            np.testing.assert_array_equal(base.h, other.h)
            np.testing.assert_array_equal(base.h_hat, other.h_hat)
            np.testing.assert_array_equal(base.swallowed, other.swallowed)
            np.testing.assert_array_equal(base.brownian, other.brownian)

    def test_shapes_and_initial_snapshot(self):
        """测试数组形状与 t = 0 快照"""
        params = SdeParams(dt=1e-2, t_max=0.1, **LOCUS)
        ensemble = evolve_ensemble([0.5j, 1 + 1j, 2.0], params, [0.0, 0.1], n_paths=3)
        assert ensemble.h.shape == (3, 2, 3)
        assert ensemble.brownian.shape == (3, 2)
        np.testing.assert_array_equal(ensemble.h[:, 0, :], np.tile([0.5j, 1 + 1j, 2.0], (3, 1)))
        np.testing.assert_array_equal(ensemble.dh_dz[:, 0, :], np.ones((3, 3)))

    def test_kappa_hat_zero_reduction(self):
        """测试 κ̂ = 0 时 ĥ 与 ∂ĥ 恒为零，且 h 与 κ̂ 无关"""
        points = [0.3 + 0.7j, 1.5]
        plain = evolve_ensemble(points, SdeParams(kappa=4.0, kappa_hat=0.0, dt=1e-2, t_max=0.3), [0.3], 20)
        coupled = evolve_ensemble(points, SdeParams(dt=1e-2, t_max=0.3, **LOCUS), [0.3], 20)
        assert np.all(plain.h_hat == 0)
        assert np.all(plain.dh_hat_dz == 0)
        np.testing.assert_array_equal(plain.h, coupled.h)
        np.testing.assert_array_equal(plain.swallowed, coupled.swallowed)

    def test_kappa_four_never_swallows(self):
        """测试 κ = 4 时正实轴点在 t ≤ 1 内几乎不被吞没（1000 条路径，比例低于 1%）"""
        params = SdeParams(kappa=4.0, kappa_hat=-16.0 / 3.0, dt=2e-3, t_max=1.0, seed=9)
        ensemble = evolve_ensemble([0.5, 1.0, 2.0], params, [1.0], 1000)
        assert ensemble.absorbed_fraction() < 0.01

    @pytest.mark.parametrize("kappa", [6.0, 8.0])
    def test_swallowed_fraction_follows_bessel_law(self, kappa):
        """测试 κ > 4 时吞没比例与 Bessel 首中概率 Q(1/2 − 2/κ, x²/(2κt)) 一致"""
        x, t = 0.5, 1.0
        params = SdeParams(kappa=kappa, dt=1e-3, t_max=t, seed=9)
        ensemble = evolve_ensemble([x], params, [t], 400)
        expected = special.gammaincc(0.5 - 2.0 / kappa, x ** 2 / (2 * kappa * t))
        assert ensemble.absorbed_fraction() == pytest.approx(expected, abs=0.1)
        assert ensemble.absorbed_fraction() > 0.3

    def test_swallowed_points_stay_frozen(self):
        """测试被吞没后状态不再变化"""
        params = SdeParams(kappa=8.0, dt=1e-2, t_max=1.0, seed=1)
        ensemble = evolve_ensemble([0.2], params, [0.5, 1.0], 50)
        frozen = ensemble.swallowed[:, 0, 0]
        assert frozen.any()
        assert np.all(ensemble.swallowed[frozen, 1, 0])
        np.testing.assert_array_equal(ensemble.h[frozen, 0, 0], ensemble.h[frozen, 1, 0])
        np.testing.assert_array_equal(ensemble.dh_dz[frozen, 0, 0], ensemble.dh_dz[frozen, 1, 0])
        np.testing.assert_array_equal(ensemble.h_hat[frozen, 0, 0], ensemble.h_hat[frozen, 1, 0])

    def test_absorption_is_worker_invariant(self):
        """测试吞没判定的随机样本同样只依赖 (种子, 路径编号)"""
        params = SdeParams(kappa=8.0, dt=1e-2, t_max=0.5, seed=21)
        base = evolve_ensemble([0.2, 0.4], params, [0.25, 0.5], n_paths=12)
        split = evolve_ensemble([0.2, 0.4], params, [0.25, 0.5], n_paths=12, workers=2, block_size=5)
        np.testing.assert_array_equal(base.swallowed, split.swallowed)
        np.testing.assert_array_equal(base.h, split.h)

    def test_stop_level_freezes_paths(self):
        """测试 |h| ≤ stop_level 的路径在网格时刻停止，其余路径始终在停止线以上"""
        level = 0.3
        params = SdeParams(kappa=4.0, dt=1e-2, t_max=1.0, seed=2, stop_level=level)
        ensemble = evolve_ensemble([0.5], params, [0.25, 0.5, 1.0], 200)
        stopped = ensemble.swallowed[:, -1, 0]
        assert stopped.any() and not stopped.all()
        assert np.all(ensemble.h[stopped, -1, 0] <= level)
        assert np.all(ensemble.h[stopped, -1, 0] > 0)
        assert np.all(ensemble.h[~ensemble.swallowed] > level)
        first = ensemble.swallowed[:, 0, 0]
        np.testing.assert_array_equal(ensemble.h[first, 0, 0], ensemble.h[first, -1, 0])

    def test_point_validation(self):
        """测试空点列表与非法检查点"""
        with pytest.raises(ValueError, match="empty point list"):
            as_points([])
        with pytest.raises(ValueError):
            validate_checkpoints([0.2, 0.1], 0.5)
        with pytest.raises(ValueError):
            validate_checkpoints([0.0, 0.7], 0.5)


class TestFramesAndDerivatives:
    """g 坐标与导数跟踪测试"""

    def test_g_frame_is_driftless_ode(self):
        """测试 g 坐标下的增量等于 ODE 右端乘以 dt"""
        dt = 1e-3
        params = SdeParams(dt=dt, t_max=0.01, seed=4, **LOCUS)
        record = evolve([0.5 + 1j], params, [dt, 2 * dt])
        first, second = record.states[0][0], record.states[1][0]
        g1, gh1 = to_g_frame(first, record.brownian[0], params)
        g2, gh2 = to_g_frame(second, record.brownian[1], params)
        rhs_g, rhs_gh = g_frame_ode_rhs(g1, gh1, record.brownian[0], params)
        assert g2 - g1 == pytest.approx(rhs_g * dt, rel=1e-9)
        assert gh2 - gh1 == pytest.approx(rhs_gh * dt, rel=1e-9, abs=1e-15)

    def test_frame_round_trip(self):
        """测试 from_g_frame 是 to_g_frame 的逆"""
        params = SdeParams(**LOCUS)
        state = MapPointState(z0=1j, h=0.3 + 0.8j, h_hat=0.2 - 0.1j, dh_dz=1 + 0j, dh_hat_dz=0j)
        g, g_hat = to_g_frame(state, 0.37, params)
        h, h_hat = from_g_frame(g, g_hat, 0.37, params)
        assert h == pytest.approx(state.h)
        assert h_hat == pytest.approx(state.h_hat)

    def test_derivatives_match_finite_differences(self):
        """测试 ∂h、∂ĥ 与相邻种子点的中心差分一致（相对误差 1e-3）"""
        delta = 1e-5
        z = 1 + 2j
        params = SdeParams(dt=1e-3, t_max=0.5, seed=13, max_substep_depth=0, **LOCUS)
        ensemble = evolve_ensemble([z - delta, z, z + delta], params, [0.5], n_paths=3)
        for path in range(3):
            fd_h = (ensemble.h[path, 0, 2] - ensemble.h[path, 0, 0]) / (2 * delta)
            fd_hhat = (ensemble.h_hat[path, 0, 2] - ensemble.h_hat[path, 0, 0]) / (2 * delta)
            assert ensemble.dh_dz[path, 0, 1] == pytest.approx(fd_h, rel=1e-3)
            assert ensemble.dh_hat_dz[path, 0, 1] == pytest.approx(fd_hhat, rel=1e-3, abs=1e-8)

    def test_strong_order(self):
        """测试步长折半下的强收敛阶至少为 0.4 且误差单调下降"""
        params = SdeParams(kappa=2.0, kappa_hat=1.0, dt=1e-2, t_max=0.25, seed=3, max_substep_depth=0)
        result = estimate_strong_order(1 + 2j, params, n_paths=100, levels=3, refinement=8)
        assert result.dts == pytest.approx([1e-2, 5e-3, 2.5e-3])
        assert result.errors[0] > result.errors[1] > result.errors[2]
        assert result.order >= 0.4


class TestTrajectoryOutput:
    """轨迹输出测试"""

    def test_rows(self):
        """测试 CSV 行的数量与字段"""
        params = SdeParams(dt=1e-2, t_max=0.1, **LOCUS)
        ensemble = evolve_ensemble([1j, 2.0], params, [0.0, 0.05, 0.1], n_paths=2)
        rows = list(trajectory_rows(ensemble))
        assert len(rows) == 2 * 2 * 3
        assert list(rows[0]) == TRAJECTORY_HEADER
        assert rows[0]["Im_h"] == 1.0 and rows[0]["swallowed"] == 0

    def test_grid(self):
        """测试上半平面网格"""
        grid = upper_half_plane_grid(5, 4)
        assert grid.shape == (20,)
        assert np.all(grid.imag > 0)
        with pytest.raises(ValueError):
            upper_half_plane_grid(im_range=(0.0, 1.0))


if __name__ == "__main__":
    pytest.main([__file__])
