import numpy as np
import pytest

from bruteforce import elmm_full_oracle_two_materials, fcls_oracle_two_materials, kkt_violation
from specmix.core import AlbedoSpectrum, Geometry, WavelengthAxis
from specmix.simulate import GeometrySampler, SceneConfig, simulate_cube
from specmix.solver import (
    GlobalScalingFit,
    SolverConfig,
    fcls,
    unmix_cube,
    unmix_elmm_full,
    unmix_elmm_global,
)


def random_endmembers(n_bands, n_materials, rng, low=0.05, high=1.0):
    return rng.uniform(low, high, (n_bands, n_materials))


def monotone(trace, slack=1e-12):
    return bool(np.all(np.diff(trace) <= slack))


class TestSolverConfig:
    def test_psi_bounds_must_bracket_one(self):
        with pytest.raises(ValueError, match="psi_bounds"):
            SolverConfig(psi_bounds=(1.5, 2.0))
        with pytest.raises(ValueError, match="psi_bounds"):
            SolverConfig(psi_bounds=(0.0, 2.0))

    def test_scaled_models_require_sum_to_one(self):
        with pytest.raises(ValueError, match="sum_to_one"):
            SolverConfig(model="elmm-full", sum_to_one=False)
        SolverConfig(model="lmm", sum_to_one=False)  # allowed

    def test_dict_round_trip(self):
        config = SolverConfig(model="elmm-global", max_iters=77, tol=1e-9, psi_bounds=(0.5, 3.0))
        assert SolverConfig.from_dict(config.to_dict()) == config


class TestFcls:
    def test_pure_pixel_recovers_indicator(self):
        rng = np.random.default_rng(0)
        S = random_endmembers(12, 4, rng)
        for p in range(4):
            a = fcls(S[:, p], S)
            expected = np.zeros(4)
            expected[p] = 1.0
            np.testing.assert_allclose(a, expected, atol=1e-8)

    def test_midpoint_mixture_recovered(self):
        rng = np.random.default_rng(1)
        S = random_endmembers(10, 2, rng)
        x = 0.5 * S[:, 0] + 0.5 * S[:, 1]
        np.testing.assert_allclose(fcls(x, S), [0.5, 0.5], atol=1e-8)

    def test_objective_matches_grid_oracle(self):
        rng = np.random.default_rng(2)
        S = random_endmembers(4, 2, rng)
        x = rng.uniform(0.0, 1.0, 4)
        a = fcls(x, S)
        objective = float(np.sum((x - S @ a) ** 2))
        assert objective <= fcls_oracle_two_materials(S, x) + 1e-9

    def test_kkt_conditions_hold(self):
        rng = np.random.default_rng(3)
        for sum_to_one in (True, False):
            for _ in range(50):
                S = random_endmembers(8, 4, rng)
                x = rng.uniform(-0.2, 1.2, 8)
                a = fcls(x, S, sum_to_one=sum_to_one)
                violation, stationarity = kkt_violation(S, x, a, sum_to_one)
                assert violation >= -1e-8
                assert stationarity <= 1e-8
                assert np.all(a >= 0.0)
                if sum_to_one:
                    assert np.sum(a) == pytest.approx(1.0, abs=1e-9)

    def test_rank_deficient_matrix_rejected(self):
        S = np.ones((5, 2))
        with pytest.raises(ValueError, match="rank"):
            fcls(np.ones(5), S)

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(4)
        S = random_endmembers(6, 2, rng)
        with pytest.raises(ValueError, match="length"):
            fcls(np.ones(5), S)

    def test_more_materials_than_bands_rejected(self):
        rng = np.random.default_rng(5)
        S = random_endmembers(2, 3, rng)
        with pytest.raises(ValueError, match="bands"):
            fcls(np.ones(2), S)

    def test_unconstrained_sum_mode(self):
        rng = np.random.default_rng(6)
        S = random_endmembers(10, 3, rng)
        z_true = np.array([0.3, 0.0, 1.9])
        a = fcls(S @ z_true, S, sum_to_one=False)
        np.testing.assert_allclose(a, z_true, atol=1e-8)


class TestGlobalScaling:
    def config(self, **kw):
        return SolverConfig(model="elmm-global", **kw)

    def test_doubled_mixture_recovers_scale_two(self):
        rng = np.random.default_rng(7)
        S = random_endmembers(20, 3, rng)
        a_true = np.array([0.2, 0.5, 0.3])
        fit = unmix_elmm_global(2.0 * (S @ a_true), S, self.config())
        assert fit.scale == pytest.approx(2.0, abs=1e-8)
        np.testing.assert_allclose(fit.abundances, a_true, atol=1e-8)
        assert not fit.degenerate

    def test_unit_scale_matches_fcls(self):
        rng = np.random.default_rng(8)
        S = random_endmembers(15, 3, rng)
        x = S @ np.array([0.6, 0.1, 0.3])
        fit = unmix_elmm_global(x, S, self.config())
        np.testing.assert_allclose(fit.abundances, fcls(x, S), atol=1e-8)
        assert fit.scale == pytest.approx(1.0, abs=1e-8)

    def test_generate_and_recover(self):
        rng = np.random.default_rng(9)
        S = random_endmembers(50, 3, rng)
        a_true = rng.dirichlet(np.ones(3))
        psi_true = 0.7
        fit = unmix_elmm_global(psi_true * (S @ a_true), S, self.config())
        assert fit.scale == pytest.approx(psi_true, abs=1e-6)
        np.testing.assert_allclose(fit.abundances, a_true, atol=1e-6)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(10)
        S = random_endmembers(25, 3, rng)
        x = S @ rng.dirichlet(np.ones(3)) + rng.normal(0, 0.01, 25)
        first = unmix_elmm_global(x, S, self.config())
        second = unmix_elmm_global(1.7 * x, S, self.config())
        np.testing.assert_allclose(second.abundances, first.abundances, atol=1e-8)
        assert second.scale == pytest.approx(1.7 * first.scale, rel=1e-8)

    def test_degenerate_pixel_flagged(self):
        rng = np.random.default_rng(11)
        S = random_endmembers(10, 3, rng)
        fit = unmix_elmm_global(-np.ones(10), S, self.config(psi_bounds=(0.05, 20.0)))
        assert fit.degenerate
        assert fit.scale == 0.05
        np.testing.assert_allclose(fit.abundances, np.full(3, 1.0 / 3.0))

    def test_scale_outside_bounds_lands_on_bound(self):
        rng = np.random.default_rng(12)
        S = random_endmembers(20, 2, rng)
        x = 9.0 * (S @ np.array([0.5, 0.5]))
        fit = unmix_elmm_global(x, S, self.config(psi_bounds=(0.5, 2.0)))
        assert fit.scale == 2.0
        assert np.sum(fit.abundances) == pytest.approx(1.0, abs=1e-9)


def linear_scene(n_pixels, seed, theta_hi=69.0, n_bands=30):
    rng = np.random.default_rng(seed)
    axis = WavelengthAxis(np.linspace(0.4, 2.5, n_bands))
    albedos = [
        AlbedoSpectrum(material=f"m{k}", omega=rng.uniform(0.1, 0.9, n_bands), axis=axis)
        for k in range(3)
    ]
    config = SceneConfig(
        n_materials=3,
        n_pixels=n_pixels,
        model="linear",
        geometry=GeometrySampler(
            kind="uniform", theta0_range=(0.0, theta_hi), theta_range=(0.0, theta_hi)
        ),
        reference=Geometry(theta0=45.0, theta=45.0, phi=0.0),
        seed=seed,
    )
    return simulate_cube(albedos, [None] * 3, config)


class TestElmmFull:
    def test_linear_scene_reconstructed_to_machine_level(self):
        cube = linear_scene(n_pixels=150, seed=13)
        result = unmix_elmm_full(cube, cube.ground_truth.endmembers)
        assert float(np.max(result.residual_rmse)) < 1e-8
        assert result.converged
        for trace in result.objective_traces:
            assert monotone(trace)

    def test_linear_scene_parameters_recovered(self):
        cube = linear_scene(n_pixels=150, seed=14)
        result = unmix_elmm_full(cube, cube.ground_truth.endmembers)
        gt = cube.ground_truth
        assert float(np.sqrt(np.mean((result.abundances - gt.abundances) ** 2))) < 1e-7
        assert float(np.sqrt(np.mean((result.scales - gt.scales) ** 2))) < 1e-7

    def test_single_material_identifies_product(self):
        rng = np.random.default_rng(15)
        S = rng.uniform(0.1, 0.9, (12, 1))
        axis = WavelengthAxis(np.linspace(0.4, 2.5, 12))
        from specmix.core import HyperCube

        cube = HyperCube(values=1.3 * S, axis=axis)
        result = unmix_elmm_full(cube, S)
        assert result.abundances[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert result.scales[0, 0] == pytest.approx(1.3, abs=1e-8)

    def test_objective_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(16)
        from specmix.core import HyperCube

        axis = WavelengthAxis(np.linspace(0.4, 2.5, 4))
        config = SolverConfig(model="elmm-full", psi_bounds=(0.5, 2.0), tol=1e-12)
        worst = -np.inf
        for _ in range(25):
            S = random_endmembers(4, 2, rng)
            x = rng.uniform(0.0, 1.0, 4)
            cube = HyperCube(values=x[:, None], axis=axis)
            result = unmix_cube(cube, S, config)
            achieved = float(np.sum((x - S @ (result.scales[:, 0] * result.abundances[:, 0])) ** 2))
            oracle = elmm_full_oracle_two_materials(S, x, 0.5, 2.0)
            worst = max(worst, achieved - oracle)
        assert worst <= 1e-6

    def test_unit_psi_bounds_reduce_to_fcls(self):
        cube = linear_scene(n_pixels=40, seed=17)
        S = cube.ground_truth.endmembers
        pinned = unmix_elmm_full(cube, S, SolverConfig(model="elmm-full", psi_bounds=(1.0, 1.0)))
        np.testing.assert_array_equal(pinned.scales, np.ones_like(pinned.scales))
        for n in range(cube.n_pixels):
            np.testing.assert_allclose(
                pinned.abundances[:, n], fcls(cube.values[:, n], S), atol=1e-8
            )

    def test_deterministic(self):
        cube = linear_scene(n_pixels=30, seed=18)
        S = cube.ground_truth.endmembers
        first = unmix_elmm_full(cube, S)
        second = unmix_elmm_full(cube, S)
        np.testing.assert_array_equal(first.abundances, second.abundances)
        np.testing.assert_array_equal(first.scales, second.scales)

    def test_result_feasible(self):
        cube = linear_scene(n_pixels=60, seed=19)
        config = SolverConfig(model="elmm-full", psi_bounds=(0.5, 2.0))
        result = unmix_cube(cube, cube.ground_truth.endmembers, config)
        assert np.all(result.abundances >= 0.0)
        np.testing.assert_allclose(result.abundances.sum(axis=0), 1.0, atol=1e-9)
        assert np.all(result.scales >= 0.5) and np.all(result.scales <= 2.0)


def relative_scene(n_pixels, seed):
    rng = np.random.default_rng(seed)
    n_bands = 30
    axis = WavelengthAxis(np.linspace(0.4, 2.5, n_bands))
    albedos = [
        AlbedoSpectrum(material=f"m{k}", omega=rng.uniform(0.2, 0.95, n_bands), axis=axis)
        for k in range(3)
    ]
    config = SceneConfig(
        n_materials=3,
        n_pixels=n_pixels,
        model="relative",
        geometry=GeometrySampler(kind="uniform", theta0_range=(0.0, 90.0), theta_range=(45.0, 45.0)),
        reference=Geometry(theta0=45.0, theta=45.0, phi=0.0),
        seed=seed,
    )
    return simulate_cube(albedos, [None] * 3, config)


class TestModelComparison:
    def test_scaling_freedom_dominates_plain_fcls_on_curved_data(self):
        for seed in range(3):
            cube = relative_scene(n_pixels=120, seed=20 + seed)
            S = cube.ground_truth.endmembers
            plain = unmix_cube(cube, S, SolverConfig(model="lmm"))
            scaled = unmix_cube(cube, S, SolverConfig(model="elmm-full"))
            assert float(np.mean(scaled.residual_rmse)) < float(np.mean(plain.residual_rmse))

    def test_global_scaling_traces_and_degenerate_counts(self):
        cube = relative_scene(n_pixels=50, seed=31)
        S = cube.ground_truth.endmembers
        result = unmix_cube(cube, S, SolverConfig(model="elmm-global"))
        assert result.degenerate is not None and not result.degenerate.any()
        assert all(t.size == 1 for t in result.objective_traces)

    def test_lmm_without_sum_constraint(self):
        cube = relative_scene(n_pixels=20, seed=32)
        S = cube.ground_truth.endmembers
        result = unmix_cube(cube, S, SolverConfig(model="lmm", sum_to_one=False))
        assert np.all(result.abundances >= 0.0)
        sums = result.abundances.sum(axis=0)
        assert not np.allclose(sums, 1.0, atol=1e-6)  # scaled data pulls sums off 1
