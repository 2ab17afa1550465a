import numpy as np
import pytest

from specmix.core import (
    AlbedoSpectrum,
    EndmemberMatrix,
    Geometry,
    GroundTruth,
    HyperCube,
    PhotometricParams,
    UnmixResult,
    WavelengthAxis,
    cos_deg,
    phase_angle_deg,
    validate_cube,
)


def make_axis(n=3):
    return WavelengthAxis(np.linspace(0.4, 2.5, n))


class TestWavelengthAxis:
    def test_strictly_increasing_required(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            WavelengthAxis([0.4, 0.4, 0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            WavelengthAxis([])

    def test_single_band_allowed(self):
        assert len(WavelengthAxis([1.0])) == 1

    def test_values_read_only(self):
        axis = make_axis()
        with pytest.raises(ValueError):
            axis.values[0] = 99.0


class TestAlbedoSpectrum:
    def test_range_enforced_not_clamped(self):
        with pytest.raises(ValueError, match="outside"):
            AlbedoSpectrum(material="m", omega=[0.1, 1.2, 0.3], axis=make_axis())
        with pytest.raises(ValueError, match="outside"):
            AlbedoSpectrum(material="m", omega=[-0.01, 0.2, 0.3], axis=make_axis())

    def test_length_must_match_axis(self):
        with pytest.raises(ValueError, match="does not match"):
            AlbedoSpectrum(material="m", omega=[0.1, 0.2], axis=make_axis())

    def test_boundary_values_allowed(self):
        spectrum = AlbedoSpectrum(material="m", omega=[0.0, 1.0, 0.5], axis=make_axis())
        assert spectrum.omega[1] == 1.0


class TestPhotometricParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(b=-0.1, c=0.5, B0=0.0, h=0.1),
            dict(b=1.1, c=0.5, B0=0.0, h=0.1),
            dict(b=0.5, c=1.5, B0=0.0, h=0.1),
            dict(b=0.5, c=0.5, B0=-1.0, h=0.1),
            dict(b=0.5, c=0.5, B0=0.0, h=0.0),
        ],
    )
    def test_bounds(self, kwargs):
        with pytest.raises(ValueError):
            PhotometricParams(**kwargs)

    def test_specular_corner_allowed(self):
        params = PhotometricParams(b=1.0, c=1.0, B0=0.0, h=0.1)
        assert params.b == 1.0


class TestGeometry:
    def test_angle_ranges(self):
        with pytest.raises(ValueError):
            Geometry(theta0=-1.0, theta=0.0)
        with pytest.raises(ValueError):
            Geometry(theta0=0.0, theta=90.5)
        with pytest.raises(ValueError):
            Geometry(theta0=0.0, theta=0.0, phi=181.0)

    def test_raking_light_gives_exact_zero_cosine(self):
        geom = Geometry(theta0=90.0, theta=45.0)
        assert geom.mu0 == 0.0
        assert Geometry(theta0=0.0, theta=0.0).mu0 == 1.0

    def test_phase_angle_known_values(self):
        # coincident directions
        assert Geometry(theta0=45.0, theta=45.0, phi=0.0).g == pytest.approx(0.0, abs=1e-12)
        # opposed at the horizon
        assert Geometry(theta0=90.0, theta=90.0, phi=180.0).g == pytest.approx(180.0)
        # orthogonal: one at zenith-sun nadir view
        assert Geometry(theta0=90.0, theta=0.0, phi=0.0).g == pytest.approx(90.0)

    def test_phase_angle_always_in_range(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            theta0, theta = rng.uniform(0, 90, 2)
            phi = rng.uniform(0, 180)
            g = phase_angle_deg(theta0, theta, phi)
            assert 0.0 <= g <= 180.0

    def test_cos_deg_matches_cosine(self):
        angles = np.linspace(0.0, 90.0, 91)
        np.testing.assert_allclose(cos_deg(angles), np.cos(np.radians(angles)), atol=1e-15)


class TestValidateCube:
    def make_cube(self, values, n_geoms=None):
        axis = make_axis(values.shape[0])
        geometries = None
        if n_geoms is not None:
            geometries = tuple(Geometry(theta0=10.0 * k % 90, theta=5.0, phi=0.0) for k in range(n_geoms))
        return HyperCube(values=values, axis=axis, geometries=geometries)

    def test_well_formed_cube_is_clean(self):
        cube = self.make_cube(np.full((3, 2), 0.25), n_geoms=2)
        assert validate_cube(cube) == []

    def test_negative_reflectance_reported_with_location(self):
        values = np.full((3, 2), 0.25)
        values[2, 1] = -0.5
        report = validate_cube(self.make_cube(values))
        assert len(report) == 1
        assert "band 2" in report[0] and "pixel 1" in report[0]

    def test_geometry_count_mismatch_reported(self):
        cube = self.make_cube(np.full((3, 4), 0.25), n_geoms=5)
        report = validate_cube(cube)
        assert len(report) == 1
        assert "5" in report[0] and "4" in report[0]

    def test_ground_truth_shape_mismatch_reported(self):
        axis = make_axis(3)
        gt = GroundTruth(abundances=np.full((2, 3), 0.5))
        cube = HyperCube(values=np.full((3, 4), 0.2), axis=axis, ground_truth=gt)
        assert any("ground-truth" in line for line in validate_cube(cube))


class TestEndmemberMatrix:
    def test_labels_must_match_columns(self):
        with pytest.raises(ValueError):
            EndmemberMatrix(values=np.ones((4, 2)), materials=("a",))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            EndmemberMatrix(values=-np.ones((4, 2)), materials=("a", "b"))


class TestUnmixResult:
    def make(self, A, psi, sum_to_one=True):
        n = A.shape[1]
        return UnmixResult(
            abundances=A,
            scales=psi,
            residual_rmse=np.zeros(n),
            iterations=np.ones(n, dtype=np.int64),
            converged=True,
            sum_to_one=sum_to_one,
        )

    def test_column_sums_checked_when_sum_to_one(self):
        A = np.array([[0.6, 0.3], [0.5, 0.7]])
        with pytest.raises(ValueError, match="sum to 1"):
            self.make(A, np.ones_like(A))

    def test_negative_abundance_rejected(self):
        A = np.array([[1.2], [-0.2]])
        with pytest.raises(ValueError, match="non-negative"):
            self.make(A, np.ones_like(A))

    def test_nonpositive_scale_rejected(self):
        A = np.array([[0.5], [0.5]])
        with pytest.raises(ValueError, match="positive"):
            self.make(A, np.zeros_like(A))

    def test_sum_free_mode_skips_sum_check(self):
        A = np.array([[0.6], [0.9]])
        result = self.make(A, np.ones_like(A), sum_to_one=False)
        assert result.n_materials == 2
