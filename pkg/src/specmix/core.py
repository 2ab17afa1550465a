"""Shared domain types: wavelength grids, albedo spectra, photometry,
acquisition geometry, endmember matrices, image cubes and unmixing results.

All types are immutable after construction (arrays are stored read-only), so
instances can be shared freely across threads.  Angles are degrees at every
public boundary and converted to radians only inside the trigonometric
helpers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]

#: Absolute slack allowed on abundance column sums when sum-to-one is enforced.
SUM_TO_ONE_TOL = 1e-9


def _readonly(values, dtype=np.float64, ndim: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def cos_deg(angle_deg):
    """Cosine of an angle given in degrees.

    Evaluated as sin(90 - x) so that the endpoints are exact: cos_deg(90.0)
    is 0.0 and cos_deg(0.0) is 1.0, which grazing-geometry identities rely on.
    """
    return np.sin(np.radians(90.0 - np.asarray(angle_deg, dtype=float)))


def sin_deg(angle_deg):
    """Sine of an angle given in degrees (exact at 0)."""
    return np.sin(np.radians(np.asarray(angle_deg, dtype=float)))


def phase_angle_deg(theta0: float, theta: float, phi: float) -> float:
    """Phase angle from incidence, emergence and azimuth angles (degrees).

    Spherical law of cosines,
    cos g = cos(theta0) cos(theta) + sin(theta0) sin(theta) cos(phi),
    evaluated in its half-angle (haversine) rearrangement: the arccosine
    form loses eight digits near g = 0, where the opposition surge makes
    the phase angle matter most.  Always lands in [0, 180].
    """
    half_chord_sq = sin_deg((theta0 - theta) / 2.0) ** 2 + sin_deg(theta0) * sin_deg(theta) * sin_deg(phi / 2.0) ** 2
    half_chord = np.sqrt(np.clip(half_chord_sq, 0.0, 1.0))
    return float(2.0 * np.degrees(np.arcsin(half_chord)))


@dataclass(frozen=True)
class WavelengthAxis:
    """Strictly increasing wavelength grid in micrometers."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = _readonly(self.values, ndim=1, name="wavelengths")
        if arr.size < 1:
            raise ValueError("wavelength axis must contain at least one band")
        if not np.all(np.isfinite(arr)):
            raise ValueError("wavelengths must be finite")
        if arr.size > 1 and not np.all(np.diff(arr) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class AlbedoSpectrum:
    """Per-wavelength single-scattering albedo of one material.

    Albedo is intrinsic to the material (independent of geometry and
    photometry); values must lie in [0, 1].  Out-of-range values are an
    error, never clamped: silent clamping hides bad input data.
    """

    material: str
    omega: FloatArray
    axis: WavelengthAxis

    def __post_init__(self) -> None:
        arr = _readonly(self.omega, ndim=1, name="omega")
        if arr.size != len(self.axis):
            raise ValueError(
                f"albedo length {arr.size} does not match wavelength axis length {len(self.axis)}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("albedo values must be finite")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            bad = int(np.argmax((arr < 0.0) | (arr > 1.0)))
            raise ValueError(
                f"albedo of {self.material!r} outside [0, 1] at band {bad} (value={arr[bad]})"
            )
        object.__setattr__(self, "omega", arr)

    def __len__(self) -> int:
        return int(self.omega.size)


@dataclass(frozen=True)
class PhotometricParams:
    """Scattering and opposition-effect parameters of one material.

    b: asymmetry of the scattering lobes, in [0, 1] (1 = narrow/specular).
    c: backward-scattering fraction, in [0, 1] (0.5 with b=0 is Lambertian).
    B0: opposition-surge strength, non-negative.
    h: angular width of the opposition surge, strictly positive.
    """

    b: float
    c: float
    B0: float
    h: float

    def __post_init__(self) -> None:
        for name in ("b", "c", "B0", "h"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"photometric parameter {name} must be finite")
            object.__setattr__(self, name, float(value))
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"asymmetry b must be in [0, 1], got {self.b}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"backscatter fraction c must be in [0, 1], got {self.c}")
        if self.B0 < 0.0:
            raise ValueError(f"opposition strength B0 must be >= 0, got {self.B0}")
        if self.h <= 0.0:
            raise ValueError(f"opposition width h must be > 0, got {self.h}")


@dataclass(frozen=True)
class Geometry:
    """Acquisition angles of one pixel, in degrees.

    theta0 is the incidence (sun zenith) angle, theta the emergence (sensor)
    angle, phi the azimuth between the projected sun and sensor directions.
    The phase angle g is always derived from the other three; theta0 = 90
    (raking light) is a valid configuration and gives mu0 exactly 0.
    """

    theta0: float
    theta: float
    phi: float = 0.0
    g: float = field(init=False)

    def __post_init__(self) -> None:
        for name, hi in (("theta0", 90.0), ("theta", 90.0), ("phi", 180.0)):
            value = getattr(self, name)
            if not np.isfinite(value) or not 0.0 <= value <= hi:
                raise ValueError(f"{name} must be in [0, {hi:g}] degrees, got {value}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "g", phase_angle_deg(self.theta0, self.theta, self.phi))

    @property
    def mu0(self) -> float:
        """Cosine of the incidence angle."""
        return float(cos_deg(self.theta0))

    @property
    def mu(self) -> float:
        """Cosine of the emergence angle."""
        return float(cos_deg(self.theta))


@dataclass(frozen=True)
class EndmemberMatrix:
    """Reference reflectance spectra of the pure materials, one per column."""

    values: FloatArray  # bands x materials
    materials: tuple[str, ...]

    def __post_init__(self) -> None:
        arr = _readonly(self.values, ndim=2, name="endmember matrix")
        if arr.shape[1] != len(self.materials):
            raise ValueError(
                f"{len(self.materials)} material labels for {arr.shape[1]} columns"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("endmember reflectances must be finite")
        if np.any(arr < 0.0):
            raise ValueError("endmember reflectances must be non-negative")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "materials", tuple(str(m) for m in self.materials))

    @property
    def n_bands(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_materials(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class GroundTruth:
    """Generative parameters stored with a simulated cube.

    scales is None when the generating model admits no exact per-pixel
    scaling factor (anything but the linear model).
    """

    abundances: FloatArray  # materials x pixels
    scales: FloatArray | None = None
    endmembers: EndmemberMatrix | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "abundances", _readonly(self.abundances, ndim=2, name="abundances"))
        if self.scales is not None:
            object.__setattr__(self, "scales", _readonly(self.scales, ndim=2, name="scales"))


@dataclass(frozen=True)
class HyperCube:
    """Reflectance image: bands x pixels matrix plus its wavelength axis.

    Construction only enforces structural shape; value-level invariants
    (non-negative reflectance, geometry count) are reported by
    validate_cube so that malformed files can be loaded and diagnosed.
    """

    values: FloatArray  # bands x pixels
    axis: WavelengthAxis
    geometries: tuple[Geometry, ...] | None = None
    ground_truth: GroundTruth | None = None

    def __post_init__(self) -> None:
        arr = _readonly(self.values, ndim=2, name="cube values")
        object.__setattr__(self, "values", arr)
        if self.geometries is not None:
            object.__setattr__(self, "geometries", tuple(self.geometries))

    @property
    def n_bands(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_pixels(self) -> int:
        return int(self.values.shape[1])


def validate_cube(cube: HyperCube) -> list[str]:
    """Check cube invariants and return human-readable violations.

    Returns an empty list iff the cube is well formed.  Reports rather than
    raises so a verification pass can list every problem at once.
    """
    violations: list[str] = []
    X = cube.values
    if X.shape[0] != len(cube.axis):
        violations.append(
            f"band count {X.shape[0]} does not match wavelength axis length {len(cube.axis)}"
        )
    if not np.all(np.isfinite(X)):
        band, pixel = np.unravel_index(int(np.argmax(~np.isfinite(X))), X.shape)
        violations.append(f"non-finite reflectance at band {band}, pixel {pixel}")
    elif np.any(X < 0.0):
        band, pixel = np.unravel_index(int(np.argmax(X < 0.0)), X.shape)
        violations.append(
            f"negative reflectance at band {band}, pixel {pixel} (value={X[band, pixel]})"
        )
    if cube.geometries is not None and len(cube.geometries) != cube.n_pixels:
        violations.append(
            f"geometry count {len(cube.geometries)} does not match pixel count {cube.n_pixels}"
        )
    gt = cube.ground_truth
    if gt is not None:
        if gt.abundances.shape[1] != cube.n_pixels:
            violations.append(
                f"ground-truth abundances have {gt.abundances.shape[1]} pixels, cube has {cube.n_pixels}"
            )
        if gt.scales is not None and gt.scales.shape != gt.abundances.shape:
            violations.append(
                f"ground-truth scales shape {gt.scales.shape} does not match abundances {gt.abundances.shape}"
            )
    return violations


@dataclass(frozen=True)
class UnmixResult:
    """Abundances, scaling factors and diagnostics of one unmixing run."""

    abundances: FloatArray  # materials x pixels
    scales: FloatArray  # materials x pixels
    residual_rmse: FloatArray  # per pixel
    iterations: NDArray[np.int64]  # per pixel
    converged: bool
    sum_to_one: bool = True
    objective_traces: tuple[FloatArray, ...] = ()
    degenerate: NDArray[np.bool_] | None = None

    def __post_init__(self) -> None:
        A = _readonly(self.abundances, ndim=2, name="abundances")
        psi = _readonly(self.scales, ndim=2, name="scales")
        if psi.shape != A.shape:
            raise ValueError(f"scales shape {psi.shape} does not match abundances {A.shape}")
        if np.any(A < 0.0):
            raise ValueError("abundances must be non-negative")
        if self.sum_to_one:
            sums = A.sum(axis=0)
            worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
            if worst > SUM_TO_ONE_TOL:
                raise ValueError(f"abundance columns must sum to 1 (worst deviation {worst:.3e})")
        if np.any(psi <= 0.0):
            raise ValueError("scaling factors must be strictly positive")
        object.__setattr__(self, "abundances", A)
        object.__setattr__(self, "scales", psi)
        object.__setattr__(self, "residual_rmse", _readonly(self.residual_rmse, ndim=1, name="residual_rmse"))
        object.__setattr__(
            self, "iterations", _readonly(self.iterations, dtype=np.int64, ndim=1, name="iterations")
        )
        object.__setattr__(self, "objective_traces", tuple(self.objective_traces))

    @property
    def n_pixels(self) -> int:
        return int(self.abundances.shape[1])

    @property
    def n_materials(self) -> int:
        return int(self.abundances.shape[0])
