"""Synthetic hyperspectral scene generation.

Per pixel: draw a geometry, evaluate each material's reflectance variant
under the chosen model, mix linearly with sampled abundances, then add
white Gaussian noise scaled to a target SNR.  Every random draw comes from
a per-pixel counter-based stream keyed on (seed, purpose, pixel), so
parallel and serial evaluation orders produce bit-identical scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (
    AlbedoSpectrum,
    EndmemberMatrix,
    FloatArray,
    Geometry,
    GroundTruth,
    HyperCube,
    PhotometricParams,
)
from .hapke import MODELS, endmember_variant, scaling_factor

# stream tags: independent sub-streams per random purpose
_ABUNDANCE_STREAM = 1
_GEOMETRY_STREAM = 2
_NOISE_STREAM = 3


def _pixel_rng(seed: int, stream: int, pixel: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stream), int(pixel)])


@dataclass(frozen=True)
class AbundanceSampler:
    """Abundance column sampler: uniform on the simplex, or Dirichlet.

    kind "uniform" uses the exponential-spacings construction (equivalently
    a flat Dirichlet); kind "dirichlet" uses concentration alpha, with
    alpha < 1 producing sparse columns.
    """

    kind: str = "uniform"
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "dirichlet"):
            raise ValueError(f"unknown abundance sampler kind {self.kind!r}")
        if not self.alpha > 0.0:
            raise ValueError(f"dirichlet concentration must be > 0, got {self.alpha}")

    def draw(self, rng: np.random.Generator, n_materials: int) -> FloatArray:
        if n_materials == 1:
            return np.ones(1)
        if self.kind == "uniform":
            gaps = rng.exponential(1.0, n_materials)
            return gaps / gaps.sum()
        return rng.dirichlet(np.full(n_materials, self.alpha))


@dataclass(frozen=True)
class GeometrySampler:
    """Per-pixel geometry: one fixed geometry, or uniform angle ranges."""

    kind: str = "fixed"
    fixed: Geometry = Geometry(theta0=0.0, theta=0.0, phi=0.0)
    theta0_range: tuple[float, float] = (0.0, 90.0)
    theta_range: tuple[float, float] = (0.0, 90.0)
    phi_range: tuple[float, float] = (0.0, 180.0)

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "uniform"):
            raise ValueError(f"unknown geometry sampler kind {self.kind!r}")
        for name, hi in (("theta0_range", 90.0), ("theta_range", 90.0), ("phi_range", 180.0)):
            lo, up = getattr(self, name)
            if not (0.0 <= lo <= up <= hi):
                raise ValueError(f"{name} must satisfy 0 <= low <= high <= {hi:g}")
            object.__setattr__(self, name, (float(lo), float(up)))

    def draw(self, rng: np.random.Generator) -> Geometry:
        if self.kind == "fixed":
            return self.fixed
        return Geometry(
            theta0=rng.uniform(*self.theta0_range),
            theta=rng.uniform(*self.theta_range),
            phi=rng.uniform(*self.phi_range),
        )


@dataclass(frozen=True)
class SceneConfig:
    """Everything that determines a simulated scene besides the spectra."""

    n_materials: int
    n_pixels: int
    model: str = "linear"
    abundances: AbundanceSampler = AbundanceSampler()
    geometry: GeometrySampler = GeometrySampler()
    reference: Geometry = Geometry(theta0=0.0, theta=0.0, phi=0.0)
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_materials < 1:
            raise ValueError(f"material count must be >= 1, got {self.n_materials}")
        if self.n_pixels < 1:
            raise ValueError(f"pixel count must be >= 1, got {self.n_pixels}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.snr_db is not None and not self.snr_db > 0.0:
            raise ValueError(f"snr_db must be > 0 when given, got {self.snr_db}")

    def to_dict(self) -> dict[str, Any]:
        cfg: dict[str, Any] = {
            "n_materials": self.n_materials,
            "n_pixels": self.n_pixels,
            "model": self.model,
            "abundances": {"kind": self.abundances.kind, "alpha": self.abundances.alpha},
            "reference": _geometry_dict(self.reference),
            "snr_db": None if self.snr_db is None or math.isinf(self.snr_db) else self.snr_db,
            "seed": self.seed,
        }
        if self.geometry.kind == "fixed":
            cfg["geometry"] = {"kind": "fixed", "angles": _geometry_dict(self.geometry.fixed)}
        else:
            cfg["geometry"] = {
                "kind": "uniform",
                "theta0_range": list(self.geometry.theta0_range),
                "theta_range": list(self.geometry.theta_range),
                "phi_range": list(self.geometry.phi_range),
            }
        return cfg

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SceneConfig":
        abund_raw = raw.get("abundances", {"kind": "uniform"})
        sampler = AbundanceSampler(
            kind=abund_raw.get("kind", "uniform"), alpha=float(abund_raw.get("alpha", 1.0))
        )
        geom_raw = raw.get("geometry", {"kind": "fixed"})
        if geom_raw.get("kind", "fixed") == "fixed":
            geometry = GeometrySampler(kind="fixed", fixed=_geometry_from(geom_raw.get("angles", {})))
        else:
            geometry = GeometrySampler(
                kind="uniform",
                theta0_range=tuple(geom_raw.get("theta0_range", (0.0, 90.0))),
                theta_range=tuple(geom_raw.get("theta_range", (0.0, 90.0))),
                phi_range=tuple(geom_raw.get("phi_range", (0.0, 180.0))),
            )
        snr = raw.get("snr_db")
        return cls(
            n_materials=int(raw["n_materials"]),
            n_pixels=int(raw["n_pixels"]),
            model=raw.get("model", "linear"),
            abundances=sampler,
            geometry=geometry,
            reference=_geometry_from(raw.get("reference", {})),
            snr_db=None if snr is None else float(snr),
            seed=int(raw.get("seed", 0)),
        )


def _geometry_dict(geom: Geometry) -> dict[str, float]:
    return {"theta0": geom.theta0, "theta": geom.theta, "phi": geom.phi}


def _geometry_from(raw: dict[str, Any]) -> Geometry:
    return Geometry(
        theta0=float(raw.get("theta0", 0.0)),
        theta=float(raw.get("theta", 0.0)),
        phi=float(raw.get("phi", 0.0)),
    )


def sample_abundances(config: SceneConfig) -> FloatArray:
    """Draw the materials x pixels abundance matrix for a scene.

    Columns are non-negative and sum to one; identical (config, seed) give
    identical matrices, independent of evaluation order across pixels.
    """
    out = np.empty((config.n_materials, config.n_pixels))
    for n in range(config.n_pixels):
        rng = _pixel_rng(config.seed, _ABUNDANCE_STREAM, n)
        out[:, n] = config.abundances.draw(rng, config.n_materials)
    return out


def sample_geometries(config: SceneConfig) -> tuple[Geometry, ...]:
    """Draw one acquisition geometry per pixel."""
    return tuple(
        config.geometry.draw(_pixel_rng(config.seed, _GEOMETRY_STREAM, n))
        for n in range(config.n_pixels)
    )


def reference_endmembers(
    albedos: list[AlbedoSpectrum],
    photometry: list[PhotometricParams | None],
    config: SceneConfig,
) -> EndmemberMatrix:
    """Endmember matrix at the scene's reference geometry."""
    columns = [
        endmember_variant(albedo, config.reference, config.model, params)
        for albedo, params in zip(albedos, photometry)
    ]
    return EndmemberMatrix(
        values=np.column_stack(columns),
        materials=tuple(albedo.material for albedo in albedos),
    )


def simulate_cube(
    albedos: list[AlbedoSpectrum],
    photometry: list[PhotometricParams | None],
    config: SceneConfig,
) -> HyperCube:
    """Generate a scene cube with its ground truth attached.

    Each pixel mixes that pixel's endmember variants: x_n = S_n a_n, where
    S_n holds the per-material reflectances at the pixel's geometry.  Every
    material in a pixel shares the pixel's single geometry (topography is a
    per-pixel tangent plane).  Ground-truth scaling factors are stored only
    for the linear model, where variant = psi * reference holds exactly;
    for the other models the scales field is None.
    """
    if len(albedos) != config.n_materials or len(photometry) != config.n_materials:
        raise ValueError(
            f"expected {config.n_materials} albedos and photometric parameter sets, "
            f"got {len(albedos)} and {len(photometry)}"
        )
    axis = albedos[0].axis
    for albedo in albedos[1:]:
        if not np.array_equal(albedo.axis.values, axis.values):
            raise ValueError(f"albedo {albedo.material!r} uses a different wavelength axis")

    abundances = sample_abundances(config)
    geometries = sample_geometries(config)
    endmembers = reference_endmembers(albedos, photometry, config)

    n_bands, n_pixels = len(axis), config.n_pixels
    values = np.empty((n_bands, n_pixels))
    scales: FloatArray | None = None
    if config.model == "linear":
        scales = np.empty((config.n_materials, n_pixels))
    for n, geom in enumerate(geometries):
        variants = np.column_stack(
            [
                endmember_variant(albedo, geom, config.model, params)
                for albedo, params in zip(albedos, photometry)
            ]
        )
        values[:, n] = variants @ abundances[:, n]
        if scales is not None:
            # maps the reference endmember onto this pixel's variant
            scales[:, n] = scaling_factor(config.reference, geom)

    cube = HyperCube(
        values=values,
        axis=axis,
        geometries=geometries,
        ground_truth=GroundTruth(abundances=abundances, scales=scales, endmembers=endmembers),
    )
    if config.snr_db is not None and not math.isinf(config.snr_db):
        cube = inject_noise(cube, config.snr_db, config.seed)
    return cube


def inject_noise(cube: HyperCube, snr_db: float, seed: int) -> HyperCube:
    """Add white Gaussian noise scaled to the target SNR in decibels.

    Noise is i.i.d. across bands and pixels, drawn from per-pixel streams.
    An infinite snr_db disables noise and returns the cube unchanged.  The
    realized SNR concentrates around the target as the cube grows (within
    +/-0.5 dB from roughly 10^4 samples on).
    """
    if not snr_db > 0.0:
        raise ValueError(f"snr_db must be > 0, got {snr_db}")
    if math.isinf(snr_db):
        return cube
    signal_power = float(np.mean(cube.values**2))
    sigma = math.sqrt(signal_power / 10.0 ** (snr_db / 10.0))
    noisy = np.empty_like(cube.values)
    for n in range(cube.n_pixels):
        rng = _pixel_rng(seed, _NOISE_STREAM, n)
        noisy[:, n] = cube.values[:, n] + rng.normal(0.0, sigma, cube.n_bands)
    return HyperCube(
        values=noisy,
        axis=cube.axis,
        geometries=cube.geometries,
        ground_truth=cube.ground_truth,
    )
