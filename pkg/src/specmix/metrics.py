"""Spectral error metrics and angle/albedo sweep experiments.

The angle sweep compares a reference reflectance model against its
approximation over a grid of incidence/emergence angles and reports the
spectral angle and RMSE per grid cell.  Grid cells are independent; output
ordering is fixed by grid order regardless of evaluation strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AlbedoSpectrum, FloatArray, Geometry, PhotometricParams, cos_deg
from .hapke import (
    MODELS,
    ModelDomainError,
    full_reflectance,
    lambertian_reflectance,
    linear_reflectance,
    relative_reflectance,
)

#: Models an angle sweep may pair: the ones fully determined by (mu, mu0).
SWEEP_MODELS = ("lambertian", "relative", "linear")


def spectral_angle(u, v):
    """Angle in radians between two spectra (or stacks of spectra).

    arccos(<u, v> / (|u| |v|)) in [0, pi]; invariant to positive rescaling
    of either argument.  Reduction is over the last axis.  Evaluated in the
    2 atan2 form, which stays fully accurate near 0 and pi where the
    arccosine loses half its digits; identical spectra give exactly zero.

    Raises ValueError on zero vectors or mismatched lengths.
    """
    u_arr = np.asarray(u, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if u_arr.shape[-1] != v_arr.shape[-1]:
        raise ValueError(f"spectra lengths differ: {u_arr.shape[-1]} vs {v_arr.shape[-1]}")
    norm_u = np.linalg.norm(u_arr, axis=-1, keepdims=True)
    norm_v = np.linalg.norm(v_arr, axis=-1, keepdims=True)
    if np.any(norm_u == 0.0) or np.any(norm_v == 0.0):
        raise ValueError("spectral angle undefined for a zero spectrum")
    across = np.linalg.norm(u_arr * norm_v - v_arr * norm_u, axis=-1)
    along = np.linalg.norm(u_arr * norm_v + v_arr * norm_u, axis=-1)
    return 2.0 * np.arctan2(across, along)


def rmse(u, v):
    """Root mean squared difference between two equal-length spectra.

    Reduction is over the last axis, so stacks of spectra broadcast.
    """
    u_arr = np.asarray(u, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if u_arr.shape[-1] != v_arr.shape[-1]:
        raise ValueError(f"spectra lengths differ: {u_arr.shape[-1]} vs {v_arr.shape[-1]}")
    diff = u_arr - v_arr
    return np.sqrt(np.mean(diff * diff, axis=-1))


def albedo_curve(
    mu: float,
    mu0: float,
    model: str,
    omega_grid,
    params: PhotometricParams | None = None,
    phi: float = 0.0,
) -> FloatArray:
    """Reflectance of the selected model sampled over an albedo grid.

    Geometry is fixed through the cosines mu and mu0 (phi only matters for
    the full model, which also needs photometric parameters).  Returns the
    reflectance for each omega in the grid; model-domain errors propagate.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    omega = np.asarray(omega_grid, dtype=float)
    if model == "full":
        if params is None:
            raise ValueError("full model requires photometric parameters")
        geom = Geometry(
            theta0=float(np.degrees(np.arccos(np.clip(mu0, 0.0, 1.0)))),
            theta=float(np.degrees(np.arccos(np.clip(mu, 0.0, 1.0)))),
            phi=phi,
        )
        return np.asarray(full_reflectance(omega, geom, params), dtype=float)
    if model == "lambertian":
        return np.asarray(lambertian_reflectance(omega, mu, mu0), dtype=float)
    if model == "relative":
        return np.asarray(relative_reflectance(omega, mu, mu0), dtype=float)
    return np.asarray(linear_reflectance(omega, mu, mu0), dtype=float)


def _default_grid() -> FloatArray:
    return np.arange(91, dtype=float)


@dataclass(frozen=True)
class SweepGrid:
    """Angle grid and model pair for one sweep experiment."""

    theta0_values: FloatArray = field(default_factory=_default_grid)
    theta_values: FloatArray = field(default_factory=_default_grid)
    model_pair: tuple[str, str] = ("relative", "linear")
    omega_source: str | None = None

    def __post_init__(self) -> None:
        for name in ("theta0_values", "theta_values"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-D list of degrees")
            if np.any(arr < 0.0) or np.any(arr > 90.0):
                raise ValueError(f"{name} must lie in [0, 90] degrees")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        reference, approximation = self.model_pair
        if reference not in SWEEP_MODELS or approximation not in SWEEP_MODELS:
            raise ValueError(
                f"model pair {self.model_pair!r} not supported; members must be in {SWEEP_MODELS}"
            )
        object.__setattr__(self, "model_pair", (str(reference), str(approximation)))


@dataclass(frozen=True)
class SweepResult:
    """Per-cell spectral angle and RMSE between the two swept models.

    sam and rmse are indexed [theta0, theta] following the grid order.
    valid is False where the reference model is undefined (the doubly
    grazing cell under the Lambertian model); those cells hold NaN.
    """

    grid: SweepGrid
    sam: FloatArray
    rmse: FloatArray
    valid: np.ndarray

    @property
    def n_skipped(self) -> int:
        return int(np.size(self.valid) - np.count_nonzero(self.valid))


def _model_surface(model: str, omega: FloatArray, mu: FloatArray, mu0: FloatArray) -> FloatArray:
    """Reflectance spectra on a cell grid: shape (cells0, cells1, bands)."""
    w = omega[None, None, :]
    m = mu[None, :, None]
    m0 = mu0[:, None, None]
    if model == "linear":
        return w / (4.0 * m * m0 + 2.0 * m + 2.0 * m0 + 1.0)
    root = np.sqrt(1.0 - w)
    relative = w / ((1.0 + 2.0 * m * root) * (1.0 + 2.0 * m0 * root))
    if model == "relative":
        return relative
    # lambertian = relative * its omega=1 normalizer; grazing cells are
    # masked by the caller before this denominator is used
    with np.errstate(divide="ignore", invalid="ignore"):
        return relative * ((1.0 + 2.0 * m) * (1.0 + 2.0 * m0)) / (4.0 * (m + m0))


def angle_sweep(albedo: AlbedoSpectrum, grid: SweepGrid) -> SweepResult:
    """Compare the grid's model pair on one albedo across all angle cells.

    For each (theta0, theta) cell both models' reflectance spectra are
    built from the albedo and compared by spectral angle and RMSE.  Cells
    where the reference model is undefined are skipped and flagged.
    """
    omega = albedo.omega
    if np.all(omega == 0.0):
        raise ValueError("albedo spectrum is identically zero; spectral angle undefined")
    mu0 = np.asarray(cos_deg(grid.theta0_values), dtype=float)
    mu = np.asarray(cos_deg(grid.theta_values), dtype=float)
    reference, approximation = grid.model_pair

    valid = np.ones((mu0.size, mu.size), dtype=bool)
    needs_sum = [name for name in (reference, approximation) if name == "lambertian"]
    if needs_sum:
        valid = (mu0[:, None] + mu[None, :]) > 0.0

    ref_surface = _model_surface(reference, omega, mu, mu0)
    approx_surface = _model_surface(approximation, omega, mu, mu0)
    sam = np.full(valid.shape, np.nan)
    err = np.full(valid.shape, np.nan)
    sam[valid] = spectral_angle(ref_surface[valid], approx_surface[valid])
    err[valid] = rmse(ref_surface[valid], approx_surface[valid])
    return SweepResult(grid=grid, sam=sam, rmse=err, valid=valid)
