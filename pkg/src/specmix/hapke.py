"""Closed-form bidirectional reflectance models.

The chain runs from the full photometric model down to its Lambertian
reduction, the relative (albedo-normalized) form, the first-order linear
form, and the geometry scaling factor that links linear-model variants of
one endmember.  Every function accepts scalar or array albedo values and
evaluates band-by-band in 64-bit floats; all angles are degrees.

Pure functions of immutable inputs: safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from .core import AlbedoSpectrum, FloatArray, Geometry, PhotometricParams, cos_deg

#: Valid model selectors, ordered from the full model to its simplest form.
MODELS = ("full", "lambertian", "relative", "linear")


class ModelDomainError(ValueError):
    """Inputs fall outside the mathematical domain of a reflectance model."""


def _check_omega(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("albedo must be finite")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError("albedo must be in [0, 1]")
    return w


def _check_mu(mu, name: str) -> np.ndarray:
    m = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(m)) or np.any(m < 0.0) or np.any(m > 1.0):
        raise ValueError(f"{name} must be a cosine in [0, 1]")
    return m


def phase_function(g, params: PhotometricParams):
    """Angular single-scattering distribution P(g), two-lobed form.

    P(g) = c (1-b)^2 / (1 - 2b cos g + b^2)^(3/2)
         + (1-c) (1-b)^2 / (1 + 2b cos g + b^2)^(3/2)

    g is the phase angle in degrees.  With b = 0 both lobes collapse and
    P = 1 for any c (isotropic scattering).
    """
    cos_g = np.cos(np.radians(np.asarray(g, dtype=float)))
    b, c = params.b, params.c
    back = 1.0 - 2.0 * b * cos_g + b * b
    fore = 1.0 + 2.0 * b * cos_g + b * b
    if np.any(back <= 0.0) or np.any(fore <= 0.0):
        raise ModelDomainError(
            "phase function singular: b = 1 with cos g = +/-1 makes a lobe denominator vanish"
        )
    lobe = (1.0 - b) ** 2
    return c * lobe / back**1.5 + (1.0 - c) * lobe / fore**1.5


def opposition_effect(g, params: PhotometricParams):
    """Opposition surge B(g) = B0 / (1 + tan(g/2) / h).

    Brightening when the source sits behind the sensor (small g);
    non-negative and decreasing in g.  Requires 0 <= g < 180 degrees: the
    half-angle tangent diverges at g = 180.
    """
    g_arr = np.asarray(g, dtype=float)
    if np.any(g_arr < 0.0) or np.any(g_arr >= 180.0):
        raise ModelDomainError("opposition effect requires phase angle in [0, 180) degrees")
    return params.B0 / (1.0 + np.tan(np.radians(g_arr) / 2.0) / params.h)


def multiple_scattering(omega, mu):
    """Isotropic multiple-scattering approximation H(omega, mu).

    H = (1 + 2 mu) / (1 + 2 mu sqrt(1 - omega)); always >= 1 on the domain
    omega, mu in [0, 1].
    """
    w = _check_omega(omega)
    m = _check_mu(mu, "mu")
    return (1.0 + 2.0 * m) / (1.0 + 2.0 * m * np.sqrt(1.0 - w))


def full_reflectance(omega, geom: Geometry, params: PhotometricParams):
    """Bidirectional reflectance of the full photometric model.

    rho = omega / (4 (mu + mu0)) * ((1 + B(g)) P(g) + H(omega, mu) H(omega, mu0) - 1)

    Smooth-surface regime: no shadowing term and unmodified angles.  The
    doubly grazing configuration mu + mu0 = 0 is outside the model's domain
    (the leading denominator vanishes).
    """
    w = _check_omega(omega)
    mu, mu0 = geom.mu, geom.mu0
    if mu + mu0 <= 0.0:
        raise ModelDomainError(
            "full reflectance requires mu + mu0 > 0; theta0 = theta = 90 degrees is singular"
        )
    surge = opposition_effect(geom.g, params)
    p = phase_function(geom.g, params)
    h_mu = multiple_scattering(w, mu)
    h_mu0 = multiple_scattering(w, mu0)
    return w / (4.0 * (mu + mu0)) * ((1.0 + surge) * p + h_mu * h_mu0 - 1.0)


def lambertian_reflectance(omega, mu, mu0):
    """Reflectance under isotropic scattering and no opposition surge.

    rho = (1 + 2 mu)(1 + 2 mu0) omega /
          (4 (mu + mu0) (1 + 2 mu sqrt(1-omega)) (1 + 2 mu0 sqrt(1-omega)))

    Still singular at mu + mu0 = 0, like the full model it reduces.
    """
    w = _check_omega(omega)
    m = _check_mu(mu, "mu")
    m0 = _check_mu(mu0, "mu0")
    if np.any(m + m0 <= 0.0):
        raise ModelDomainError(
            "Lambertian reflectance requires mu + mu0 > 0; doubly grazing geometry is singular"
        )
    root = np.sqrt(1.0 - w)
    return ((1.0 + 2.0 * m) * (1.0 + 2.0 * m0) * w) / (
        4.0 * (m + m0) * (1.0 + 2.0 * m * root) * (1.0 + 2.0 * m0 * root)
    )


def relative_reflectance(omega, mu, mu0):
    """Reflectance normalized by its own omega = 1 value.

    rho0 = omega / ((1 + 2 mu sqrt(1-omega)) (1 + 2 mu0 sqrt(1-omega)))

    Defined for every geometry including mu = mu0 = 0, where it equals the
    albedo exactly.
    """
    w = _check_omega(omega)
    m = _check_mu(mu, "mu")
    m0 = _check_mu(mu0, "mu0")
    root = np.sqrt(1.0 - w)
    return w / ((1.0 + 2.0 * m * root) * (1.0 + 2.0 * m0 * root))


def linear_reflectance(omega, mu, mu0):
    """First-order expansion of the relative reflectance around omega = 0.

    rho = omega / (4 mu mu0 + 2 mu + 2 mu0 + 1); the denominator is >= 1,
    so the map is defined everywhere and linear in omega with a
    wavelength-independent coefficient.
    """
    w = _check_omega(omega)
    m = _check_mu(mu, "mu")
    m0 = _check_mu(mu0, "mu0")
    return w / (4.0 * m * m0 + 2.0 * m + 2.0 * m0 + 1.0)


def _linear_gain(geom: Geometry) -> float:
    return 4.0 * geom.mu * geom.mu0 + 2.0 * geom.mu + 2.0 * geom.mu0 + 1.0


def scaling_factor(local: Geometry, reference: Geometry) -> float:
    """Geometry ratio linking linear-model reflectances at two geometries.

    psi = (4 mu_l mu0_l + 2 mu_l + 2 mu0_l + 1) / (4 mu_r mu0_r + 2 mu_r + 2 mu0_r + 1)

    Strictly positive, 1 when both geometries coincide, and transitive:
    scaling_factor(a, b) * scaling_factor(b, c) = scaling_factor(a, c).
    Note the orientation: because the linear model divides the albedo by
    this denominator, the factor that maps the reference endmember onto the
    local variant is scaling_factor(reference, local).
    """
    return _linear_gain(local) / _linear_gain(reference)


def endmember_variant(
    albedo: AlbedoSpectrum,
    geom: Geometry,
    model: str,
    params: PhotometricParams | None = None,
) -> FloatArray:
    """Reflectance spectrum of one material at one geometry.

    Applies the selected model band-by-band to the albedo spectrum.  The
    full model needs photometric parameters; the simplified models ignore
    them.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    if model == "full":
        if params is None:
            raise ValueError("full model requires photometric parameters")
        return np.asarray(full_reflectance(albedo.omega, geom, params), dtype=float)
    mu, mu0 = geom.mu, geom.mu0
    if model == "lambertian":
        return np.asarray(lambertian_reflectance(albedo.omega, mu, mu0), dtype=float)
    if model == "relative":
        return np.asarray(relative_reflectance(albedo.omega, mu, mu0), dtype=float)
    return np.asarray(linear_reflectance(albedo.omega, mu, mu0), dtype=float)
