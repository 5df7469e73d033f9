"""
Gaussian beam propagation in vacuum and one-lens focusing geometry.
"""
import math
import logging
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from vacuumprobe.constants import MICROMETER
from vacuumprobe.exceptions import DomainError
from vacuumprobe.models import FocusingSetup, GaussianBeam

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Curvature radius reported on the waist plane
INFINITE_CURVATURE = math.inf


def waist_at(z: ArrayLike, beam: GaussianBeam) -> ArrayLike:
    """
    Beam radius w(z) = w₀√(1 + z²/z_R²).

    Args:
        z: Distance from the waist [μm]
        beam: Beam

    Returns:
        w(z) [μm]
    """
    return beam.waist_w0 * np.sqrt(1.0 + (np.asarray(z, dtype=float) / beam.rayleigh_length) ** 2)


def curvature_radius(z: ArrayLike, beam: GaussianBeam) -> ArrayLike:
    """
    Wavefront curvature R(z) = z(1 + z_R²/z²), infinite on the waist.
    """
    z = np.asarray(z, dtype=float)
    z_r = beam.rayleigh_length
    with np.errstate(divide='ignore', invalid='ignore'):
        radius = np.where(z == 0.0, INFINITE_CURVATURE, z + z_r ** 2 / np.where(z == 0.0, 1.0, z))
    return radius if radius.ndim else float(radius)


def gouy_phase(z: ArrayLike, beam: GaussianBeam) -> ArrayLike:
    """Axial phase anomaly η(z) = arctan(z/z_R)."""
    return np.arctan(np.asarray(z, dtype=float) / beam.rayleigh_length)


def field_amplitude(x: ArrayLike, y: ArrayLike, z: ArrayLike, beam: GaussianBeam) -> np.ndarray:
    """
    Complex field of the fundamental Gaussian mode, unit modulus on axis at the waist.

    E = (w₀/w) exp{-i[kz - η] - r²(1/w² + ik/2R)}
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    k = beam.wavenumber
    w = waist_at(z, beam)
    r2 = x ** 2 + y ** 2
    # k/2R = k z / 2(z² + z_R²) is finite on the waist, where the curvature term drops out
    inverse_radius = z / (z ** 2 + beam.rayleigh_length ** 2)
    exponent = -1j * (k * z - gouy_phase(z, beam)) - r2 * (1.0 / w ** 2 + 0.5j * k * inverse_radius)
    return (beam.waist_w0 / w) * np.exp(exponent)


def intensity_at(r: ArrayLike, z: ArrayLike, beam: GaussianBeam) -> ArrayLike:
    """
    Time-integrated fluence [J/μm²] of the pulse at radius r and distance z.
    """
    w = waist_at(z, beam)
    return 2 * beam.pulse_energy / (math.pi * w ** 2) * np.exp(-2 * np.asarray(r, dtype=float) ** 2 / w ** 2)


def expand(beam: GaussianBeam, factor: float) -> GaussianBeam:
    """Beam after a pure transverse magnification by `factor`."""
    if not factor > 0:
        raise DomainError("expand", f"expansion factor must be positive, got {factor}")
    return GaussianBeam(beam.wavelength, beam.pulse_energy, beam.duration, beam.waist_w0 * factor,
                        beam.polarization)


def waist_from_lens(d: float, f: float, wavelength_um: float,
                    max_iterations: int = 200) -> Tuple[float, float, float]:
    """
    Self-consistent focal waist of a lens of diameter d and focal length f.

    Solves w₀ = (d/2)(f/z_R)/√(1 + (f/z_R)²) together with z_R = πw₀²/λ.

    Args:
        d: Lens diameter [m]
        f: Focal length [m]
        wavelength_um: Wavelength [μm]
        max_iterations: Iteration cap of the root finder

    Returns:
        (w₀ [m], z_R [m], Δϑ [rad]) with Δϑ = π⁻¹(λ/w₀)²
    """
    if not (d > 0 and f > 0 and wavelength_um > 0):
        raise DomainError("waist_from_lens", f"d, f and wavelength must be positive, got {d}, {f}, {wavelength_um}")
    lam = wavelength_um * MICROMETER
    half = d / 2

    def residual(w0: float) -> float:
        ratio = f * lam / (math.pi * w0 ** 2)
        return w0 - half * ratio / math.sqrt(1.0 + ratio ** 2)

    lower = half * 1e-12
    if residual(lower) >= 0:
        raise DomainError("waist_from_lens", "no waist smaller than the lens radius")
    w0, info = brentq(residual, lower, half, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                      maxiter=max_iterations, full_output=True)
    if not info.converged:
        raise DomainError("waist_from_lens", f"waist solve did not converge after {info.iterations} iterations")
    logger.debug(f"Waist solve: d={d} m f={f} m -> w0={w0:.6e} m in {info.iterations} iterations")
    z_r = math.pi * w0 ** 2 / lam
    delta_theta = (lam / w0) ** 2 / math.pi
    return w0, z_r, delta_theta


def approximate_waist(d: float, f: float, wavelength_um: float) -> float:
    """w₀ ≈ (dfλ/2π)^{1/3}, valid for f ≪ z_R [m]."""
    return (d * f * wavelength_um * MICROMETER / (2 * math.pi)) ** (1.0 / 3.0)


def focusing_setup(d: float, f: float, wavelength_um: float) -> FocusingSetup:
    """FocusingSetup built from the exact waist solve."""
    w0, z_r, delta_theta = waist_from_lens(d, f, wavelength_um)
    return FocusingSetup(lens_diameter_d=d, focal_length_f=f, wavelength=wavelength_um,
                         waist_w0=w0, rayleigh_zR=z_r, angular_uncertainty=delta_theta)
