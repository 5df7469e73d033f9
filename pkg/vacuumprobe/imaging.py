"""
Phase-contrast Fourier imaging: the probe carrying an embedded phase on a
rectangle is focused by a lens, and the focal plane records the Fourier
transform of the probe amplitude.

Focal-plane coordinates are spatial frequencies ω = 2πx/(f_p λ_p); all
lengths are μm.
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf, wofz

from vacuumprobe.exceptions import DomainError
from vacuumprobe.models import FocalPlaneImage, GridSpec, ProbeProfile, Provenance, RectRegion

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

GAUSS_LEGENDRE_ORDER = 8


def slit_fraunhofer(mu: float, nu: float, omega_x: ArrayLike, omega_y: ArrayLike) -> ArrayLike:
    """
    Normalized far-field intensity of a 2μ×2ν slit (or, by Babinet, a wire).

    (sin(μω_x)/μω_x)² (sin(νω_y)/νω_y)²
    """
    if not (mu > 0 and nu > 0):
        raise DomainError("slit_fraunhofer", "slit half sizes must be positive")
    # np.sinc(t) = sin(πt)/(πt)
    return np.sinc(mu * np.asarray(omega_x) / np.pi) ** 2 * np.sinc(nu * np.asarray(omega_y) / np.pi) ** 2


def _scaled_erf(x: float, omega: np.ndarray, a: float) -> np.ndarray:
    """
    exp(-ω²/4a)·erf(√a·x + iω/(2√a)), evaluated through the Faddeeva
    function so that neither factor overflows.
    """
    pedestal = np.exp(-omega ** 2 / (4 * a))
    if math.isinf(x):
        return (1.0 if x > 0 else -1.0) * pedestal.astype(complex)
    sign = 1.0 if x >= 0 else -1.0
    xa = abs(x)
    om = sign * omega
    root = math.sqrt(a)
    z = root * xa + 1j * om / (2 * root)
    return sign * (pedestal - np.exp(-a * xa ** 2 - 1j * om * xa) * wofz(1j * z))


def truncated_gaussian_transform(omega: ArrayLike, lower: float, upper: float, a: float) -> np.ndarray:
    """
    ∫_lower^upper exp(-a x²) exp(-iωx) dx in closed form.

    Args:
        omega: Spatial frequency [μm⁻¹]
        lower: Lower limit [μm], may be -inf
        upper: Upper limit [μm], may be +inf
        a: Envelope exponent [μm⁻²]

    Returns:
        Complex transform [μm], same shape as omega
    """
    if not a > 0:
        raise DomainError("truncated_gaussian_transform", "envelope exponent must be positive")
    omega = np.asarray(omega, dtype=float)
    return 0.5 * math.sqrt(math.pi / a) * (_scaled_erf(upper, omega, a) - _scaled_erf(lower, omega, a))


def c_sig(omega_x: ArrayLike, omega_y: ArrayLike, mu: float, nu: float, a: float) -> ArrayLike:
    """
    Transform of the Gaussian envelope restricted to the centered 2μ×2ν rectangle.

    C_sig = ∫_{-μ}^{μ} e^{-ax²}cos(ω_x x)dx · ∫_{-ν}^{ν} e^{-ay²}cos(ω_y y)dy  [μm²]
    """
    if not (mu > 0 and nu > 0 and a > 0):
        raise DomainError("c_sig", "μ, ν and a must be positive")
    fx = truncated_gaussian_transform(omega_x, -mu, mu, a).real
    fy = truncated_gaussian_transform(omega_y, -nu, nu, a).real
    return fx * fy


def c_bkg(omega_x: ArrayLike, omega_y: ArrayLike, a: float) -> ArrayLike:
    """Transform of the full Gaussian envelope, (π/a)exp(-(ω_x²+ω_y²)/4a) [μm²]."""
    if not a > 0:
        raise DomainError("c_bkg", "envelope exponent must be positive")
    omega_x = np.asarray(omega_x, dtype=float)
    omega_y = np.asarray(omega_y, dtype=float)
    return (math.pi / a) * np.exp(-(omega_x ** 2 + omega_y ** 2) / (4 * a))


def intensity_scale(profile: ProbeProfile) -> float:
    """(A₀p / f_pλ_p)² [photons/μm⁶]: converts |transform|² to photons per μm² of focal plane."""
    return (profile.peak_amplitude_A0p / (profile.focal_length_um * profile.wavelength_p)) ** 2


def total_phase(delta: float, profile: ProbeProfile) -> float:
    """Phase carried by the signal region: physical shift plus the optional offset."""
    return delta + profile.offset_phase


def image_provenance(phase: ArrayLike) -> Provenance:
    """Pedestal only when every embedded phase leaves the field unchanged."""
    return Provenance.PEDESTAL_ONLY if np.all(np.exp(1j * np.asarray(phase)) == 1.0) else Provenance.WITH_SIGNAL


def focal_amplitude(omega_x: ArrayLike, omega_y: ArrayLike, delta: float, profile: ProbeProfile,
                    region: RectRegion) -> np.ndarray:
    """
    Normalized focal amplitude (e^{iΔ} - 1)·I_region + C_bkg for a region of any position.
    """
    a = profile.gaussian_a
    ix = truncated_gaussian_transform(omega_x, *region.x_bounds, a)
    iy = truncated_gaussian_transform(omega_y, *region.y_bounds, a)
    contrast = np.exp(1j * total_phase(delta, profile)) - 1.0
    return contrast * ix * iy + c_bkg(omega_x, omega_y, a)


def focal_intensity(omega_x: ArrayLike, omega_y: ArrayLike, delta: float, profile: ProbeProfile,
                    region: RectRegion) -> ArrayLike:
    """
    Photon density on the focal plane [photons/μm²].

    For a centered region:
        (A₀p/f_pλ_p)² {2C_sig(C_sig - C_bkg)(1 - cos(δ + offset)) + C_bkg²}
    Off-center regions use the complex amplitude directly.
    """
    scale = intensity_scale(profile)
    if not region.is_centered:
        return scale * np.abs(focal_amplitude(omega_x, omega_y, delta, profile, region)) ** 2
    signal = c_sig(omega_x, omega_y, region.half_width_mu, region.half_height_nu, profile.gaussian_a)
    pedestal = c_bkg(omega_x, omega_y, profile.gaussian_a)
    modulation = 1.0 - math.cos(total_phase(delta, profile))
    return scale * (2 * signal * (signal - pedestal) * modulation + pedestal ** 2)


def focal_intensity_at(x: ArrayLike, y: ArrayLike, delta: float, profile: ProbeProfile,
                       region: RectRegion) -> ArrayLike:
    """focal_intensity at focal-plane positions x, y [μm]."""
    k = profile.frequency_scale
    return focal_intensity(k * np.asarray(x, dtype=float), k * np.asarray(y, dtype=float), delta, profile, region)


def expanded_peak_intensity(photons: float, expanded_waist: float) -> float:
    """Peak photon density E_p/(ħω·2πw_pe²) of the expanded probe [photons/μm²]."""
    if not expanded_waist > 0:
        raise DomainError("expanded_peak_intensity", "waist must be positive")
    return photons / (2 * math.pi * expanded_waist ** 2)


def _panel_nodes(edges: Sequence[float], order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    base_nodes, base_weights = leggauss(order)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * base_nodes[None, :]).ravel()
    weights = (half[:, None] * base_weights[None, :]).ravel()
    return nodes, weights


def _pixel_quadrature(centers: np.ndarray, pitch: float, n_sub: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes (n_pixels, n_sub*order) and matching weights covering each pixel."""
    base_nodes, base_weights = leggauss(order)
    sub = pitch / n_sub
    offsets = -0.5 * pitch + sub * (np.arange(n_sub) + 0.5)
    local = (offsets[:, None] + 0.5 * sub * base_nodes[None, :]).ravel()
    weights = np.tile(0.5 * sub * base_weights, n_sub)
    return centers[:, None] + local[None, :], weights


def _axis_integrals(centers: np.ndarray, pitch: float, n_sub: int, order: int, frequency_scale: float,
                    bounds: Tuple[float, float], a: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-pixel integrals along one axis of |T|², T·B and B², where T is the
    region transform and B the full Gaussian transform (one axis each).
    """
    nodes, weights = _pixel_quadrature(centers, pitch, n_sub, order)
    omega = frequency_scale * nodes
    t = truncated_gaussian_transform(omega, bounds[0], bounds[1], a)
    b = math.sqrt(math.pi / a) * np.exp(-omega ** 2 / (4 * a))
    return (np.abs(t) ** 2) @ weights, (t * b) @ weights, (b ** 2) @ weights


def _subdivisions(pitch: float, profile: ProbeProfile, region: RectRegion) -> int:
    """Sub-cells per pixel so that each sub-cell spans at most half of the finest focal feature."""
    reach = max(abs(region.x_bounds[0]), abs(region.x_bounds[1]), abs(region.y_bounds[0]), abs(region.y_bounds[1]))
    fringe = profile.focal_length_um * profile.wavelength_p / (2 * reach)
    finest = min(profile.focal_waist, fringe)
    return max(1, int(math.ceil(pitch / (0.5 * finest))))


def _chunks(values: np.ndarray, count: int) -> List[np.ndarray]:
    count = max(1, min(count, values.size))
    return [chunk for chunk in np.array_split(values, count)]


def render_focal_image(profile: ProbeProfile, region: RectRegion, delta: float, grid: GridSpec,
                       order: int = GAUSS_LEGENDRE_ORDER, threads: int = 1) -> FocalPlaneImage:
    """
    Expected photons per pixel on a focal-plane grid.

    The focal intensity separates into x and y factors, so each pixel
    integral is assembled from per-column and per-row Gauss-Legendre
    integrals.

    Args:
        profile: Probe profile in front of the lens
        region: Rectangle carrying the embedded phase
        delta: Embedded physical phase shift [rad]
        grid: Pixel grid
        order: Gauss-Legendre order per sub-cell
        threads: Worker threads for the per-axis integrals

    Returns:
        FocalPlaneImage with photons per pixel
    """
    x_centers = grid.x_centers
    y_centers = grid.y_centers
    provenance = image_provenance(total_phase(delta, profile))
    pedestal_sigma = 0.5 * profile.focal_waist
    coarse = grid.pixel_pitch > pedestal_sigma
    if coarse:
        logger.warning(f"Pixel pitch {grid.pixel_pitch} μm exceeds the pedestal σ {pedestal_sigma:.3g} μm; "
                       f"the pedestal is not resolved")
    if x_centers.size == 0 or y_centers.size == 0:
        return FocalPlaneImage(grid.pixel_pitch, x_centers, y_centers, np.zeros((y_centers.size, x_centers.size)),
                               provenance, delta, profile.offset_phase, coarse)

    n_sub = _subdivisions(grid.pixel_pitch, profile, region)
    k = profile.frequency_scale
    a = profile.gaussian_a
    logger.debug(f"Rendering {grid.nx}x{grid.ny} pixels with {n_sub} sub-cells of order {order}")

    def integrate(args):
        centers, bounds = args
        return _axis_integrals(centers, grid.pixel_pitch, n_sub, order, k, bounds, a)

    jobs = [(chunk, region.x_bounds) for chunk in _chunks(x_centers, threads)]
    n_x_jobs = len(jobs)
    jobs += [(chunk, region.y_bounds) for chunk in _chunks(y_centers, threads)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(integrate, jobs))
    else:
        results = [integrate(job) for job in jobs]

    px, qx, rx = (np.concatenate(parts) for parts in zip(*results[:n_x_jobs]))
    py, qy, ry = (np.concatenate(parts) for parts in zip(*results[n_x_jobs:]))

    contrast = np.exp(1j * total_phase(delta, profile)) - 1.0
    values = (abs(contrast) ** 2 * np.outer(py, px)
              + 2 * np.real(contrast * np.outer(qy, qx))
              + np.outer(ry, rx))
    # the prefactor converts ω-space to focal-plane area: dω_x dω_y = k² dx dy, pixel integrals run over x, y
    values = intensity_scale(profile) * np.clip(values, 0.0, None)
    return FocalPlaneImage(grid.pixel_pitch, x_centers, y_centers, values, provenance, delta,
                           profile.offset_phase, coarse)


def pixel_line_profile(image: FocalPlaneImage, axis: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pixel row (axis 'x') or column (axis 'y') through the optical axis.

    Returns:
        (positions [μm], photons per pixel)
    """
    if axis == 'x':
        across, along = image.y_centers, image.x_centers
    elif axis == 'y':
        across, along = image.x_centers, image.y_centers
    else:
        raise DomainError("pixel_line_profile", f"axis must be 'x' or 'y', got {axis!r}")
    if across.size == 0:
        raise DomainError("pixel_line_profile", "image has no pixels")
    index = int(np.argmin(np.abs(across)))
    if abs(across[index]) > 0.5 * image.pixel_pitch:
        raise DomainError("pixel_line_profile", "the optical axis lies outside the grid")
    values = image.values[index, :] if axis == 'x' else image.values[:, index]
    return along.copy(), values.copy()


def render_slit_pattern(mu: float, nu: float, grid: GridSpec, frequency_scale: float) -> np.ndarray:
    """Normalized wire/slit far-field pattern sampled at pixel centers; rows are y."""
    omega_x = frequency_scale * grid.x_centers
    omega_y = frequency_scale * grid.y_centers
    return slit_fraunhofer(mu, nu, omega_x[None, :], omega_y[:, None])


def sample_input_amplitude(x0: np.ndarray, y0: np.ndarray, delta: float, profile: ProbeProfile,
                           region: RectRegion) -> np.ndarray:
    """
    Probe amplitude behind the interaction, A₀p e^{-a r²} with phase e^{iΔ} inside the region.

    Returns an array indexed [ix, iy].
    """
    gx = np.exp(-profile.gaussian_a * x0 ** 2)
    gy = np.exp(-profile.gaussian_a * y0 ** 2)
    x_lo, x_hi = region.x_bounds
    y_lo, y_hi = region.y_bounds
    inside = ((x0 >= x_lo) & (x0 <= x_hi))[:, None] & ((y0 >= y_lo) & (y0 <= y_hi))[None, :]
    phase = np.where(inside, np.exp(1j * total_phase(delta, profile)), 1.0)
    return profile.peak_amplitude_A0p * gx[:, None] * gy[None, :] * phase


def _axis_panels(bounds: Tuple[float, float], half_extent: float, omega_max: float, a: float) -> np.ndarray:
    """Panel edges splitting [-L, L] at the region bounds, sized to the fastest oscillation."""
    lo, hi = max(bounds[0], -half_extent), min(bounds[1], half_extent)
    breakpoints = sorted({-half_extent, lo, hi, half_extent})
    oscillation = 2 * math.pi / omega_max if omega_max > 0 else 2 * half_extent
    envelope = 1.0 / math.sqrt(a)
    width = min(oscillation, envelope)
    edges = [breakpoints[0]]
    for start, stop in zip(breakpoints[:-1], breakpoints[1:]):
        n = max(1, int(math.ceil((stop - start) / width)))
        edges.extend(np.linspace(start, stop, n + 1)[1:])
    return np.asarray(edges)


def direct_focal_intensity(omega_x: np.ndarray, omega_y: np.ndarray, delta: float, profile: ProbeProfile,
                           region: RectRegion, extent: float = 8.0, order: int = 24) -> np.ndarray:
    """
    Focal photon density from a direct numerical 2D Fourier transform of the
    sampled probe amplitude (matrix Fourier transform on composite
    Gauss-Legendre panels). Independent of the closed forms above.

    Args:
        omega_x, omega_y: Spatial frequencies of the evaluation points [μm⁻¹]
        extent: Half width of the sampled aperture in units of the probe waist
        order: Gauss-Legendre order per panel
    """
    omega_x = np.atleast_1d(np.asarray(omega_x, dtype=float))
    omega_y = np.atleast_1d(np.asarray(omega_y, dtype=float))
    half_extent = extent * profile.waist
    a = profile.gaussian_a
    x0, wx = _panel_nodes(_axis_panels(region.x_bounds, half_extent, float(np.max(np.abs(omega_x))), a), order)
    y0, wy = _panel_nodes(_axis_panels(region.y_bounds, half_extent, float(np.max(np.abs(omega_y))), a), order)
    psi = sample_input_amplitude(x0, y0, delta, profile, region)
    kernel_x = np.exp(-1j * np.outer(omega_x, x0)) * wx[None, :]
    kernel_y = np.exp(-1j * np.outer(omega_y, y0)) * wy[None, :]
    transform = np.sum((kernel_x @ psi) * kernel_y, axis=1)
    return np.abs(transform) ** 2 / (profile.focal_length_um * profile.wavelength_p) ** 2


def pedestal_fraction(profile: ProbeProfile, half_side: float) -> float:
    """Share of the pedestal photons inside the focal square |x|, |y| ≤ half_side [μm]."""
    if half_side < 0:
        raise DomainError("pedestal_fraction", "half side must be non-negative")
    return erf(math.sqrt(2.0) * half_side / profile.focal_waist) ** 2
