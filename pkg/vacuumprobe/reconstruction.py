"""
Inverse problem of the phase-contrast imaging: fit the scale κ of a
physical phase template against a measured focal-plane image, and recover
piecewise-constant background phase maps from sets of images.

The probe amplitude on the focal plane is a sum over rectangular regions
of the transverse profile,

    ψ(W) = Σ_i e^{iθ_i} I_i(W) + e^{iθ_c} (I_∞(W) - Σ_i I_i(W)),

where I_i is the Gaussian-weighted transform over region i, I_∞ the
transform over the whole plane and θ_c the phase of the complement.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from vacuumprobe.exceptions import DomainError
from vacuumprobe.imaging import c_bkg, image_provenance, intensity_scale, truncated_gaussian_transform
from vacuumprobe.models import (
    FitResult, FocalPlaneImage, GridSpec, PhaseMap, ProbeProfile, RectRegion, ScanSpec, SignalTemplate,
)

logger = logging.getLogger(__name__)

MASK_SIGMAS = 5.0
MAX_SWEEPS = 20
SWEEP_TOLERANCE = 1e-12
REFINEMENT_FRACTION = 1e-4
# complex elements per vectorized block of model evaluations
CHUNK_ELEMENTS = 1 << 22


def region_integral(region: RectRegion, omega_x, omega_y, a: float) -> np.ndarray:
    """
    I_i(W) = ∫_{R_i} e^{-a(x²+y²)} e^{-i(ω_x x + ω_y y)} dx dy  [μm²]

    omega_x and omega_y broadcast against each other.
    """
    tx = truncated_gaussian_transform(omega_x, *region.x_bounds, a)
    ty = truncated_gaussian_transform(omega_y, *region.y_bounds, a)
    return tx * ty


def pedestal_mask_radius(profile: ProbeProfile, sigmas: float = MASK_SIGMAS) -> float:
    """Radius of the excluded focal core: `sigmas` pedestal standard deviations [μm]."""
    return sigmas * 0.5 * profile.focal_waist


def _check_aligned(phase_map: PhaseMap, template: SignalTemplate) -> None:
    if not phase_map.aligned_with(template.regions):
        raise DomainError("model_intensity", "phase map and signal template must share the same region grid")


def _region_phases(phase_map: PhaseMap, template: SignalTemplate, kappa: float,
                   offset_phase: float) -> np.ndarray:
    return phase_map.phases + kappa * template.deltas + offset_phase * template.support


@dataclass
class SamplingSet:
    """
    Focal-plane sampling points of one measured image together with the
    region transforms evaluated there.
    """
    omega_x: np.ndarray
    omega_y: np.ndarray
    measured: np.ndarray  # photons per pixel
    region_matrix: np.ndarray  # (N_W, N_X) complex
    pedestal: np.ndarray  # I_∞, real
    scale: float  # photons per pixel per |ψ|²

    @classmethod
    def from_image(cls, image: FocalPlaneImage, regions: Sequence[RectRegion], profile: ProbeProfile,
                   mask_radius: Optional[float] = None) -> "SamplingSet":
        if mask_radius is None:
            mask_radius = pedestal_mask_radius(profile)
        x, y = np.meshgrid(image.x_centers, image.y_centers)
        keep = np.hypot(x, y) > mask_radius
        if not np.any(keep):
            raise DomainError("chi_square", f"no sampling points outside the mask radius {mask_radius} μm")
        k = profile.frequency_scale
        omega_x = k * x[keep]
        omega_y = k * y[keep]
        a = profile.gaussian_a
        if regions:
            matrix = np.column_stack([region_integral(r, omega_x, omega_y, a) for r in regions])
        else:
            matrix = np.zeros((omega_x.size, 0), dtype=complex)
        return cls(omega_x=omega_x, omega_y=omega_y, measured=image.values[keep],
                   region_matrix=matrix, pedestal=c_bkg(omega_x, omega_y, a),
                   scale=intensity_scale(profile) * image.pixel_pitch ** 2)

    @property
    def n_points(self) -> int:
        return int(self.measured.size)

    def amplitude(self, region_phases: np.ndarray, complement_phase: float = 0.0) -> np.ndarray:
        complement = self.pedestal - self.region_matrix.sum(axis=1)
        return self.region_matrix @ np.exp(1j * region_phases) + np.exp(1j * complement_phase) * complement

    def intensity(self, amplitude: np.ndarray) -> np.ndarray:
        return self.scale * np.abs(amplitude) ** 2


def chi_square_values(measured: np.ndarray, model: np.ndarray) -> np.ndarray:
    """
    χ² = (1/(N_W - 1)) Σ (I_meas - I_model)² / (I_meas + I_model)

    model may carry extra trailing axes (one χ² per trailing index).
    Points where both intensities vanish contribute nothing.
    """
    n_points = measured.shape[0]
    if n_points < 2:
        raise DomainError("chi_square", "at least two sampling points are required")
    if model.ndim > measured.ndim:
        measured = measured.reshape(measured.shape + (1,) * (model.ndim - measured.ndim))
    denominator = measured + model
    safe = np.where(denominator > 0, denominator, 1.0)
    terms = np.where(denominator > 0, (measured - model) ** 2 / safe, 0.0)
    return terms.sum(axis=0) / (n_points - 1)


def model_intensity(phase_map: PhaseMap, template: SignalTemplate, kappa: float, omega_x, omega_y,
                    profile: ProbeProfile) -> np.ndarray:
    """
    Model focal photon density I_bkg+sig at spatial frequencies W [photons/μm²].

    Region phases are φ_i + κδ_i, plus the profile offset phase on the
    template support.
    """
    _check_aligned(phase_map, template)
    omega_x, omega_y = np.broadcast_arrays(np.asarray(omega_x, dtype=float), np.asarray(omega_y, dtype=float))
    a = profile.gaussian_a
    phases = _region_phases(phase_map, template, kappa, profile.offset_phase)
    amplitude = np.exp(1j * phase_map.complement_phase) * c_bkg(omega_x, omega_y, a)
    for region, phase in zip(phase_map.regions, phases):
        amplitude = amplitude + (np.exp(1j * phase) - np.exp(1j * phase_map.complement_phase)) * \
            region_integral(region, omega_x, omega_y, a)
    return intensity_scale(profile) * np.abs(amplitude) ** 2


def synthesize_image(profile: ProbeProfile, phase_map: PhaseMap, template: SignalTemplate, kappa: float,
                     grid: GridSpec, perturbation: float = 0.0,
                     seed: Union[int, np.random.SeedSequence, None] = None) -> FocalPlaneImage:
    """
    Synthetic measurement: model density at pixel centers times pixel area,
    optionally perturbed per pixel by a relative Gaussian factor drawn from
    a seeded PCG64 generator.
    """
    x, y = np.meshgrid(grid.x_centers, grid.y_centers)
    k = profile.frequency_scale
    values = model_intensity(phase_map, template, kappa, k * x, k * y, profile) * grid.pixel_pitch ** 2
    if perturbation > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        values = values * (1.0 + perturbation * rng.standard_normal(values.shape))
        values = np.clip(values, 0.0, None)
    delta = float(kappa * np.max(np.abs(template.deltas))) if template.deltas.size else 0.0
    provenance = image_provenance(kappa * template.deltas + profile.offset_phase * template.support)
    return FocalPlaneImage(grid.pixel_pitch, grid.x_centers, grid.y_centers, values, provenance, delta,
                           profile.offset_phase, grid.pixel_pitch > 0.5 * profile.focal_waist)


def chi_square(measured: FocalPlaneImage, phase_map: PhaseMap, template: SignalTemplate, kappa: float,
               profile: ProbeProfile, mask_radius: Optional[float] = None) -> float:
    """χ² of the model at κ against a measured image, outside the masked focal core."""
    _check_aligned(phase_map, template)
    sampling = SamplingSet.from_image(measured, phase_map.regions, profile, mask_radius)
    phases = _region_phases(phase_map, template, kappa, profile.offset_phase)
    model = sampling.intensity(sampling.amplitude(phases, phase_map.complement_phase))
    return float(chi_square_values(sampling.measured, model))


def _scan_then_refine(objective, grid: np.ndarray, step: float, lower: float, upper: float):
    """
    Grid scan of a vectorized objective followed by a bounded scalar
    refinement around the best grid point.

    Returns (argmin, min, best grid index).
    """
    values = objective(grid)
    best = int(np.argmin(values))
    lo = max(lower, grid[best] - step)
    hi = min(upper, grid[best] + step)
    refined = minimize_scalar(lambda t: float(objective(np.array([t]))[0]), bounds=(lo, hi), method='bounded',
                              options={'xatol': step * REFINEMENT_FRACTION})
    if refined.success and refined.fun <= values[best]:
        return float(refined.x), float(refined.fun), best
    return float(grid[best]), float(values[best]), best


def fit_kappa(measured: FocalPlaneImage, phase_map: PhaseMap, template: SignalTemplate, profile: ProbeProfile,
              scan: ScanSpec = ScanSpec(), mask_radius: Optional[float] = None) -> FitResult:
    """
    Estimate κ by minimizing χ² over a grid scan, refined around the best
    grid point to 1e-4 of the scan step.

    A minimum on the scan boundary is flagged (on_boundary) and logged.

    Args:
        measured: Measured focal-plane image
        phase_map: Known background phases on the template regions
        template: Physical phase shift per region
        profile: Probe profile, including the offset phase
        scan: κ scan range and step
        mask_radius: Radius of the excluded focal core [μm]; 5 pedestal σ by default

    Returns:
        FitResult
    """
    _check_aligned(phase_map, template)
    sampling = SamplingSet.from_image(measured, phase_map.regions, profile, mask_radius)
    base = phase_map.phases + profile.offset_phase * template.support

    complement = np.exp(1j * phase_map.complement_phase) * (sampling.pedestal - sampling.region_matrix.sum(axis=1))
    chunk = max(1, CHUNK_ELEMENTS // max(sampling.n_points, 1))

    def objective(kappas: np.ndarray) -> np.ndarray:
        values = np.empty(kappas.size)
        for start in range(0, kappas.size, chunk):
            part = kappas[start:start + chunk]
            # one model column per κ
            phases = base[:, None] + template.deltas[:, None] * part[None, :]
            amplitude = sampling.region_matrix @ np.exp(1j * phases) + complement[:, None]
            values[start:start + chunk] = chi_square_values(sampling.measured,
                                                            sampling.scale * np.abs(amplitude) ** 2)
        return values

    grid = scan.grid()
    logger.debug(f"Scanning κ over {grid.size} points with {sampling.n_points} sampling points")
    kappa_hat, chi2_min, best = _scan_then_refine(objective, grid, scan.step, scan.minimum, scan.maximum)
    on_boundary = best in (0, grid.size - 1)
    if on_boundary:
        logger.warning(f"χ² minimum at κ={grid[best]} lies on the scan boundary [{scan.minimum}, {scan.maximum}]")
    return FitResult(kappa_hat=kappa_hat, chi2_min=max(chi2_min, 0.0), scan_step=scan.step,
                     n_sampling_points=sampling.n_points, scan=scan, on_boundary=on_boundary)


def mask_study(measured: FocalPlaneImage, phase_map: PhaseMap, template: SignalTemplate, profile: ProbeProfile,
               mask_radii: Sequence[float], scan: ScanSpec = ScanSpec()) -> List[Dict[str, float]]:
    """Refit κ for each mask radius [μm]."""
    rows = []
    for radius in mask_radii:
        result = fit_kappa(measured, phase_map, template, profile, scan, mask_radius=radius)
        rows.append({
            'mask_radius_um': float(radius),
            'kappa_hat': result.kappa_hat,
            'chi2_min': result.chi2_min,
            'n_points': result.n_sampling_points,
        })
    return rows


@dataclass
class Measurement:
    """One measured focal image and the known phase added to the probe for it."""
    image: FocalPlaneImage
    diversity: Optional[PhaseMap] = None


def reconstruct_phase_map(measurements: Sequence[Measurement], regions: Sequence[RectRegion],
                          profile: ProbeProfile, scan: ScanSpec = ScanSpec(), max_sweeps: int = MAX_SWEEPS,
                          tolerance: float = SWEEP_TOLERANCE, mask_radius: Optional[float] = None) -> PhaseMap:
    """
    Recover per-region phases by coordinate-wise scans.

    Each region in turn takes the role of the signal: its phase is scanned
    over the scan range and refined while the other regions are held
    fixed. Sweeps run in raster order until the relative χ² improvement
    drops below the tolerance or no phase moves by more than a small
    fraction of the scan step; a joint least-squares refinement of all
    phases then polishes the result. χ² is summed over all measurements; a
    diversity map adds its known phases (and complement phase) to the
    unknown ones for that measurement.

    A single intensity image cannot tell a map from its conjugate twin, so
    at least one measurement must carry a diversity map that is not a
    global phase.

    The returned map is anchored so that region 0 has phase 0.

    Raises:
        DomainError: if there are fewer sampling points than regions, a
            diversity map does not share the region grid, or no
            measurement carries phase diversity
    """
    regions = list(regions)
    n_regions = len(regions)
    if n_regions == 0:
        raise DomainError("reconstruct_phase_map", "at least one region is required")
    if not measurements:
        raise DomainError("reconstruct_phase_map", "at least one measurement is required")

    samplings = []
    known = []
    for measurement in measurements:
        samplings.append(SamplingSet.from_image(measurement.image, regions, profile, mask_radius))
        if measurement.diversity is None:
            known.append((np.zeros(n_regions), 0.0))
        else:
            if not measurement.diversity.aligned_with(regions):
                raise DomainError("reconstruct_phase_map", "diversity map must share the region grid")
            known.append((measurement.diversity.phases, measurement.diversity.complement_phase))

    n_points = sum(s.n_points for s in samplings)
    if n_points < n_regions:
        raise DomainError("reconstruct_phase_map",
                          f"underdetermined: {n_points} sampling points for {n_regions} regions")
    if not any(np.ptp(np.append(extra, complement)) > 0 for extra, complement in known):
        raise DomainError("reconstruct_phase_map",
                          "underdetermined: without phase diversity the conjugate map fits equally well")

    phases = np.zeros(n_regions)

    def total_chi2() -> float:
        return float(sum(
            chi_square_values(s.measured, s.intensity(s.amplitude(phases + extra, complement)))
            for s, (extra, complement) in zip(samplings, known)
        ))

    grid = scan.grid()
    previous = total_chi2()
    for sweep in range(max_sweeps):
        before = phases.copy()
        for i in range(n_regions):
            partial = []
            for s, (extra, complement) in zip(samplings, known):
                column = s.region_matrix[:, i]
                rest = s.amplitude(phases + extra, complement) - np.exp(1j * (phases[i] + extra[i])) * column
                partial.append((s, rest, column, extra[i]))

            def objective(values: np.ndarray) -> np.ndarray:
                chi2 = np.zeros(values.size)
                for s, rest, column, shift in partial:
                    chunk = max(1, CHUNK_ELEMENTS // s.n_points)
                    for start in range(0, values.size, chunk):
                        part = values[start:start + chunk]
                        amplitude = rest[:, None] + column[:, None] * np.exp(1j * (part[None, :] + shift))
                        chi2[start:start + chunk] += chi_square_values(s.measured, s.scale * np.abs(amplitude) ** 2)
                return chi2

            phases[i], _, _ = _scan_then_refine(objective, grid, scan.step, scan.minimum, scan.maximum)

        current = total_chi2()
        largest_change = float(np.max(np.abs(phases - before)))
        logger.debug(f"Sweep {sweep + 1}: χ² {previous:.6g} -> {current:.6g}, "
                     f"largest change {largest_change:.3g} rad")
        if current == 0 or previous - current <= tolerance * previous \
                or largest_change < scan.step * REFINEMENT_FRACTION:
            break
        previous = current
    else:
        logger.debug(f"Coordinate sweeps stopped after {max_sweeps} sweeps; refining jointly")

    def residuals(values: np.ndarray) -> np.ndarray:
        parts = []
        for s, (extra, complement) in zip(samplings, known):
            model = s.intensity(s.amplitude(values + extra, complement))
            denominator = s.measured + model
            safe = np.sqrt(np.where(denominator > 0, denominator, 1.0))
            parts.append(np.where(denominator > 0, (s.measured - model) / safe, 0.0) / np.sqrt(s.n_points - 1))
        return np.concatenate(parts)

    # Σ residuals² equals the summed χ²
    joint = least_squares(residuals, phases, bounds=(scan.minimum, scan.maximum))
    if not joint.success:
        logger.warning(f"Phase reconstruction did not converge: {joint.message}")
    phases = joint.x
    logger.debug(f"Joint refinement: χ² {2 * joint.cost:.6g} after {joint.nfev} evaluations")

    return PhaseMap(regions, phases).shifted(-phases[0])
