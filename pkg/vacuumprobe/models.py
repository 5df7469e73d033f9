"""
Data models for vacuumprobe.
"""
import math
import logging
from enum import Enum
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Any

import numpy as np

from vacuumprobe.constants import CONSTANTS, FEMTOSECOND, MICROMETER, photons_in_pulse
from vacuumprobe.exceptions import DomainError

logger = logging.getLogger(__name__)


class Polarization(str, Enum):
    """Linear polarization state of a pulse."""
    STATE1 = "state1"
    STATE2 = "state2"


class PolarizationCombo(Enum):
    """Probe/target polarization combination; the value is ζ."""
    PARALLEL = 4
    PERPENDICULAR = 7

    @property
    def zeta(self) -> int:
        return self.value


class FieldKind(str, Enum):
    """Parity of the exchanged light field."""
    SCALAR = "scalar"
    PSEUDOSCALAR = "pseudoscalar"


class Provenance(str, Enum):
    """Whether a focal image carries an embedded phase."""
    WITH_SIGNAL = "with_signal"
    PEDESTAL_ONLY = "pedestal_only"


def _require_positive(operation: str, **values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(operation, f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class GaussianBeam:
    """
    One laser pulse with a Gaussian transverse profile.
    """
    wavelength: float  # μm
    pulse_energy: float  # J
    duration: float  # fs
    waist_w0: float  # μm
    polarization: Polarization = Polarization.STATE1

    def __post_init__(self):
        _require_positive("GaussianBeam", wavelength=self.wavelength, waist_w0=self.waist_w0,
                          duration=self.duration)
        if self.pulse_energy < 0:
            raise DomainError("GaussianBeam", f"pulse_energy must be non-negative, got {self.pulse_energy}")
        if self.waist_w0 < self.wavelength:
            logger.warning(
                f"Waist {self.waist_w0} μm is below the diffraction limit (wavelength {self.wavelength} μm)"
            )

    @classmethod
    def from_f_number(cls, wavelength: float, pulse_energy: float, duration: float,
                      f_number: float, polarization: Polarization = Polarization.STATE1) -> "GaussianBeam":
        """Beam focused to w₀ = F·λ."""
        return cls(wavelength=wavelength, pulse_energy=pulse_energy, duration=duration,
                   waist_w0=f_number * wavelength, polarization=polarization)

    @property
    def rayleigh_length(self) -> float:
        """z_R = πw₀²/λ [μm]."""
        return math.pi * self.waist_w0 ** 2 / self.wavelength

    @property
    def wavenumber(self) -> float:
        """k = 2π/λ [μm⁻¹]."""
        return 2 * math.pi / self.wavelength

    @property
    def photons(self) -> float:
        return photons_in_pulse(self.pulse_energy, self.wavelength)

    @property
    def pulse_length(self) -> float:
        """cτ [μm]."""
        return CONSTANTS.speed_of_light * self.duration * FEMTOSECOND / MICROMETER


@dataclass(frozen=True)
class FocusingSetup:
    """
    One-beam focusing geometry: a lens of diameter d and focal length f.
    """
    lens_diameter_d: float  # m
    focal_length_f: float  # m
    wavelength: float  # μm
    waist_w0: float  # m
    rayleigh_zR: float  # m
    angular_uncertainty: float  # rad

    def __post_init__(self):
        if not self.waist_w0 < self.lens_diameter_d / 2:
            raise DomainError("FocusingSetup", "waist must be smaller than the lens radius")
        if not self.angular_uncertainty > 0:
            raise DomainError("FocusingSetup", "angular uncertainty must be positive")


@dataclass(frozen=True)
class VacuumResponse:
    """Refractive response of the vacuum for one polarization combination."""
    polarization_combo: PolarizationCombo
    energy_density_zk_over_k2: float  # J/μm³
    refractive_shift: float


def _unit_weight(x_p: float, y_p: float) -> float:
    return 1.0


@dataclass(frozen=True)
class CrossingGeometry:
    """Target and probe pulses crossing at angle θ."""
    crossing_angle_theta: float  # rad
    target: GaussianBeam
    probe: GaussianBeam
    combo: PolarizationCombo = PolarizationCombo.PERPENDICULAR
    weight_fn: Callable[[float, float], float] = field(default=_unit_weight, compare=False)

    def __post_init__(self):
        if not 0 <= self.crossing_angle_theta <= math.pi:
            raise DomainError("CrossingGeometry", f"crossing angle must lie in [0, π], got {self.crossing_angle_theta}")


@dataclass(frozen=True)
class RectRegion:
    """
    Rectangle |x - x0| ≤ μ, |y - y0| ≤ ν on the probe transverse plane [μm].
    """
    half_width_mu: float
    half_height_nu: float
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        _require_positive("RectRegion", half_width_mu=self.half_width_mu, half_height_nu=self.half_height_nu)

    @property
    def x_bounds(self) -> Tuple[float, float]:
        return self.center[0] - self.half_width_mu, self.center[0] + self.half_width_mu

    @property
    def y_bounds(self) -> Tuple[float, float]:
        return self.center[1] - self.half_height_nu, self.center[1] + self.half_height_nu

    @property
    def is_centered(self) -> bool:
        return self.center[0] == 0.0 and self.center[1] == 0.0

    def scaled(self, factor: float) -> "RectRegion":
        """Region magnified by a pure transverse expansion."""
        return RectRegion(self.half_width_mu * factor, self.half_height_nu * factor,
                          (self.center[0] * factor, self.center[1] * factor))

    def as_dict(self) -> dict:
        return {
            'x0': self.center[0],
            'y0': self.center[1],
            'half_w': self.half_width_mu,
            'half_h': self.half_height_nu,
        }


@dataclass(frozen=True)
class ProbeProfile:
    """
    Probe amplitude A₀p·exp(-a r²) in front of the focusing lens.

    The amplitude is normalized so that ∫∫A₀p² e^{-2ar²} equals the number
    of photons in the pulse; a = 1/w² for a beam of waist w.
    """
    peak_amplitude_A0p: float  # photons^½ / μm
    gaussian_a: float  # μm⁻²
    wavelength_p: float  # μm
    focal_length_fp: float  # m
    offset_phase: float = 0.0  # rad

    def __post_init__(self):
        _require_positive("ProbeProfile", gaussian_a=self.gaussian_a, wavelength_p=self.wavelength_p,
                          focal_length_fp=self.focal_length_fp)

    @classmethod
    def from_beam(cls, beam: GaussianBeam, focal_length_m: float, expansion: float = 1.0,
                  offset_phase: float = 0.0) -> "ProbeProfile":
        """
        Profile of a probe beam expanded by a factor R_e before the lens.

        Args:
            beam: Probe pulse at its waist
            focal_length_m: Focal length of the imaging lens [m]
            expansion: Transverse magnification R_e
            offset_phase: Extra phase on the signal region (0 or π/2)
        """
        width = beam.waist_w0 * expansion
        a = 1.0 / width ** 2
        amplitude = math.sqrt(2 * a * beam.photons / math.pi)
        return cls(peak_amplitude_A0p=amplitude, gaussian_a=a, wavelength_p=beam.wavelength,
                   focal_length_fp=focal_length_m, offset_phase=offset_phase)

    @property
    def focal_length_um(self) -> float:
        return self.focal_length_fp / MICROMETER

    @property
    def total_photons(self) -> float:
        return self.peak_amplitude_A0p ** 2 * math.pi / (2 * self.gaussian_a)

    @property
    def waist(self) -> float:
        """Field 1/e radius at the lens [μm]."""
        return 1.0 / math.sqrt(self.gaussian_a)

    @property
    def frequency_scale(self) -> float:
        """dω/dx = 2π/(f_p λ_p) [μm⁻²]."""
        return 2 * math.pi / (self.focal_length_um * self.wavelength_p)

    @property
    def focal_waist(self) -> float:
        """1/e² intensity radius of the pedestal on the focal plane [μm]."""
        return self.focal_length_um * self.wavelength_p / (math.pi * self.waist)

    def with_offset(self, offset_phase: float) -> "ProbeProfile":
        return ProbeProfile(self.peak_amplitude_A0p, self.gaussian_a, self.wavelength_p,
                            self.focal_length_fp, offset_phase)


@dataclass(frozen=True)
class GridSpec:
    """Square pixel grid centered on the optical axis."""
    pixel_pitch: float  # μm
    nx: int
    ny: int

    def __post_init__(self):
        _require_positive("GridSpec", pixel_pitch=self.pixel_pitch)
        if self.nx < 0 or self.ny < 0:
            raise DomainError("GridSpec", "pixel counts must be non-negative")

    @classmethod
    def covering(cls, pixel_pitch: float, half_extent: float) -> "GridSpec":
        """Odd-sized grid whose central pixel is centered on the origin and reaches ±half_extent."""
        n = 2 * int(math.ceil(half_extent / pixel_pitch - 0.5)) + 1
        return cls(pixel_pitch, n, n)

    def centers(self, n: int) -> np.ndarray:
        return (np.arange(n) - (n - 1) / 2.0) * self.pixel_pitch

    @property
    def x_centers(self) -> np.ndarray:
        return self.centers(self.nx)

    @property
    def y_centers(self) -> np.ndarray:
        return self.centers(self.ny)


@dataclass(eq=False)
class FocalPlaneImage:
    """
    Expected photons per pixel on the focal plane; values[j, i] is at
    (x_centers[i], y_centers[j]).
    """
    pixel_pitch: float  # μm
    x_centers: np.ndarray
    y_centers: np.ndarray
    values: np.ndarray
    provenance: Provenance
    delta: float = 0.0
    offset_phase: float = 0.0
    coarse_grid: bool = False

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def total(self) -> float:
        return float(np.sum(self.values))

    def metadata(self) -> Dict[str, Any]:
        return {
            'pixel_pitch_um': self.pixel_pitch,
            'nx': int(self.x_centers.size),
            'ny': int(self.y_centers.size),
            'x_min_um': float(self.x_centers[0]) if self.x_centers.size else None,
            'x_max_um': float(self.x_centers[-1]) if self.x_centers.size else None,
            'y_min_um': float(self.y_centers[0]) if self.y_centers.size else None,
            'y_max_um': float(self.y_centers[-1]) if self.y_centers.size else None,
            'delta_rad': self.delta,
            'offset_phase_rad': self.offset_phase,
            'provenance': self.provenance.value,
            'coarse_grid': self.coarse_grid,
            'value_unit': 'photons/pixel',
        }


@dataclass(eq=False)
class PhaseMap:
    """
    Piecewise-constant phase over rectangular regions; the area outside all
    regions carries complement_phase.
    """
    regions: List[RectRegion]
    phases: np.ndarray
    complement_phase: float = 0.0

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        if self.phases.shape != (len(self.regions),):
            raise DomainError("PhaseMap", "one phase per region is required")
        if not np.all(np.isfinite(self.phases)):
            raise DomainError("PhaseMap", "phases must be finite")

    @classmethod
    def grid(cls, nx: int, ny: int, half_width: float, half_height: float,
             center: Tuple[float, float] = (0.0, 0.0), phases: Optional[np.ndarray] = None) -> "PhaseMap":
        """
        Tile the rectangle |x-x0| ≤ half_width, |y-y0| ≤ half_height with
        nx×ny equal cells in raster order (row by row, x fastest).
        """
        cell_w = half_width / nx
        cell_h = half_height / ny
        regions = []
        for j in range(ny):
            for i in range(nx):
                cx = center[0] - half_width + (2 * i + 1) * cell_w
                cy = center[1] - half_height + (2 * j + 1) * cell_h
                regions.append(RectRegion(cell_w, cell_h, (cx, cy)))
        if phases is None:
            phases = np.zeros(len(regions))
        return cls(regions, phases)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def with_phases(self, phases: np.ndarray) -> "PhaseMap":
        return PhaseMap(list(self.regions), np.array(phases, dtype=float), self.complement_phase)

    def shifted(self, constant: float) -> "PhaseMap":
        """Same map with a global phase added everywhere, complement included."""
        return PhaseMap(list(self.regions), self.phases + constant, self.complement_phase + constant)

    def aligned_with(self, other_regions: List[RectRegion]) -> bool:
        return len(self.regions) == len(other_regions) and all(
            a == b for a, b in zip(self.regions, other_regions))

    def as_records(self) -> List[dict]:
        return [dict(region.as_dict(), phase=float(phase)) for region, phase in zip(self.regions, self.phases)]

    @classmethod
    def from_records(cls, records: List[dict]) -> "PhaseMap":
        regions = [RectRegion(r['half_w'], r['half_h'], (r['x0'], r['y0'])) for r in records]
        return cls(regions, np.array([r['phase'] for r in records], dtype=float))


@dataclass(eq=False)
class SignalTemplate:
    """Physical phase shift δ_i per region; κ scales it in the fit."""
    regions: List[RectRegion]
    deltas: np.ndarray
    note: str = ""

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        if self.deltas.shape != (len(self.regions),):
            raise DomainError("SignalTemplate", "one δ per region is required")

    @classmethod
    def uniform(cls, phase_map: PhaseMap, delta: float, note: str = "") -> "SignalTemplate":
        """Constant δ on every region of a phase map."""
        return cls(list(phase_map.regions), np.full(phase_map.n_regions, delta), note)

    @property
    def support(self) -> np.ndarray:
        return self.deltas != 0

    def as_records(self) -> List[dict]:
        return [dict(region.as_dict(), phase=float(d)) for region, d in zip(self.regions, self.deltas)]


@dataclass(frozen=True)
class ScanSpec:
    """κ grid scan [minimum, maximum] with the given step."""
    minimum: float = -2.0
    maximum: float = 2.0
    step: float = 1e-2

    def __post_init__(self):
        if not self.maximum > self.minimum:
            raise DomainError("ScanSpec", "scan maximum must exceed minimum")
        _require_positive("ScanSpec", step=self.step)

    def grid(self) -> np.ndarray:
        n = int(round((self.maximum - self.minimum) / self.step))
        return self.minimum + self.step * np.arange(n + 1)

    def as_dict(self) -> dict:
        return {'min': self.minimum, 'max': self.maximum, 'step': self.step}


@dataclass(frozen=True)
class FitResult:
    """Outcome of a κ fit."""
    kappa_hat: float
    chi2_min: float
    scan_step: float
    n_sampling_points: int
    scan: ScanSpec
    on_boundary: bool = False

    def as_dict(self) -> dict:
        return {
            'kappa_hat': self.kappa_hat,
            'chi2_min': self.chi2_min,
            'n_points': self.n_sampling_points,
            'scan': self.scan.as_dict(),
            'on_boundary': self.on_boundary,
        }


@dataclass(frozen=True)
class LightField:
    """Hypothetical scalar or pseudoscalar field coupled to two photons."""
    kind: FieldKind
    mass_m: float  # eV
    coupling_g: float
    mass_scale_M: float  # eV

    def __post_init__(self):
        _require_positive("LightField", mass_m=self.mass_m, mass_scale_M=self.mass_scale_M)
        if self.coupling_g < 0:
            raise DomainError("LightField", "coupling g must be non-negative")

    @property
    def inverse_coupling(self) -> float:
        """g/M [eV⁻¹]."""
        return self.coupling_g / self.mass_scale_M

    @property
    def gm_over_M(self) -> float:
        return self.coupling_g * self.mass_m / self.mass_scale_M

    def with_mass_scale(self, mass_scale_M: float) -> "LightField":
        return LightField(self.kind, self.mass_m, self.coupling_g, mass_scale_M)


@dataclass(frozen=True)
class CollisionKinematics:
    """Two photons of energy ω at ±ϑ to the z axis scattering into (ω₃, θ₃), (ω₄, θ₄)."""
    omega: float  # eV
    vartheta: float  # rad
    theta3: float  # rad
    omega3: float  # eV
    omega4: float  # eV
    theta4: float  # rad

    def residuals(self) -> Tuple[float, float, float]:
        """Energy, z- and x-momentum balance, relative to 2ω."""
        scale = 2 * self.omega
        energy = (self.omega3 + self.omega4 - scale) / scale
        z_momentum = (self.omega3 * math.cos(self.theta3) + self.omega4 * math.cos(self.theta4)
                      - scale * math.cos(self.vartheta)) / scale
        x_momentum = (self.omega3 * math.sin(self.theta3) - self.omega4 * math.sin(self.theta4)) / scale
        return energy, z_momentum, x_momentum


@dataclass(frozen=True)
class ResonanceState:
    """Breit-Wigner parameters at one incidence angle."""
    omega_r: float  # eV
    chi: float  # eV²
    width_a: float  # eV²
    vartheta_r: float  # rad
    epsilon: float


@dataclass(frozen=True)
class LuminositySetup:
    """
    Photon pulse focused by a lens: the ingredients of the effective luminosity.
    """
    n_photons: float
    tau: float  # fs
    delta_t: float  # fs
    wavelength: float  # μm
    focal_length_f: float  # m
    rayleigh_zR: float  # m
    waist_w0: float  # m

    def __post_init__(self):
        _require_positive("LuminositySetup", tau=self.tau, delta_t=self.delta_t, wavelength=self.wavelength,
                          focal_length_f=self.focal_length_f, rayleigh_zR=self.rayleigh_zR,
                          waist_w0=self.waist_w0)
        if self.n_photons < 0:
            raise DomainError("LuminositySetup", "photon number must be non-negative")
        # Δt ≥ 2π/ω  <=>  cΔt ≥ λ
        light_travel = CONSTANTS.speed_of_light * self.delta_t * FEMTOSECOND
        if light_travel < self.wavelength * MICROMETER * (1 - 1e-12):
            raise DomainError("LuminositySetup",
                              f"interaction time {self.delta_t} fs is below one optical period")

    @property
    def time_ratio(self) -> float:
        """Δt/τ clamped to 1."""
        return min(self.delta_t / self.tau, 1.0)

    def with_photons(self, n_photons: float) -> "LuminositySetup":
        return LuminositySetup(n_photons, self.tau, self.delta_t, self.wavelength, self.focal_length_f,
                               self.rayleigh_zR, self.waist_w0)


@dataclass(frozen=True)
class SensitivityReport:
    """Yield and mass reach for one focusing setup and light field."""
    differential_yield: float  # per pulse per steradian
    required_photons_N1: float
    m_cut: float  # eV
    m_min: float  # eV
    exclusion_flag: bool
    vartheta_r: float = 0.0
    delta_theta: float = 0.0
    width_a: float = 0.0
    luminosity: float = 0.0  # m⁻²
    cross_section: float = 0.0  # m²/sr

    def as_dict(self) -> dict:
        return {
            'yield_per_pulse': self.differential_yield,
            'required_photons_N1': self.required_photons_N1,
            'm_cut_eV': self.m_cut,
            'm_min_eV': self.m_min,
            'excluded': self.exclusion_flag,
            'vartheta_r': self.vartheta_r,
            'delta_theta': self.delta_theta,
            'width_a_eV2': self.width_a,
            'luminosity_m2': self.luminosity,
            'cross_section_m2_sr': self.cross_section,
        }
