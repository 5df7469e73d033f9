"""
Reference parameter sets: the tabulated imaging configuration (target and
probe lasers, expansion and final focusing) and the one-beam resonance
reference case.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from vacuumprobe.constants import CONSTANTS, FEMTOSECOND, MICROMETER, photons_in_pulse
from vacuumprobe.models import (
    CrossingGeometry, FieldKind, GaussianBeam, GridSpec, LightField, LuminositySetup, PolarizationCombo,
    ProbeProfile, RectRegion,
)
from vacuumprobe.qed import crossing_phase_shift, refractive_shift
from vacuumprobe.resonance import one_beam_setup


@dataclass(frozen=True)
class ImagingPreset:
    """Target/probe crossing followed by expansion and focusing of the probe."""
    name: str
    target: GaussianBeam
    probe: GaussianBeam
    crossing_angle: float
    combo: PolarizationCombo
    expansion: float  # R_e
    focal_length_m: float  # f_pe
    pixel_pitch: float = 50.0  # μm
    half_extent: float = 1.0e4  # μm

    @property
    def crossing(self) -> CrossingGeometry:
        return CrossingGeometry(self.crossing_angle, self.target, self.probe, self.combo)

    @property
    def delta(self) -> float:
        """Embedded phase on the crossing footprint [rad]."""
        return crossing_phase_shift(self.crossing)

    @property
    def delta_n(self) -> float:
        return refractive_shift(self.combo, self.crossing_angle, self.target.pulse_energy, self.target.waist_w0,
                                self.target.duration)

    @property
    def expanded_waist(self) -> float:
        """w_pe = R_e w₀p [μm]."""
        return self.expansion * self.probe.waist_w0

    def profile(self, offset_phase: float = 0.0) -> ProbeProfile:
        return ProbeProfile.from_beam(self.probe, self.focal_length_m, self.expansion, offset_phase)

    def signal_region(self) -> RectRegion:
        """
        Crossing footprint on the expanded probe: the probe waist along the
        target direction, the target waist across it.
        """
        return RectRegion(self.probe.waist_w0, self.target.waist_w0).scaled(self.expansion)

    def grid(self) -> GridSpec:
        return GridSpec.covering(self.pixel_pitch, self.half_extent)


def _table1() -> ImagingPreset:
    wavelength = 0.8
    energy = 1.0e4
    target = GaussianBeam.from_f_number(wavelength, energy, 10.0, 1.2)
    # τ_p = z_R,t / c
    probe_duration = target.rayleigh_length * MICROMETER / CONSTANTS.speed_of_light / FEMTOSECOND
    probe = GaussianBeam.from_f_number(wavelength, energy, probe_duration, 4.5)
    return ImagingPreset(name="table1", target=target, probe=probe, crossing_angle=math.pi / 2,
                         combo=PolarizationCombo.PERPENDICULAR, expansion=5.0e4, focal_length_m=5.0)


@dataclass(frozen=True)
class SensitivityPreset:
    """One-beam focusing of a single pulse onto itself."""
    name: str
    field: LightField
    omega_opt: float  # eV
    pulse_energy: float  # J
    tau: float  # fs
    delta_t: float  # fs
    wavelength: float  # μm
    lens_diameter_d: float  # m
    focal_length_f: float  # m
    waist_w0: Optional[float] = None  # m; exact waist solve when None
    delta_theta: Optional[float] = None  # rad; m_cut/2ω when None
    focal_lengths: Tuple[float, ...] = (1.0, 3.0, 10.0, 100.0, 1000.0)
    lens_diameters: Tuple[float, ...] = (2.0,)

    @property
    def n_photons(self) -> float:
        return photons_in_pulse(self.pulse_energy, self.wavelength)

    def setup(self) -> LuminositySetup:
        """Luminosity setup; with an explicit waist, z_R = πw₀²/λ."""
        if self.waist_w0 is None:
            return one_beam_setup(self.n_photons, self.tau, self.delta_t, self.wavelength, self.lens_diameter_d,
                                  self.focal_length_f)
        rayleigh = math.pi * self.waist_w0 ** 2 / (self.wavelength * MICROMETER)
        return LuminositySetup(n_photons=self.n_photons, tau=self.tau, delta_t=self.delta_t,
                               wavelength=self.wavelength, focal_length_f=self.focal_length_f,
                               rayleigh_zR=rayleigh, waist_w0=self.waist_w0)


def _one_beam_reference() -> SensitivityPreset:
    return SensitivityPreset(
        name="one_beam",
        field=LightField(FieldKind.PSEUDOSCALAR, mass_m=1e-10, coupling_g=1 / 137, mass_scale_M=1e27),
        omega_opt=1.0,
        pulse_energy=1.0e4,
        tau=10.0,
        delta_t=10.0,
        wavelength=0.8,
        lens_diameter_d=2.0,
        focal_length_f=3.0,
        waist_w0=0.01,
        delta_theta=4e-9,
    )


# Kinematics table: incidence half angles and θ₃ as a fraction of ϑ
KINEMATICS_ANGLES: List[float] = [1e-6, 1e-3, 0.1, 0.5, 1.0, math.pi / 2]
KINEMATICS_FRACTIONS: List[float] = [0.0, 0.25, 0.5, 0.9]

IMAGING_PRESETS: Dict[str, ImagingPreset] = {"table1": _table1()}
SENSITIVITY_PRESETS: Dict[str, SensitivityPreset] = {"one_beam": _one_beam_reference()}


def get_imaging_preset(name: str = "table1") -> Optional[ImagingPreset]:
    """Imaging preset by name, case-insensitive; None if unknown."""
    return IMAGING_PRESETS.get(name.lower().strip())


def get_sensitivity_preset(name: str = "one_beam") -> Optional[SensitivityPreset]:
    """Sensitivity preset by name, case-insensitive; None if unknown."""
    return SENSITIVITY_PRESETS.get(name.lower().strip())
