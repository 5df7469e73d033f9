"""
Euler-Heisenberg vacuum response: refractive index shift, embedded probe
phase, photon-photon cross sections, and the residual-gas plasma background.
"""
import math
import logging
from typing import Optional, Tuple

from vacuumprobe.constants import BARN, CONSTANTS, FEMTOSECOND, MICROMETER
from vacuumprobe.exceptions import DomainError
from vacuumprobe.models import CrossingGeometry, PolarizationCombo, VacuumResponse

logger = logging.getLogger(__name__)

# Critical density n_cr[cm⁻³] = 1.12e21 / λ²[μm]
CRITICAL_DENSITY_COEFFICIENT = 1.12e21
# a₀ = 0.85e-9 λ[μm] √I[W/cm²]
NORMALIZED_VECTOR_POTENTIAL_COEFFICIENT = 0.85e-9


def n0_constant() -> float:
    """
    Energy density to refractive index conversion N₀ = (2/45) α²ħ³/(m_e⁴c⁵).

    Returns:
        N₀ [μm³/J]
    """
    per_m3 = (2.0 / 45.0) * CONSTANTS.fine_structure_alpha ** 2 / CONSTANTS.compton_energy_density
    return per_m3 / MICROMETER ** 3


def phase_velocity_deficits(zk_over_k2: float) -> Tuple[float, float]:
    """
    (1 - v∥/c, 1 - v⊥/c) for the energy density z_k/k² [J/μm³].

    Coefficients 8/45 and 14/45 of α²/m_e⁴ in natural units.
    """
    base = n0_constant() / 2.0 * zk_over_k2  # (1/45) α²/m_e⁴ · z_k/k²
    return 8.0 * base, 14.0 * base


def head_on_factor(cos_kn: float) -> float:
    """(1 + k̂·n̂)²: geometry factor of the background energy density seen by the probe."""
    return (1.0 + cos_kn) ** 2


def vacuum_response(combo: PolarizationCombo, zk_over_k2: float) -> VacuumResponse:
    """Refractive index shift ζN₀·z_k/k² for one polarization combination."""
    if zk_over_k2 < 0:
        raise DomainError("vacuum_response", "energy density must be non-negative")
    return VacuumResponse(combo, zk_over_k2, combo.zeta * n0_constant() * zk_over_k2)


def refractive_shift(combo: PolarizationCombo, theta: float, target_energy: float, target_waist: float,
                     target_duration: float) -> float:
    """
    δn = ζN₀(1 - cosθ) E_t / (π w₀t² cτ_t).

    Args:
        combo: Polarization combination (ζ = 4 or 7)
        theta: Crossing angle [rad]
        target_energy: E_t [J]
        target_waist: w₀t [μm]
        target_duration: τ_t [fs]
    """
    if not (target_waist > 0 and target_duration > 0):
        raise DomainError("refractive_shift", "target waist and duration must be positive")
    if target_energy < 0:
        raise DomainError("refractive_shift", "target energy must be non-negative")
    path_um = CONSTANTS.speed_of_light * target_duration * FEMTOSECOND / MICROMETER
    volume = math.pi * target_waist ** 2 * path_um
    return combo.zeta * n0_constant() * (1.0 - math.cos(theta)) * target_energy / volume


def phase_shift(probe_wavelength: float, combo: PolarizationCombo, theta: float, target_energy: float,
                target_waist: float, weight: float = 1.0) -> float:
    """
    Embedded probe phase δ = (2π/λ_p) ζN₀(1 - cosθ) E_t/(πw₀t²) φ_t.

    The target pulse length cancels between δn and the path length.
    """
    if not probe_wavelength > 0:
        raise DomainError("phase_shift", "probe wavelength must be positive")
    if not target_waist > 0:
        raise DomainError("phase_shift", "target waist must be positive")
    if not 0.0 <= weight <= 1.0:
        raise DomainError("phase_shift", f"weight must lie in [0, 1], got {weight}")
    return (2 * math.pi / probe_wavelength) * combo.zeta * n0_constant() * (1.0 - math.cos(theta)) \
        * target_energy / (math.pi * target_waist ** 2) * weight


def check_crossing(geometry: CrossingGeometry) -> bool:
    """
    Whether the crossing is inside the regime where δ is target-length independent
    (cτ_t < z_R,t and τ_t < τ_p). Violations are logged, not raised.
    """
    target, probe = geometry.target, geometry.probe
    valid = True
    if not target.pulse_length < target.rayleigh_length:
        logger.warning(f"Target pulse length {target.pulse_length:.3g} μm exceeds its Rayleigh length "
                       f"{target.rayleigh_length:.3g} μm")
        valid = False
    if not target.duration < probe.duration:
        logger.warning(f"Target duration {target.duration} fs is not shorter than probe duration {probe.duration} fs")
        valid = False
    return valid


def crossing_phase_shift(geometry: CrossingGeometry, x_p: float = 0.0, y_p: float = 0.0) -> float:
    """δ at probe position (x_p, y_p) using the geometry's transverse weight."""
    check_crossing(geometry)
    target = geometry.target
    return phase_shift(geometry.probe.wavelength, geometry.combo, geometry.crossing_angle_theta,
                       target.pulse_energy, target.waist_w0, geometry.weight_fn(x_p, y_p))


def qed_elastic_cross_section(omega_cms: float) -> float:
    """
    Low-energy photon-photon elastic cross section
    σ = (973/10125π) α² r_e² (ħω/m_ec²)⁶.

    Args:
        omega_cms: Photon energy in the center-of-mass frame [eV]

    Returns:
        σ [barn]
    """
    if not omega_cms > 0:
        raise DomainError("qed_elastic_cross_section", "photon energy must be positive")
    r_e_m = CONSTANTS.classical_electron_radius * 1e-2
    sigma_m2 = (973.0 / (10125.0 * math.pi)) * CONSTANTS.fine_structure_alpha ** 2 * r_e_m ** 2 \
        * (omega_cms / CONSTANTS.electron_rest_energy) ** 6
    return sigma_m2 / BARN


def qed_forward_background(omega: float, vartheta: float) -> float:
    """
    Scale of the QED forward cross section (α²/m_e⁴)² ω⁶ ϑ⁴ in natural units.

    Args:
        omega: Photon energy [eV]
        vartheta: Incidence half angle [rad]

    Returns:
        Cross-section scale [eV⁻²]
    """
    if not omega > 0 or vartheta < 0:
        raise DomainError("qed_forward_background", "need ω > 0 and ϑ ≥ 0")
    coupling = CONSTANTS.fine_structure_alpha ** 2 / CONSTANTS.electron_rest_energy ** 4
    return coupling ** 2 * omega ** 6 * vartheta ** 4


def critical_density(wavelength_um: float) -> float:
    """n_cr [cm⁻³]."""
    if not wavelength_um > 0:
        raise DomainError("critical_density", "wavelength must be positive")
    return CRITICAL_DENSITY_COEFFICIENT / wavelength_um ** 2


def lorentz_factor(wavelength_um: float, intensity: Optional[float] = None) -> float:
    """γ = √(1 + a₀²); 1 when no intensity is given."""
    if intensity is None:
        return 1.0
    if intensity < 0:
        raise DomainError("lorentz_factor", "intensity must be non-negative")
    a0 = NORMALIZED_VECTOR_POTENTIAL_COEFFICIENT * wavelength_um * math.sqrt(intensity)
    return math.sqrt(1.0 + a0 ** 2)


def residual_gas_electron_density(pressure_pa: float, temperature_k: float = 300.0,
                                  z_eff: float = 1.0) -> float:
    """
    Electron density of fully ionized residual gas [cm⁻³]: ideal gas
    n = P/(k_B T) times the mean number of freed electrons per molecule.
    """
    if pressure_pa < 0 or not temperature_k > 0 or z_eff < 0:
        raise DomainError("residual_gas_electron_density", "need P ≥ 0, T > 0, Z_eff ≥ 0")
    per_m3 = pressure_pa / (CONSTANTS.boltzmann * temperature_k)
    return per_m3 * 1e-6 * z_eff


def plasma_refractive_index(n_e: float, wavelength_um: float, intensity: Optional[float] = None) -> float:
    """
    Refractive index N = √(1 - ω_p²/(γω₀²)) of a collisionless plasma.

    Args:
        n_e: Electron density [cm⁻³]
        wavelength_um: Laser wavelength [μm]
        intensity: Peak intensity [W/cm²]; None keeps γ = 1

    Raises:
        DomainError: Density above γ·n_cr (no propagation)
    """
    if n_e < 0:
        raise DomainError("plasma_refractive_index", "electron density must be non-negative")
    gamma = lorentz_factor(wavelength_um, intensity)
    ratio = n_e / (gamma * critical_density(wavelength_um))
    if ratio > 1.0:
        raise DomainError("plasma_refractive_index",
                          f"density {n_e:.3e} cm⁻³ is above the relativistic critical density; the wave is evanescent")
    return math.sqrt(1.0 - ratio)


def plasma_index_shift(n_e: float, wavelength_um: float, intensity: Optional[float] = None) -> float:
    """ΔN = 1 - N, computed without cancellation (≈ ω_p²/2γω₀² for thin plasma)."""
    gamma = lorentz_factor(wavelength_um, intensity)
    ratio = n_e / (gamma * critical_density(wavelength_um))
    refractive = plasma_refractive_index(n_e, wavelength_um, intensity)
    return ratio / (1.0 + refractive)
