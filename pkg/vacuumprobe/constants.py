"""
Physical constants and the unit conversions used across vacuumprobe.

Optics code works in SI-like laboratory units (μm, J, fs); the resonance
code works in natural units (ħ = c = 1, energies in eV). Conversions
between the two happen only through this module.
"""
import math
import logging
from dataclasses import dataclass

from scipy import constants as codata

from vacuumprobe.exceptions import DomainError

logger = logging.getLogger(__name__)

MICROMETER = 1e-6  # m
FEMTOSECOND = 1e-15  # s
BARN = 1e-28  # m²


@dataclass(frozen=True)
class PhysicalConstants:
    """
    CODATA constants in the units the formulas need.
    """
    fine_structure_alpha: float
    electron_rest_energy: float  # eV
    classical_electron_radius: float  # cm
    hbar_c: float  # eV·m
    speed_of_light: float  # m/s
    planck_mass: float  # eV, reduced: 8πG = ħc M_P⁻²
    compton_energy_density: float  # J/m³
    hbar: float  # eV·s
    joule_per_ev: float
    boltzmann: float  # J/K

    @classmethod
    def codata(cls) -> "PhysicalConstants":
        """Build the constant set from scipy.constants."""
        alpha = codata.fine_structure
        joule_per_ev = codata.electron_volt
        electron_rest_energy = codata.m_e * codata.c ** 2 / joule_per_ev
        hbar_c = codata.hbar * codata.c / joule_per_ev
        planck_energy = math.sqrt(codata.hbar * codata.c ** 5 / (8 * math.pi * codata.G))
        # (m_e c²)⁴ / (ħc)³ in J/m³
        compton_energy_density = (electron_rest_energy ** 4 / hbar_c ** 3) * joule_per_ev
        return cls(
            fine_structure_alpha=alpha,
            electron_rest_energy=electron_rest_energy,
            classical_electron_radius=alpha * hbar_c / electron_rest_energy * 1e2,
            hbar_c=hbar_c,
            speed_of_light=codata.c,
            planck_mass=planck_energy / joule_per_ev,
            compton_energy_density=compton_energy_density,
            hbar=codata.hbar / joule_per_ev,
            joule_per_ev=joule_per_ev,
            boltzmann=codata.k,
        )


CONSTANTS = PhysicalConstants.codata()

# Natural-unit dimension -> (SI unit, factor applied to an eV-power value)
_NATURAL_DIMENSIONS = {
    "energy": ("J", CONSTANTS.joule_per_ev),
    "length": ("m", CONSTANTS.hbar_c),
    "time": ("s", CONSTANTS.hbar),
    "cross-section": ("m^2", CONSTANTS.hbar_c ** 2),
}


def photon_energy_from_wavelength(wavelength_um: float) -> float:
    """
    Photon energy for a vacuum wavelength.

    Args:
        wavelength_um: Wavelength [μm]

    Returns:
        Photon energy [eV]
    """
    if not wavelength_um > 0:
        raise DomainError("photon_energy_from_wavelength", f"wavelength must be positive, got {wavelength_um}")
    return 2 * math.pi * CONSTANTS.hbar_c / (wavelength_um * MICROMETER)


def wavelength_from_photon_energy(energy_ev: float) -> float:
    """Inverse of photon_energy_from_wavelength, returns μm."""
    if not energy_ev > 0:
        raise DomainError("wavelength_from_photon_energy", f"energy must be positive, got {energy_ev}")
    return 2 * math.pi * CONSTANTS.hbar_c / energy_ev / MICROMETER


def photons_in_pulse(pulse_energy_j: float, wavelength_um: float) -> float:
    """Number of photons carried by a pulse of the given energy [J]."""
    return pulse_energy_j / (photon_energy_from_wavelength(wavelength_um) * CONSTANTS.joule_per_ev)


def natural_to_si(value: float, dimension: str) -> float:
    """
    Convert a natural-unit quantity (ħ = c = 1, powers of eV) to SI.

    Args:
        value: eV for "energy", eV⁻¹ for "length"/"time", eV⁻² for "cross-section"
        dimension: One of energy, length, time, cross-section

    Returns:
        Value in J, m, s or m² respectively
    """
    try:
        _, factor = _NATURAL_DIMENSIONS[dimension]
    except KeyError:
        raise DomainError(
            "natural_to_si",
            f"unknown dimension {dimension!r}, expected one of {sorted(_NATURAL_DIMENSIONS)}",
        ) from None
    return value * factor


def si_to_natural(value: float, dimension: str) -> float:
    """Inverse of natural_to_si."""
    try:
        _, factor = _NATURAL_DIMENSIONS[dimension]
    except KeyError:
        raise DomainError(
            "si_to_natural",
            f"unknown dimension {dimension!r}, expected one of {sorted(_NATURAL_DIMENSIONS)}",
        ) from None
    return value / factor


def to_barn(area_m2: float) -> float:
    """m² to barn."""
    return area_m2 / BARN
