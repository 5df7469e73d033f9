"""
Resonant production of a light scalar or pseudoscalar field in
quasi-parallel photon-photon collisions: kinematics, Breit-Wigner
amplitude, averaging over the angular acceptance of a focused beam,
luminosity and the expected yield.

Natural units (ħ = c = 1, eV) internally; luminosities and cross
sections leave this module in SI (m⁻², m²).
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from scipy.integrate import quad
from scipy.optimize import brentq

from vacuumprobe.constants import CONSTANTS, FEMTOSECOND, MICROMETER, natural_to_si
from vacuumprobe.exceptions import DomainError
from vacuumprobe.models import (
    CollisionKinematics, FieldKind, LightField, LuminositySetup, ResonanceState, SensitivityReport,
)
from vacuumprobe.optics import approximate_waist, waist_from_lens

logger = logging.getLogger(__name__)

PEAK_AMPLITUDE_SQUARED = (2 * math.pi) ** 2
# Ratio of the compact one-beam cross section to its assembly from the
# kinematic prefactor and the averaged amplitude
COMPACT_TO_ASSEMBLED = 4 * math.pi
KERNEL_CUTOFF = 1e-16
APPROXIMATION_LIMIT = 0.1


def solve_kinematics(omega: float, vartheta: float, theta3: float) -> CollisionKinematics:
    """
    Final state of two photons of energy ω incident at ±ϑ when photon 3
    leaves at θ₃.

    ω₃ = ω sin²ϑ / (1 - cosϑ cosθ₃), ω₄ = 2ω - ω₃, ω₃ sinθ₃ = ω₄ sinθ₄

    Raises:
        DomainError: unless ω > 0, 0 < ϑ ≤ π/2 and 0 ≤ θ₃ < ϑ
    """
    if not omega > 0:
        raise DomainError("solve_kinematics", f"ω must be positive, got {omega}")
    if not 0 < vartheta <= math.pi / 2:
        raise DomainError("solve_kinematics", f"ϑ must lie in (0, π/2], got {vartheta}")
    if not 0 <= theta3 < vartheta:
        raise DomainError("solve_kinematics", f"θ₃ must satisfy 0 ≤ θ₃ < ϑ, got θ₃={theta3}, ϑ={vartheta}")

    s_minus = math.sin(0.5 * (vartheta - theta3))
    s_plus = math.sin(0.5 * (vartheta + theta3))
    # 1 - cosϑ cosθ₃ without cancellation
    denominator = s_minus ** 2 + s_plus ** 2
    omega3 = omega * math.sin(vartheta) ** 2 / denominator
    # 2ω - ω₃ = ω[(cosϑ - cosθ₃)² + sin²θ₃] / (1 - cosϑ cosθ₃)
    omega4 = omega * ((2 * s_plus * s_minus) ** 2 + math.sin(theta3) ** 2) / denominator
    theta4 = math.atan2(omega3 * math.sin(theta3), 2 * omega * math.cos(vartheta) - omega3 * math.cos(theta3))
    return CollisionKinematics(omega=omega, vartheta=vartheta, theta3=theta3, omega3=omega3, omega4=omega4,
                               theta4=theta4)


def decay_rate(field: LightField) -> float:
    """Γ = (g/M)² m³ / 16π [eV]."""
    return field.inverse_coupling ** 2 * field.mass_m ** 3 / (16 * math.pi)


_SCALAR_CHANNELS = {(1, 1, 1, 1): 1, (2, 2, 2, 2): 1, (1, 1, 2, 2): -1, (2, 2, 1, 1): -1}
_PSEUDOSCALAR_CHANNELS = {(1, 2, 1, 2): 1, (1, 2, 2, 1): 1, (2, 1, 1, 2): -1, (2, 1, 2, 1): -1}


def amplitude_selection(kind: FieldKind, pol_in: Tuple[int, int], pol_out: Tuple[int, int]) -> int:
    """
    Relative sign of the amplitude M_ijkl for linear polarization states
    1 and 2; 0 when the field does not couple the channel.
    """
    indices = tuple(pol_in) + tuple(pol_out)
    if len(indices) != 4 or any(i not in (1, 2) for i in indices):
        raise DomainError("amplitude_selection", f"polarization indices must be 1 or 2, got {pol_in}->{pol_out}")
    table = _SCALAR_CHANNELS if FieldKind(kind) is FieldKind.SCALAR else _PSEUDOSCALAR_CHANNELS
    return table.get(indices, 0)


def propagator_momentum_squared(omega: float, vartheta: float) -> float:
    """q_s² = 2ω²(cos2ϑ - 1) in metric (+,+,+,-); never positive."""
    return -4 * omega ** 2 * math.sin(vartheta) ** 2


def resonance_condition(mass: float, omega: float) -> float:
    """Resonant half angle ϑ_r = m / 2ω (small-angle form)."""
    if not (mass > 0 and omega > 0):
        raise DomainError("resonance_condition", "mass and ω must be positive")
    return mass / (2 * omega)


def chi_of_vartheta(omega_opt: float, mass: float, vartheta: float) -> float:
    """χ(ϑ) = ω² - m²/4ϑ² = ω²(1 - ε⁻²) with ε = ϑ/ϑ_r [eV²]."""
    if not vartheta > 0:
        raise DomainError("chi_of_vartheta", "ϑ must be positive")
    epsilon = vartheta / resonance_condition(mass, omega_opt)
    return omega_opt ** 2 * (1.0 - epsilon ** -2)


def resonance_width(omega_r: float, field: LightField) -> float:
    """a = ω_r² (gm/M)² / 8π [eV²]."""
    return omega_r ** 2 * field.gm_over_M ** 2 / (8 * math.pi)


def resonance_state(omega: float, vartheta: float, field: LightField) -> ResonanceState:
    """Breit-Wigner parameters at incidence angle ϑ; ω_r² = (m²/2)/(1 - cos2ϑ)."""
    if not 0 < vartheta <= math.pi / 2:
        raise DomainError("resonance_state", f"ϑ must lie in (0, π/2], got {vartheta}")
    omega_r = field.mass_m / (2 * math.sin(vartheta))
    vartheta_r = resonance_condition(field.mass_m, omega)
    return ResonanceState(omega_r=omega_r, chi=omega ** 2 - omega_r ** 2, width_a=resonance_width(omega_r, field),
                          vartheta_r=vartheta_r, epsilon=vartheta / vartheta_r)


def breit_wigner(chi: float, a: float) -> float:
    """(2π)² a² / (χ² + a²)."""
    return PEAK_AMPLITUDE_SQUARED * a ** 2 / (chi ** 2 + a ** 2)


def resonant_amplitude_squared(omega: float, vartheta: float, field: LightField) -> float:
    """|M|² near the resonance, Lorentzian in χ with half width a."""
    state = resonance_state(omega, vartheta, field)
    return breit_wigner(state.chi, state.width_a)


def invariant_amplitude(omega: float, vartheta: float, field: LightField) -> complex:
    """
    Exchange amplitude with the width included in the propagator:

        M = -(g/M)² ω⁴(cos2ϑ - 1)² / (2ω²(cos2ϑ - 1) + m² - 2imΓ)
    """
    q2 = propagator_momentum_squared(omega, vartheta)
    numerator = -field.inverse_coupling ** 2 * q2 ** 2 / 4
    return numerator / complex(q2 + field.mass_m ** 2, -2 * field.mass_m * decay_rate(field))


def bw_integral(chi_minus: float, chi_plus: float, a: float) -> float:
    """∫_{χ₋}^{χ₊} a²/(χ² + a²) dχ = a[arctan(χ/a)] [eV²]; infinite limits allowed."""
    if not a > 0:
        raise DomainError("bw_integral", "width a must be positive")
    if not chi_minus < chi_plus:
        raise DomainError("bw_integral", f"χ₋ must be below χ₊, got {chi_minus}, {chi_plus}")
    return a * (math.atan(chi_plus / a) - math.atan(chi_minus / a))


def _lower_cutoff(reduced_width: float) -> float:
    """Most negative ξ where (1 - ãξ)^{-3/2}/(1 + ξ²) still exceeds the kernel cutoff."""

    def excess(xi: float) -> float:
        return math.log((1 - reduced_width * xi) ** -1.5 / (1 + xi * xi)) - math.log(KERNEL_CUTOFF)

    outer = -1.0
    while excess(outer) > 0:
        outer *= 10.0
    return brentq(excess, outer, outer / 10.0 if outer < -1.0 else 0.0)


def _numeric_average(ratio: float, reduced_width: float) -> float:
    """
    (ϑ_r/Δϑ)(2π)²(ã/2) ∫_{-∞}^{ξ_max} (1 - ãξ)^{-3/2} / (1 + ξ²) dξ,
    ξ_max = (1 - (ϑ_r/Δϑ)²)/ã.

    The peak region is integrated in t = arctan ξ; beyond ξ = ã^{-1/2}
    the tail is integrated in u = ãξ.
    """
    xi_max = (1.0 - ratio ** 2) / reduced_width
    xi_split = min(1.0 / math.sqrt(reduced_width), xi_max)
    xi_low = min(_lower_cutoff(reduced_width), xi_split - 1.0)

    core, _ = quad(lambda t: (1.0 - reduced_width * math.tan(t)) ** -1.5,
                   math.atan(xi_low), math.atan(xi_split), epsabs=0.0, epsrel=1e-10, limit=200)
    tail = 0.0
    u_start = reduced_width * xi_split
    u_stop = 1.0 - ratio ** 2
    if u_stop > u_start:
        u_mid = min(0.5, u_stop)
        if u_mid > u_start:
            # ∫ ã(1-u)^{-3/2}/(u² + ã²) du with u = e^s
            part, _ = quad(lambda s: reduced_width * math.exp(s) * (1 - math.exp(s)) ** -1.5
                           / (math.exp(2 * s) + reduced_width ** 2),
                           math.log(u_start), math.log(u_mid), epsabs=0.0, epsrel=1e-10, limit=200)
            tail += part
        if u_stop > u_mid:
            # u = 1 - v⁻² removes the (1-u)^{-3/2} growth
            def integrand(v: float) -> float:
                u = 1.0 - v ** -2
                return 2 * reduced_width / (u * u + reduced_width ** 2)
            part, _ = quad(integrand, (1.0 - u_mid) ** -0.5, 1.0 / ratio, epsabs=0.0, epsrel=1e-10, limit=200)
            tail += part
    return ratio * PEAK_AMPLITUDE_SQUARED * 0.5 * reduced_width * (core + tail)


def off_resonance_average(ratio: float, reduced_width: float) -> float:
    """
    Average of the full Lorentzian over an acceptance that stops before
    the resonance (Δϑ < ϑ_r):

        (2π)² (ϑ_r/Δϑ) ∫_0^{Δϑ/ϑ_r} ã² / ((1 - ε⁻²)² + ã²) dε
    """
    upper = 1.0 / ratio

    def integrand(eps: float) -> float:
        if eps == 0.0:
            return 0.0
        # (1 - ε⁻²)² = (ε² - 1)²/ε⁴
        e2 = eps * eps
        return reduced_width ** 2 * e2 * e2 / ((e2 - 1.0) ** 2 + reduced_width ** 2 * e2 * e2)

    value, _ = quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-10, limit=200)
    return PEAK_AMPLITUDE_SQUARED * ratio * value


def averaged_amplitude_squared(omega_opt: float, vartheta_r: float, delta_theta: float, a: float,
                               method: str = "closed_form") -> float:
    """
    ⟨|M|²⟩ over incidence angles uniformly distributed on (0, Δϑ].

    closed_form: ((2π)²/2)(ϑ_r/Δϑ)(a/ω²)π
    numeric: adaptive quadrature of the same average with the full
    (1 - aξ/ω²)^{-3/2} weight

    When Δϑ < ϑ_r the resonance lies outside the acceptance and both
    methods return the off-resonance average, suppressed by a².
    """
    if method not in ("closed_form", "numeric"):
        raise DomainError("averaged_amplitude_squared", f"unknown method {method!r}")
    if not (omega_opt > 0 and vartheta_r > 0 and delta_theta > 0 and a > 0):
        raise DomainError("averaged_amplitude_squared", "ω, ϑ_r, Δϑ and a must be positive")
    reduced_width = a / omega_opt ** 2
    ratio = vartheta_r / delta_theta
    if ratio > 1.0:
        logger.warning(f"Resonant angle {vartheta_r:.3g} lies outside the angular acceptance {delta_theta:.3g}; "
                       f"returning the off-resonance average")
        return off_resonance_average(ratio, reduced_width)
    if method == "closed_form":
        return 0.5 * PEAK_AMPLITUDE_SQUARED * ratio * reduced_width * math.pi
    return _numeric_average(ratio, reduced_width)


def differential_cross_section(omega_opt: float, vartheta_r: float, delta_theta: float,
                               field: LightField) -> float:
    """
    dσ/dΩ₃ ≈ (π/64) ω⁻² (ϑ_r/Δϑ) (gm/M)² ϑ_r⁻⁴ [eV⁻²]

    For Δϑ < ϑ_r the off-resonance average replaces the resonant one, with
    the same normalization relative to the assembled form.
    """
    if not (omega_opt > 0 and vartheta_r > 0 and delta_theta > 0):
        raise DomainError("differential_cross_section", "ω, ϑ_r and Δϑ must be positive")
    if vartheta_r > delta_theta:
        return COMPACT_TO_ASSEMBLED * assembled_cross_section(omega_opt, vartheta_r, delta_theta, field)
    return (math.pi / 64) * omega_opt ** -2 * (vartheta_r / delta_theta) * field.gm_over_M ** 2 * vartheta_r ** -4


def assembled_cross_section(omega_opt: float, vartheta_r: float, delta_theta: float, field: LightField,
                            method: str = "closed_form") -> float:
    """
    (8πω)⁻² sin⁻⁴ϑ_r (ω₃/2ω)² ⟨|M|²⟩ at θ₃ = 0 [eV⁻²].
    """
    kinematics = solve_kinematics(omega_opt, vartheta_r, 0.0)
    a = resonance_width(omega_opt, field)
    if a == 0:
        return 0.0
    average = averaged_amplitude_squared(omega_opt, vartheta_r, delta_theta, a, method)
    return ((8 * math.pi * omega_opt) ** -2 * math.sin(vartheta_r) ** -4
            * (kinematics.omega3 / (2 * omega_opt)) ** 2 * average)


def cross_section_si(cross_section_ev: float) -> float:
    """eV⁻² to m²."""
    return natural_to_si(cross_section_ev, "cross-section")


def luminosity_terms(setup: LuminositySetup) -> Dict[str, float]:
    """
    Intermediate luminosity factors of one focused pulse:

        N_int = (Δt/τ) N̄, b = f/(cΔt), L̄ = N_int²/(2fλ) arctan(f/z_R), 𝓛 = b L̄

    Δt is clamped to τ.
    """
    delta_t = min(setup.delta_t, setup.tau) * FEMTOSECOND
    wavelength = setup.wavelength * MICROMETER
    n_interacting = setup.time_ratio * setup.n_photons
    b_factor = setup.focal_length_f / (CONSTANTS.speed_of_light * delta_t)
    mean_luminosity = (n_interacting ** 2 / (2 * setup.focal_length_f * wavelength)
                       * math.atan(setup.focal_length_f / setup.rayleigh_zR))
    return {
        'n_interacting': n_interacting,
        'b_factor': b_factor,
        'mean_luminosity_m2': mean_luminosity,
        'effective_luminosity_m2': b_factor * mean_luminosity,
    }


def effective_luminosity(setup: LuminositySetup) -> float:
    """𝓛 = (Δt/τ)(N̄²/(2cτλ)) arctan(f/z_R) [m⁻²]."""
    return luminosity_terms(setup)['effective_luminosity_m2']


def differential_yield(setup: LuminositySetup, omega_opt: float, vartheta_r: float, delta_theta: float,
                       field: LightField) -> float:
    """dY/dΩ₃ = 𝓛 dσ/dΩ₃, per pulse per steradian."""
    return effective_luminosity(setup) * cross_section_si(
        differential_cross_section(omega_opt, vartheta_r, delta_theta, field))


def required_photons(target_yield: float, setup: LuminositySetup, omega_opt: float, vartheta_r: float,
                     delta_theta: float, field: LightField) -> float:
    """Photons per pulse N̄₁ giving the target yield; the yield is quadratic in N̄."""
    if not target_yield > 0:
        raise DomainError("required_photons", f"target yield must be positive, got {target_yield}")
    coefficient = differential_yield(setup.with_photons(1.0), omega_opt, vartheta_r, delta_theta, field)
    if coefficient <= 0:
        raise DomainError("required_photons", "the yield coefficient vanishes; no photon number reaches the target")
    return math.sqrt(target_yield / coefficient)


def mass_reach(omega_opt: float, d: float, f: float, wavelength_um: float,
               approximation_limit: float = APPROXIMATION_LIMIT) -> Tuple[float, float]:
    """
    Mass window of one focusing setup.

    m_cut = 2ωΔϑ = 2ωλ²/(π(dfλ/2π)^{2/3}) while f ≪ z_R; beyond
    `approximation_limit` in f/z_R the exact waist solve supplies Δϑ.
    m_min = 2π⁻¹(λ/d)²ω.

    Returns:
        (m_cut [eV], m_min [eV])
    """
    if not (omega_opt > 0 and d > 0 and f > 0 and wavelength_um > 0):
        raise DomainError("mass_reach", "ω, d, f and wavelength must be positive")
    lam = wavelength_um * MICROMETER
    w0 = approximate_waist(d, f, wavelength_um)
    z_r = math.pi * w0 ** 2 / lam
    if f / z_r <= approximation_limit:
        delta_theta = lam / z_r
    else:
        logger.debug(f"f/z_R = {f / z_r:.3g} beyond {approximation_limit}; using the exact waist")
        _, _, delta_theta = waist_from_lens(d, f, wavelength_um)
    m_cut = 2 * omega_opt * delta_theta
    m_min = 2 / math.pi * (lam / d) ** 2 * omega_opt
    return m_cut, m_min


def one_beam_setup(n_photons: float, tau: float, delta_t: float, wavelength_um: float, d: float,
                   f: float) -> LuminositySetup:
    """LuminositySetup of a lens of diameter d and focal length f, from the exact waist solve."""
    w0, z_r, _ = waist_from_lens(d, f, wavelength_um)
    return LuminositySetup(n_photons=n_photons, tau=tau, delta_t=delta_t, wavelength=wavelength_um,
                           focal_length_f=f, rayleigh_zR=z_r, waist_w0=w0)


def sensitivity_report(setup: LuminositySetup, omega_opt: float, field: LightField, d: float,
                       delta_theta: Optional[float] = None, target_yield: float = 1.0) -> SensitivityReport:
    """
    Yield, required photon number and mass window for one setup.

    The angular acceptance defaults to m_cut/2ω of the lens; the field is
    excluded when its resonance lies inside the acceptance and the
    expected yield reaches the target.
    """
    vartheta_r = resonance_condition(field.mass_m, omega_opt)
    m_cut, m_min = mass_reach(omega_opt, d, setup.focal_length_f, setup.wavelength)
    if delta_theta is None:
        delta_theta = m_cut / (2 * omega_opt)
    in_acceptance = delta_theta >= vartheta_r
    if not in_acceptance:
        logger.warning(f"m = {field.mass_m:.3g} eV lies above the angular cut-off; the field is not excluded")
    cross_section = cross_section_si(differential_cross_section(omega_opt, vartheta_r, delta_theta, field))
    luminosity = effective_luminosity(setup)
    dy = luminosity * cross_section
    try:
        n1 = required_photons(target_yield, setup, omega_opt, vartheta_r, delta_theta, field)
    except DomainError:
        n1 = math.inf
    return SensitivityReport(
        differential_yield=dy,
        required_photons_N1=n1,
        m_cut=m_cut,
        m_min=m_min,
        exclusion_flag=bool(in_acceptance and dy >= target_yield),
        vartheta_r=vartheta_r,
        delta_theta=delta_theta,
        width_a=resonance_width(omega_opt, field),
        luminosity=luminosity,
        cross_section=cross_section,
    )


@dataclass(frozen=True)
class SweepPoint:
    """One row of a sensitivity sweep."""
    mass_m: float
    inverse_coupling: float  # eV⁻¹
    focal_length_f: float
    lens_diameter_d: float
    report: SensitivityReport
    n_photons: float

    def as_row(self) -> Dict[str, object]:
        return {
            'm_eV': self.mass_m,
            'gM_inv_GeV': self.inverse_coupling * 1e9,
            'f_m': self.focal_length_f,
            'd_m': self.lens_diameter_d,
            'N_photons': self.n_photons,
            'yield_per_pulse': self.report.differential_yield,
            'm_cut_eV': self.report.m_cut,
            'excluded_bool': self.report.exclusion_flag,
        }


def sensitivity_sweep(n_photons: float, tau: float, delta_t: float, wavelength_um: float, omega_opt: float,
                      fields: Sequence[LightField], focal_lengths: Sequence[float], diameters: Sequence[float],
                      delta_theta: Optional[float] = None, threads: int = 1) -> List[SweepPoint]:
    """
    Sensitivity reports over fields × focal lengths × lens diameters, in that
    nesting order. Cells are independent and evaluated on a thread pool;
    the output order does not depend on the thread count.
    """
    cells = [(field, f, d) for field in fields for f in focal_lengths for d in diameters]

    def evaluate(cell) -> SweepPoint:
        field, f, d = cell
        setup = one_beam_setup(n_photons, tau, delta_t, wavelength_um, d, f)
        report = sensitivity_report(setup, omega_opt, field, d, delta_theta)
        return SweepPoint(field.mass_m, field.inverse_coupling, f, d, report, n_photons)

    logger.info(f"Evaluating {len(cells)} sensitivity cells on {threads} thread(s)")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(evaluate, cells))
    return [evaluate(cell) for cell in cells]


def coupling_reach(setup: LuminositySetup, omega_opt: float, kind: FieldKind, mass: float, delta_theta: float,
                   target_yield: float = 1.0) -> float:
    """
    Smallest g/M [eV⁻¹] whose yield reaches the target at the setup's N̄.

    Inside the acceptance the yield scales as (g/M)², outside as (g/M)⁴.
    """
    reference = LightField(kind, mass, 1.0, mass * 1e20)
    vartheta_r = resonance_condition(mass, omega_opt)
    reference_yield = differential_yield(setup, omega_opt, vartheta_r, delta_theta, reference)
    if reference_yield <= 0:
        raise DomainError("coupling_reach", "the yield vanishes for this setup")
    power = 2.0 if delta_theta >= vartheta_r else 4.0
    return reference.inverse_coupling * (target_yield / reference_yield) ** (1.0 / power)
