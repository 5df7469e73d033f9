"""
Scenario configuration: TOML (or JSON) files parsed into a validated,
immutable ScenarioConfig. Missing blocks fall back to the reference presets.
"""
import os
import sys
import json
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from vacuumprobe.exceptions import ConfigError, DomainError
from vacuumprobe.models import (
    FieldKind, GaussianBeam, LightField, PolarizationCombo, ScanSpec,
)
from vacuumprobe.presets import (
    KINEMATICS_ANGLES, KINEMATICS_FRACTIONS, ImagingPreset, SensitivityPreset, get_imaging_preset,
    get_sensitivity_preset,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCENARIOS = ("image", "fit", "sensitivity", "kinematics", "table1")
THREADS_ENV = "VACUUMPROBE_THREADS"


@dataclass(frozen=True)
class ImagingOptions:
    offset_phase: float = 0.0
    delta: Optional[float] = None  # rad; crossing phase when None
    quadrature_order: int = 8


@dataclass(frozen=True)
class FitOptions:
    scan: ScanSpec = ScanSpec()
    kappa_true: float = 1.0
    offset_phase: float = math.pi / 2
    mask_sigmas: float = 5.0
    perturbation: float = 0.0
    background_rms: float = 0.0
    tiles: Tuple[int, int] = (1, 1)
    pixel_pitch: float = 50.0  # μm
    half_extent: float = 2000.0  # μm
    mask_radii: Tuple[float, ...] = ()
    reconstruct_background: bool = False
    diversity_phase: float = math.pi / 2


@dataclass(frozen=True)
class KinematicsOptions:
    omega: float = 1.0  # eV
    varthetas: Tuple[float, ...] = tuple(KINEMATICS_ANGLES)
    theta3_fractions: Tuple[float, ...] = tuple(KINEMATICS_FRACTIONS)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one run needs; blocks not given in the file come from presets."""
    scenario: str
    imaging_preset: ImagingPreset
    sensitivity_preset: SensitivityPreset
    imaging: ImagingOptions = ImagingOptions()
    fit: FitOptions = FitOptions()
    kinematics: KinematicsOptions = KinematicsOptions()
    masses: Tuple[float, ...] = ()
    output_dir: Optional[str] = None
    seed: int = 0
    source: Optional[str] = None
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def fields(self) -> List[LightField]:
        """Light fields of a sensitivity sweep: the preset field, or one per configured mass."""
        base = self.sensitivity_preset.field
        if not self.masses:
            return [base]
        return [LightField(base.kind, m, base.coupling_g, base.mass_scale_M) for m in self.masses]


class _Block:
    """Typed accessors over one mapping, reporting errors with dotted paths."""

    def __init__(self, data: Mapping[str, Any], path: str):
        if not isinstance(data, Mapping):
            raise ConfigError("expected a table", path)
        self.data = data
        self.path = path

    def _field(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def number(self, key: str, default: Optional[float] = None, positive: bool = False,
               non_negative: bool = False) -> Optional[float]:
        if key not in self.data:
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", self._field(key))
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("must be finite", self._field(key))
        if positive and not value > 0:
            raise ConfigError(f"must be positive, got {value}", self._field(key))
        if non_negative and value < 0:
            raise ConfigError(f"must be non-negative, got {value}", self._field(key))
        return value

    def integer(self, key: str, default: Optional[int] = None, minimum: int = 0) -> Optional[int]:
        if key not in self.data:
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", self._field(key))
        if value < minimum:
            raise ConfigError(f"must be at least {minimum}, got {value}", self._field(key))
        return value

    def numbers(self, key: str, default: Tuple[float, ...] = (), positive: bool = False) -> Tuple[float, ...]:
        if key not in self.data:
            return default
        values = self.data[key]
        if not isinstance(values, list):
            raise ConfigError(f"expected a list of numbers, got {values!r}", self._field(key))
        probe = _Block({str(i): v for i, v in enumerate(values)}, self._field(key))
        return tuple(probe.number(str(i), positive=positive) for i in range(len(values)))

    def string(self, key: str, choices: Tuple[str, ...], default: Optional[str] = None) -> Optional[str]:
        if key not in self.data:
            return default
        value = self.data[key]
        if not isinstance(value, str) or value.lower() not in choices:
            raise ConfigError(f"expected one of {list(choices)}, got {value!r}", self._field(key))
        return value.lower()

    def boolean(self, key: str, default: bool) -> bool:
        if key not in self.data:
            return default
        value = self.data[key]
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", self._field(key))
        return value

    def block(self, key: str) -> "_Block":
        return _Block(self.data.get(key, {}), self._field(key))


def _beam(block: _Block, preset: GaussianBeam) -> GaussianBeam:
    wavelength = block.number("wavelength_um", preset.wavelength, positive=True)
    energy = block.number("pulse_energy_j", preset.pulse_energy, non_negative=True)
    duration = block.number("duration_fs", preset.duration, positive=True)
    if block.has("f_number") and block.has("waist_um"):
        raise ConfigError("give either f_number or waist_um, not both", block.path)
    if block.has("f_number"):
        waist = block.number("f_number", positive=True) * wavelength
    else:
        waist = block.number("waist_um", preset.waist_w0, positive=True)
    return GaussianBeam(wavelength, energy, duration, waist, preset.polarization)


def _imaging_preset(root: _Block) -> ImagingPreset:
    preset = get_imaging_preset("table1")
    target = _beam(root.block("target"), preset.target)
    probe = _beam(root.block("probe"), preset.probe)
    crossing = root.block("crossing")
    theta = crossing.number("theta_rad", preset.crossing_angle)
    if not 0 <= theta <= math.pi:
        raise ConfigError(f"must lie in [0, π], got {theta}", "crossing.theta_rad")
    combo_name = crossing.string("combo", ("parallel", "perpendicular"), preset.combo.name.lower())
    imaging = root.block("imaging")
    return ImagingPreset(
        name=preset.name,
        target=target,
        probe=probe,
        crossing_angle=theta,
        combo=PolarizationCombo[combo_name.upper()],
        expansion=imaging.number("expansion", preset.expansion, positive=True),
        focal_length_m=imaging.number("focal_length_m", preset.focal_length_m, positive=True),
        pixel_pitch=imaging.number("pixel_pitch_um", preset.pixel_pitch, positive=True),
        half_extent=imaging.number("half_extent_um", preset.half_extent, non_negative=True),
    )


def _sensitivity_preset(root: _Block) -> SensitivityPreset:
    preset = get_sensitivity_preset("one_beam")
    block = root.block("field")
    kind = block.string("kind", ("scalar", "pseudoscalar"), preset.field.kind.value)
    light_field = LightField(
        FieldKind(kind),
        mass_m=block.number("mass_ev", preset.field.mass_m, positive=True),
        coupling_g=block.number("coupling_g", preset.field.coupling_g, non_negative=True),
        mass_scale_M=block.number("mass_scale_ev", preset.field.mass_scale_M, positive=True),
    )
    setup = root.block("setup")
    waist = setup.number("waist_m", preset.waist_w0, positive=True)
    if setup.boolean("exact_waist", False):
        if setup.has("waist_m"):
            raise ConfigError("exact_waist excludes an explicit waist_m", "setup.exact_waist")
        waist = None
    return SensitivityPreset(
        name=preset.name,
        field=light_field,
        omega_opt=setup.number("omega_ev", preset.omega_opt, positive=True),
        pulse_energy=setup.number("pulse_energy_j", preset.pulse_energy, non_negative=True),
        tau=setup.number("tau_fs", preset.tau, positive=True),
        delta_t=setup.number("delta_t_fs", preset.delta_t, positive=True),
        wavelength=setup.number("wavelength_um", preset.wavelength, positive=True),
        lens_diameter_d=setup.number("lens_diameter_m", preset.lens_diameter_d, positive=True),
        focal_length_f=setup.number("focal_length_m", preset.focal_length_f, positive=True),
        waist_w0=waist,
        delta_theta=setup.number("delta_theta_rad", preset.delta_theta, positive=True),
        focal_lengths=setup.numbers("focal_lengths_m", preset.focal_lengths, positive=True),
        lens_diameters=setup.numbers("lens_diameters_m", preset.lens_diameters, positive=True),
    )


def _fit_options(block: _Block) -> FitOptions:
    defaults = FitOptions()
    try:
        scan = ScanSpec(
            minimum=block.number("scan_min", defaults.scan.minimum),
            maximum=block.number("scan_max", defaults.scan.maximum),
            step=block.number("scan_step", defaults.scan.step, positive=True),
        )
    except DomainError as e:
        raise ConfigError(str(e), "fit.scan_max") from e
    tiles = (block.integer("tiles_x", defaults.tiles[0], minimum=1),
             block.integer("tiles_y", defaults.tiles[1], minimum=1))
    return FitOptions(
        scan=scan,
        kappa_true=block.number("kappa_true", defaults.kappa_true),
        offset_phase=block.number("offset_phase_rad", defaults.offset_phase),
        mask_sigmas=block.number("mask_sigmas", defaults.mask_sigmas, non_negative=True),
        perturbation=block.number("perturbation", defaults.perturbation, non_negative=True),
        background_rms=block.number("background_rms_rad", defaults.background_rms, non_negative=True),
        tiles=tiles,
        pixel_pitch=block.number("pixel_pitch_um", defaults.pixel_pitch, positive=True),
        half_extent=block.number("half_extent_um", defaults.half_extent, non_negative=True),
        mask_radii=block.numbers("mask_radii_um", defaults.mask_radii),
        reconstruct_background=block.boolean("reconstruct_background", defaults.reconstruct_background),
        diversity_phase=block.number("diversity_phase_rad", defaults.diversity_phase, positive=True),
    )


def parse_config(data: Mapping[str, Any], scenario: Optional[str] = None,
                 source: Optional[str] = None) -> ScenarioConfig:
    """
    Validate a configuration mapping.

    Args:
        data: Parsed TOML/JSON document
        scenario: Scenario requested on the command line; must agree with
            the file's `scenario` key when both are given
        source: File the mapping came from, for the run manifest

    Returns:
        ScenarioConfig

    Raises:
        ConfigError: with the dotted path of the offending field
    """
    root = _Block(data, "")
    version = root.integer("schema_version", SCHEMA_VERSION if not data else None)
    if version is None:
        raise ConfigError("missing schema_version", "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version}, expected {SCHEMA_VERSION}", "schema_version")

    file_scenario = root.string("scenario", SCENARIOS)
    if scenario is not None and file_scenario is not None and scenario != file_scenario:
        raise ConfigError(f"file is for scenario {file_scenario!r}, not {scenario!r}", "scenario")
    chosen = scenario or file_scenario
    if chosen is None:
        raise ConfigError("no scenario given", "scenario")
    if chosen not in SCENARIOS:
        raise ConfigError(f"expected one of {list(SCENARIOS)}, got {chosen!r}", "scenario")

    try:
        imaging_preset = _imaging_preset(root)
        sensitivity_preset = _sensitivity_preset(root)
        imaging_block = root.block("imaging")
        imaging = ImagingOptions(
            offset_phase=imaging_block.number("offset_phase_rad", 0.0),
            delta=imaging_block.number("delta_rad"),
            quadrature_order=imaging_block.integer("quadrature_order", 8, minimum=1),
        )
        fit = _fit_options(root.block("fit"))
        kinematics_block = root.block("kinematics")
        kinematics = KinematicsOptions(
            omega=kinematics_block.number("omega_ev", 1.0, positive=True),
            varthetas=kinematics_block.numbers("vartheta_rad", tuple(KINEMATICS_ANGLES), positive=True),
            theta3_fractions=kinematics_block.numbers("theta3_fraction", tuple(KINEMATICS_FRACTIONS)),
        )
    except DomainError as e:
        # preconditions of the model types surface as configuration errors
        raise ConfigError(str(e), e.operation) from e

    for i, fraction in enumerate(kinematics.theta3_fractions):
        if not 0 <= fraction < 1:
            raise ConfigError(f"must lie in [0, 1), got {fraction}", f"kinematics.theta3_fraction.{i}")
    for i, angle in enumerate(kinematics.varthetas):
        if not angle <= math.pi / 2:
            raise ConfigError(f"must not exceed π/2, got {angle}", f"kinematics.vartheta_rad.{i}")

    output = root.block("output")
    output_dir = output.data.get("directory")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("expected a path string", "output.directory")

    return ScenarioConfig(
        scenario=chosen,
        imaging_preset=imaging_preset,
        sensitivity_preset=sensitivity_preset,
        imaging=imaging,
        fit=fit,
        kinematics=kinematics,
        masses=root.block("field").numbers("masses_ev", (), positive=True),
        output_dir=output_dir,
        seed=root.integer("seed", 0),
        source=source,
        raw=dict(data),
    )


def load_config(path: str, scenario: Optional[str] = None) -> ScenarioConfig:
    """
    Read a TOML (or .json) scenario file.

    Raises:
        ConfigError: if the file cannot be read, parsed or validated
    """
    file_path = Path(path)
    try:
        text = file_path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror or e}") from e
    try:
        if file_path.suffix.lower() == ".json":
            data = json.loads(text.decode("utf-8"))
        else:
            data = tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    logger.debug(f"Loaded configuration from {path}")
    return parse_config(data, scenario, source=str(file_path))


def resolve_threads(requested: Optional[str] = None) -> int:
    """
    Worker thread count: the command-line value, else the environment
    variable, else 1. 'auto' means one per CPU.
    """
    value = requested if requested is not None else os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return 1
    if str(value).lower() == "auto":
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"expected a positive integer or 'auto', got {value!r}", "threads") from None
    if threads < 1:
        raise ConfigError(f"must be at least 1, got {threads}", "threads")
    return threads
