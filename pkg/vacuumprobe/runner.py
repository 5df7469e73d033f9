"""
Scenario orchestration: runs one configured scenario, writes its artifacts
and the run manifest.
"""
import math
import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import scipy

from vacuumprobe import __version__
from vacuumprobe.config import ScenarioConfig
from vacuumprobe.constants import photon_energy_from_wavelength
from vacuumprobe.export import emit_image, emit_line_profile, emit_table, write_grid, write_json
from vacuumprobe.imaging import (
    expanded_peak_intensity, pedestal_fraction, pixel_line_profile, render_focal_image, render_slit_pattern,
)
from vacuumprobe.models import GridSpec, PhaseMap, ProbeProfile, ScanSpec, SignalTemplate
from vacuumprobe.qed import check_crossing, n0_constant, qed_forward_background
from vacuumprobe.reconstruction import (
    Measurement, fit_kappa, mask_study, pedestal_mask_radius, reconstruct_phase_map, synthesize_image,
)
from vacuumprobe.resonance import (
    coupling_reach, cross_section_si, decay_rate, luminosity_terms, sensitivity_report, sensitivity_sweep,
    solve_kinematics,
)

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['m_eV', 'gM_inv_GeV', 'f_m', 'd_m', 'N_photons', 'yield_per_pulse', 'm_cut_eV', 'excluded_bool']
KINEMATICS_COLUMNS = ['omega_eV', 'vartheta_rad', 'theta3_rad', 'omega3_eV', 'omega4_eV', 'theta4_rad',
                      'energy_residual', 'pz_residual', 'px_residual']
MASK_STUDY_COLUMNS = ['mask_radius_um', 'kappa_hat', 'chi2_min', 'n_points']
RECONSTRUCTION_SCAN = ScanSpec(-math.pi, math.pi, 0.01)


class ScenarioRunner:
    """
    Runs one scenario into an output directory.

    Every number written comes from a library operation; the runner only
    wires inputs to operations and results to writers.
    """

    def __init__(self, config: ScenarioConfig, output_dir: str, threads: int = 1):
        self.config = config
        self.output_dir = Path(output_dir)
        self.threads = threads
        self.artifacts: List[Path] = []
        self.derived: Dict[str, Any] = {}

    def run(self) -> Dict[str, Any]:
        """
        Execute the scenario and write manifest.json.

        Returns:
            The manifest
        """
        handlers = {
            'image': self.run_image,
            'fit': self.run_fit,
            'sensitivity': self.run_sensitivity,
            'kinematics': self.run_kinematics,
            'table1': self.run_table1,
        }
        logger.info(f"Running scenario '{self.config.scenario}' into {self.output_dir}")
        handlers[self.config.scenario]()
        manifest = self.manifest()
        write_json(self.output_dir / "manifest.json", manifest)
        return manifest

    def manifest(self) -> Dict[str, Any]:
        return {
            'scenario': self.config.scenario,
            'package': {'name': 'vacuumprobe', 'version': __version__},
            'dependencies': {'numpy': np.__version__, 'scipy': scipy.__version__},
            'config_source': self.config.source,
            'config': dict(self.config.raw),
            'seed': self.config.seed,
            'threads': self.threads,
            'derived': self.derived,
            'artifacts': sorted(p.name for p in self.artifacts),
        }

    def run_image(self) -> None:
        preset = self.config.imaging_preset
        options = self.config.imaging
        profile = preset.profile(options.offset_phase)
        region = preset.signal_region()
        delta = preset.delta if options.delta is None else options.delta
        grid = preset.grid()

        image = render_focal_image(profile, region, delta, grid, options.quadrature_order, self.threads)
        self.artifacts += emit_image(self.output_dir, "focal_image", image)
        self._emit_profiles("profile", image)
        if delta != 0:
            pedestal = render_focal_image(profile, region, 0.0, grid, options.quadrature_order, self.threads)
            self._emit_profiles("pedestal_profile", pedestal)
            self.derived['pedestal_total_photons'] = pedestal.total

        pattern = render_slit_pattern(region.half_width_mu, region.half_height_nu, grid, profile.frequency_scale)
        self.artifacts.append(write_grid(self.output_dir / "wire_pattern.csv", grid.x_centers, grid.y_centers,
                                         pattern))
        self.derived.update({
            'delta_rad': delta,
            'provenance': image.provenance.value,
            'total_photons_on_grid': image.total,
            'input_photons': profile.total_photons,
            'coarse_grid': image.coarse_grid,
            'focal_waist_um': profile.focal_waist,
            'signal_region': region.as_dict(),
        })

    def _emit_profiles(self, stem: str, image) -> None:
        for axis in ('x', 'y'):
            positions, values = pixel_line_profile(image, axis)
            metadata = {'axis': axis, 'delta_rad': image.delta, 'provenance': image.provenance.value,
                        'pixel_pitch_um': image.pixel_pitch}
            self.artifacts += emit_line_profile(self.output_dir, f"{stem}_{axis}", positions, values, metadata)

    def run_fit(self) -> None:
        preset = self.config.imaging_preset
        options = self.config.fit
        profile = preset.profile(options.offset_phase)
        region = preset.signal_region()
        delta = preset.delta if self.config.imaging.delta is None else self.config.imaging.delta

        tiles_x, tiles_y = options.tiles
        phase_map = PhaseMap.grid(tiles_x, tiles_y, region.half_width_mu, region.half_height_nu, region.center)
        template = SignalTemplate.uniform(phase_map, delta, note="crossing footprint")
        background_seed, noise_seed, reference_seed = np.random.SeedSequence(self.config.seed).spawn(3)
        if options.background_rms > 0:
            rng = np.random.Generator(np.random.PCG64(background_seed))
            phase_map = phase_map.with_phases(options.background_rms * rng.standard_normal(phase_map.n_regions))

        grid = GridSpec.covering(options.pixel_pitch, options.half_extent)
        measured = synthesize_image(profile, phase_map, template, options.kappa_true, grid,
                                    options.perturbation, noise_seed)
        mask_radius = pedestal_mask_radius(profile, options.mask_sigmas)
        if options.reconstruct_background:
            phase_map = self._reconstruct_background(profile, phase_map, grid, mask_radius, reference_seed)
        result = fit_kappa(measured, phase_map, template, profile, options.scan, mask_radius)

        self.artifacts += emit_image(self.output_dir, "synthetic_image", measured)
        self.artifacts.append(write_json(self.output_dir / "fit_result.json",
                                         dict(result.as_dict(), kappa_true=options.kappa_true,
                                              mask_radius_um=mask_radius, delta_rad=delta,
                                              offset_phase_rad=options.offset_phase)))
        self.artifacts.append(write_json(self.output_dir / "phase_map.json", {'regions': phase_map.as_records()}))
        self.artifacts.append(write_json(self.output_dir / "template.json",
                                         {'regions': template.as_records(), 'note': template.note}))
        if options.mask_radii:
            rows = mask_study(measured, phase_map, template, profile, options.mask_radii, options.scan)
            self.artifacts += emit_table(self.output_dir, "mask_study", MASK_STUDY_COLUMNS, rows,
                                         {'units': {'mask_radius_um': 'um'}, 'kappa_true': options.kappa_true})
        self.derived.update({'kappa_hat': result.kappa_hat, 'chi2_min': result.chi2_min,
                             'on_boundary': result.on_boundary, 'n_sampling_points': result.n_sampling_points})

    def _reconstruct_background(self, profile: ProbeProfile, truth: PhaseMap, grid: GridSpec, mask_radius: float,
                                seed: np.random.SeedSequence) -> PhaseMap:
        """
        Replace the known background map by one recovered from two reference
        images without the target pulse, the second with a known phase added
        to every other region.
        """
        options = self.config.fit
        n_regions = truth.n_regions
        empty = SignalTemplate(list(truth.regions), np.zeros(n_regions))
        diversity = PhaseMap(list(truth.regions), np.where(np.arange(n_regions) % 2 == 0, options.diversity_phase, 0.0))
        plain_seed, diverse_seed = seed.spawn(2)
        plain = synthesize_image(profile, truth, empty, 0.0, grid, options.perturbation, plain_seed)
        diverse = synthesize_image(profile, truth.with_phases(truth.phases + diversity.phases), empty, 0.0, grid,
                                   options.perturbation, diverse_seed)
        recovered = reconstruct_phase_map([Measurement(plain), Measurement(diverse, diversity)], truth.regions,
                                          profile, RECONSTRUCTION_SCAN, mask_radius=mask_radius)
        anchored = truth.phases - truth.phases[0]
        error = float(np.max(np.abs(recovered.phases - anchored)))
        logger.info(f"Recovered {n_regions} background phases, largest deviation {error:.3g} rad")
        self.artifacts.append(write_json(self.output_dir / "reconstructed_phase_map.json",
                                         {'regions': recovered.as_records(),
                                          'complement_phase': recovered.complement_phase,
                                          'diversity_phase_rad': options.diversity_phase}))
        self.derived['reconstruction_max_error_rad'] = error
        return recovered

    def run_sensitivity(self) -> None:
        preset = self.config.sensitivity_preset
        setup = preset.setup()
        report = sensitivity_report(setup, preset.omega_opt, preset.field, preset.lens_diameter_d,
                                    preset.delta_theta)
        terms = luminosity_terms(setup)
        background = cross_section_si(qed_forward_background(preset.omega_opt, report.vartheta_r))
        reach = coupling_reach(setup, preset.omega_opt, preset.field.kind, preset.field.mass_m,
                               report.delta_theta)
        payload = dict(
            report.as_dict(),
            inputs={
                'kind': preset.field.kind.value,
                'mass_eV': preset.field.mass_m,
                'coupling_g': preset.field.coupling_g,
                'mass_scale_eV': preset.field.mass_scale_M,
                'omega_eV': preset.omega_opt,
                'n_photons': setup.n_photons,
                'tau_fs': setup.tau,
                'delta_t_fs': setup.delta_t,
                'wavelength_um': setup.wavelength,
                'focal_length_m': setup.focal_length_f,
                'lens_diameter_m': preset.lens_diameter_d,
                'waist_m': setup.waist_w0,
                'rayleigh_m': setup.rayleigh_zR,
            },
            luminosity_terms=terms,
            decay_rate_eV=decay_rate(preset.field),
            qed_background_m2=background,
            coupling_reach_inv_eV=reach,
        )
        self.artifacts.append(write_json(self.output_dir / "sensitivity_report.json", payload))

        points = sensitivity_sweep(setup.n_photons, setup.tau, setup.delta_t, setup.wavelength, preset.omega_opt,
                                   self.config.fields(), preset.focal_lengths, preset.lens_diameters,
                                   threads=self.threads)
        metadata = {'units': {'m_eV': 'eV', 'gM_inv_GeV': 'GeV^-1', 'f_m': 'm', 'd_m': 'm',
                              'yield_per_pulse': 'per pulse per sr', 'm_cut_eV': 'eV'},
                    'omega_eV': preset.omega_opt}
        self.artifacts += emit_table(self.output_dir, "sensitivity_sweep", SWEEP_COLUMNS,
                                     [p.as_row() for p in points], metadata)
        self.derived.update({'required_photons_N1': report.required_photons_N1, 'm_cut_eV': report.m_cut,
                             'excluded': report.exclusion_flag})

    def run_kinematics(self) -> None:
        options = self.config.kinematics
        rows = []
        for vartheta in options.varthetas:
            for fraction in options.theta3_fractions:
                kinematics = solve_kinematics(options.omega, vartheta, fraction * vartheta)
                energy, pz, px = kinematics.residuals()
                rows.append({
                    'omega_eV': kinematics.omega, 'vartheta_rad': kinematics.vartheta,
                    'theta3_rad': kinematics.theta3, 'omega3_eV': kinematics.omega3,
                    'omega4_eV': kinematics.omega4, 'theta4_rad': kinematics.theta4,
                    'energy_residual': energy, 'pz_residual': pz, 'px_residual': px,
                })
        self.artifacts += emit_table(self.output_dir, "kinematics", KINEMATICS_COLUMNS, rows,
                                     {'units': {'omega': 'eV', 'angles': 'rad', 'residuals': 'relative to 2ω'}})
        self.derived['max_abs_residual'] = max(
            (max(abs(r['energy_residual']), abs(r['pz_residual']), abs(r['px_residual'])) for r in rows),
            default=0.0)

    def run_table1(self) -> None:
        preset = self.config.imaging_preset
        profile = preset.profile()
        report = {
            'target': {
                'duration_fs': preset.target.duration,
                'pulse_energy_J': preset.target.pulse_energy,
                'photons': preset.target.photons,
                'wavelength_um': preset.target.wavelength,
                'waist_um': preset.target.waist_w0,
                'rayleigh_um': preset.target.rayleigh_length,
                'pulse_length_um': preset.target.pulse_length,
            },
            'probe': {
                'duration_fs': preset.probe.duration,
                'pulse_energy_J': preset.probe.pulse_energy,
                'photons': preset.probe.photons,
                'wavelength_um': preset.probe.wavelength,
                'waist_um': preset.probe.waist_w0,
                'rayleigh_um': preset.probe.rayleigh_length,
                'photon_energy_eV': photon_energy_from_wavelength(preset.probe.wavelength),
            },
            'qed': {
                'zeta': preset.combo.zeta,
                'crossing_angle_rad': preset.crossing_angle,
                'n0_um3_per_J': n0_constant(),
                'delta_n': preset.delta_n,
                'delta_rad': preset.delta,
                'crossing_valid': check_crossing(preset.crossing),
            },
            'signal_path': {
                'expansion': preset.expansion,
                'expanded_waist_um': preset.expanded_waist,
                'focal_length_m': preset.focal_length_m,
                'peak_intensity_photons_per_um2': expanded_peak_intensity(preset.probe.photons,
                                                                          preset.expanded_waist),
                'focal_waist_um': profile.focal_waist,
                'pedestal_fraction_20um_square': pedestal_fraction(profile, 10.0),
                'signal_region': preset.signal_region().as_dict(),
            },
        }
        self.artifacts.append(write_json(self.output_dir / "table1.json", report))
        self.derived.update({'delta_rad': preset.delta, 'delta_n': preset.delta_n})
