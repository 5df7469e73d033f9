"""
Tests for the reconstruction module.
"""
import math
import unittest

import numpy as np

from vacuumprobe.exceptions import DomainError
from vacuumprobe.imaging import c_bkg, c_sig, focal_intensity
from vacuumprobe.models import GridSpec, PhaseMap, ProbeProfile, Provenance, RectRegion, ScanSpec, SignalTemplate
from vacuumprobe.reconstruction import (
    Measurement, chi_square, chi_square_values, fit_kappa, mask_study, model_intensity, pedestal_mask_radius,
    reconstruct_phase_map, region_integral, synthesize_image,
)


def small_profile(offset_phase: float = 0.0) -> ProbeProfile:
    """λ = 0.8 μm, f = 1 m, 1 mm waist: a 255 μm focal spot sampled on 200 μm pixels."""
    return ProbeProfile(peak_amplitude_A0p=1.0e3, gaussian_a=1.0e-6, wavelength_p=0.8, focal_length_fp=1.0,
                        offset_phase=offset_phase)


GRID = GridSpec(200.0, 64, 64)


class TestRegionModel(unittest.TestCase):
    """Test cases for the region decomposition of the focal amplitude."""

    def setUp(self):
        self.profile = small_profile()
        k = self.profile.frequency_scale
        self.omega_x = k * np.linspace(-3000.0, 3000.0, 13)
        self.omega_y = k * np.linspace(-1500.0, 2500.0, 13)

    def test_centered_region_matches_c_sig(self):
        """Test the region transform of a centered rectangle is C_sig."""
        a = self.profile.gaussian_a
        value = region_integral(RectRegion(300.0, 100.0), self.omega_x, self.omega_y, a)
        expected = c_sig(self.omega_x, self.omega_y, 300.0, 100.0, a)
        scale = np.max(np.abs(expected))
        np.testing.assert_allclose(value.real, expected, rtol=1e-10, atol=1e-12 * scale)
        np.testing.assert_allclose(value.imag, 0.0, atol=1e-12 * scale)

    def test_tiling_is_complete(self):
        """Test that a tiling far beyond the beam sums to the full transform."""
        a = self.profile.gaussian_a
        tiles = PhaseMap.grid(4, 4, 1.0e4, 1.0e4)
        total = sum(region_integral(r, self.omega_x, self.omega_y, a) for r in tiles.regions)
        expected = c_bkg(self.omega_x, self.omega_y, a)
        np.testing.assert_allclose(total.real, expected, rtol=1e-10, atol=1e-12 * np.max(expected))
        np.testing.assert_allclose(total.imag, 0.0, atol=1e-12 * np.max(expected))

    def test_model_reduces_to_focal_intensity(self):
        """Test one centered region with zero background reproduces the imaging formula."""
        profile = small_profile(math.pi / 2)
        phase_map = PhaseMap.grid(1, 1, 300.0, 100.0)
        template = SignalTemplate.uniform(phase_map, 0.05)
        model = model_intensity(phase_map, template, 1.0, self.omega_x, self.omega_y, profile)
        expected = focal_intensity(self.omega_x, self.omega_y, 0.05, profile, RectRegion(300.0, 100.0))
        np.testing.assert_allclose(model, expected, rtol=1e-9, atol=1e-12 * np.max(expected))

    def test_misaligned_template(self):
        """Test that a template on other regions is rejected."""
        phase_map = PhaseMap.grid(2, 2, 300.0, 300.0)
        template = SignalTemplate.uniform(PhaseMap.grid(1, 1, 300.0, 300.0), 0.05)
        with self.assertRaises(DomainError):
            model_intensity(phase_map, template, 1.0, self.omega_x, self.omega_y, self.profile)

    def test_global_phase_invariance(self):
        """Test a global phase on the map leaves the model intensity unchanged."""
        rng = np.random.Generator(np.random.PCG64(3))
        phase_map = PhaseMap.grid(4, 4, 1200.0, 1200.0, phases=0.3 * rng.standard_normal(16))
        template = SignalTemplate.uniform(phase_map, 0.05)
        profile = small_profile(math.pi / 2)
        base = model_intensity(phase_map, template, 1.0, self.omega_x, self.omega_y, profile)
        rotated = model_intensity(phase_map.shifted(0.7), template, 1.0, self.omega_x, self.omega_y, profile)
        np.testing.assert_allclose(rotated, base, rtol=1e-10, atol=1e-12 * np.max(base))

    def test_chi_square_values(self):
        """Test the χ² statistic and its minimum sample count."""
        measured = np.array([1.0, 2.0, 3.0])
        self.assertEqual(chi_square_values(measured, measured), 0.0)
        model = np.array([1.0, 2.0, 1.0])
        self.assertAlmostEqual(float(chi_square_values(measured, model)), 0.5 * (4.0 / 4.0))
        columns = chi_square_values(measured, np.stack([measured, model], axis=1))
        np.testing.assert_allclose(columns, [0.0, 0.5])
        self.assertEqual(float(chi_square_values(np.zeros(2), np.zeros(2))), 0.0)
        with self.assertRaises(DomainError):
            chi_square_values(np.array([1.0]), np.array([1.0]))


class TestKappaFit(unittest.TestCase):
    """Test cases for the κ fit on synthetic images."""

    def setUp(self):
        self.phase_map = PhaseMap.grid(1, 1, 300.0, 100.0)
        self.template = SignalTemplate.uniform(self.phase_map, 0.05)

    def test_chi_square_vanishes_at_truth(self):
        """Test χ² is zero at the injected κ and positive elsewhere."""
        profile = small_profile(math.pi / 2)
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        self.assertAlmostEqual(chi_square(measured, self.phase_map, self.template, 1.0, profile), 0.0, places=10)
        self.assertGreater(chi_square(measured, self.phase_map, self.template, 2.0, profile), 1e-6)

    def test_fit_with_offset(self):
        """Test κ recovery over a symmetric scan at offset π/2."""
        profile = small_profile(math.pi / 2)
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        result = fit_kappa(measured, self.phase_map, self.template, profile, ScanSpec(-2.0, 2.0, 0.01))
        self.assertAlmostEqual(result.kappa_hat, 1.0, delta=1e-5)
        self.assertFalse(result.on_boundary)
        self.assertGreater(result.n_sampling_points, 4000)
        self.assertAlmostEqual(result.chi2_min, 0.0, places=10)

    def test_fit_without_offset(self):
        """Test κ recovery at offset 0 on a positive scan."""
        profile = small_profile()
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        result = fit_kappa(measured, self.phase_map, self.template, profile, ScanSpec(0.0, 2.0, 0.01))
        self.assertAlmostEqual(result.kappa_hat, 1.0, delta=1e-5)

    def test_sign_degeneracy(self):
        """Test κ and -κ are indistinguishable at offset 0 but not at offset π/2."""
        profile = small_profile()
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        self.assertAlmostEqual(chi_square(measured, self.phase_map, self.template, -1.0, profile), 0.0, places=10)

        shifted = small_profile(math.pi / 2)
        measured = synthesize_image(shifted, self.phase_map, self.template, 1.0, GRID)
        self.assertGreater(chi_square(measured, self.phase_map, self.template, -1.0, shifted), 1e-6)

    def test_boundary_minimum_is_flagged(self):
        """Test a minimum outside the scan range is reported on the boundary."""
        profile = small_profile(math.pi / 2)
        measured = synthesize_image(profile, self.phase_map, self.template, 1.5, GRID)
        with self.assertLogs('vacuumprobe.reconstruction', level='WARNING'):
            result = fit_kappa(measured, self.phase_map, self.template, profile, ScanSpec(-1.0, 1.0, 0.01))
        self.assertTrue(result.on_boundary)
        self.assertAlmostEqual(result.kappa_hat, 1.0, delta=1e-3)

    def test_fit_with_background_map(self):
        """Test κ recovery with a known random background phase map."""
        profile = small_profile(math.pi / 2)
        rng = np.random.Generator(np.random.PCG64(11))
        phase_map = PhaseMap.grid(4, 4, 1200.0, 1200.0, phases=1e-2 * rng.standard_normal(16))
        template = SignalTemplate.uniform(phase_map, 0.05)
        measured = synthesize_image(profile, phase_map, template, 1.0, GRID)
        result = fit_kappa(measured, phase_map, template, profile)
        self.assertAlmostEqual(result.kappa_hat, 1.0, delta=1e-5)

    def test_mask_study(self):
        """Test larger masks keep fewer points and the same κ."""
        profile = small_profile(math.pi / 2)
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        rows = mask_study(measured, self.phase_map, self.template, profile, [300.0, 1000.0, 2000.0])
        self.assertEqual([row['mask_radius_um'] for row in rows], [300.0, 1000.0, 2000.0])
        points = [row['n_points'] for row in rows]
        self.assertEqual(points, sorted(points, reverse=True))
        self.assertGreater(points[0], points[-1])
        for row in rows:
            self.assertAlmostEqual(row['kappa_hat'], 1.0, delta=1e-5)

    def test_default_mask_radius(self):
        """Test the default mask excludes five pedestal standard deviations."""
        profile = small_profile()
        self.assertAlmostEqual(pedestal_mask_radius(profile), 2.5 * profile.focal_waist)

    def test_empty_sampling_set(self):
        """Test that a mask covering the whole image raises DomainError."""
        profile = small_profile()
        measured = synthesize_image(profile, self.phase_map, self.template, 1.0, GridSpec(200.0, 4, 4))
        with self.assertRaises(DomainError):
            chi_square(measured, self.phase_map, self.template, 1.0, profile, mask_radius=1.0e5)

    def test_seeded_perturbation(self):
        """Test that perturbations are reproducible for a seed."""
        profile = small_profile()
        first = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID, 1e-3, seed=5)
        second = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID, 1e-3, seed=5)
        other = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID, 1e-3, seed=6)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertFalse(np.array_equal(first.values, other.values))
        self.assertTrue(np.all(first.values >= 0))

    def test_null_injection(self):
        """Test an image without signal gives κ̂ ≈ 0."""
        profile = small_profile(math.pi / 2)
        measured = synthesize_image(profile, self.phase_map, self.template, 0.0, GRID)
        result = fit_kappa(measured, self.phase_map, self.template, profile, ScanSpec(-2.0, 2.0, 0.01))
        self.assertAlmostEqual(result.kappa_hat, 0.0, delta=1e-5)
        self.assertFalse(result.on_boundary)

    def test_synthetic_provenance(self):
        """Test the offset phase alone marks a synthetic image as carrying an embedded phase."""
        tiny = GridSpec(200.0, 4, 4)
        offset = synthesize_image(small_profile(math.pi / 2), self.phase_map, self.template, 0.0, tiny)
        self.assertEqual(offset.provenance, Provenance.WITH_SIGNAL)
        plain = synthesize_image(small_profile(), self.phase_map, self.template, 0.0, tiny)
        self.assertEqual(plain.provenance, Provenance.PEDESTAL_ONLY)

    def test_perturbed_chi_square_value(self):
        """Test χ² of a seeded 1e-3 perturbation against the statistic evaluated by hand."""
        profile = small_profile(math.pi / 2)
        exact = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID)
        noisy = synthesize_image(profile, self.phase_map, self.template, 1.0, GRID, 1e-3, seed=5)
        x, y = np.meshgrid(GRID.x_centers, GRID.y_centers)
        keep = np.hypot(x, y) > pedestal_mask_radius(profile)
        m, b = noisy.values[keep], exact.values[keep]
        total = m + b
        terms = np.where(total > 0, (m - b) ** 2 / np.where(total > 0, total, 1.0), 0.0)
        expected = float(terms.sum() / (m.size - 1))
        value = chi_square(noisy, self.phase_map, self.template, 1.0, profile)
        self.assertGreater(value, 0.0)
        self.assertAlmostEqual(value / expected, 1.0, delta=1e-8)
        # relative noise σ gives χ² ≈ σ² <b> / 2
        self.assertTrue(0.1 < value / (0.5e-6 * np.mean(b)) < 10.0)

    def test_fitted_chi_square_never_exceeds_null(self):
        """Test the χ² minimum over κ is at most χ² at κ = 0."""
        profile = small_profile(math.pi / 2)
        for seed, kappa in ((1, 1.0), (2, 0.0), (3, -0.5)):
            measured = synthesize_image(profile, self.phase_map, self.template, kappa, GRID, 1e-2, seed=seed)
            result = fit_kappa(measured, self.phase_map, self.template, profile, ScanSpec(-2.0, 2.0, 0.01))
            null = chi_square(measured, self.phase_map, self.template, 0.0, profile)
            self.assertLessEqual(result.chi2_min, null * (1.0 + 1e-12))


class TestPhaseMapReconstruction(unittest.TestCase):
    """Test cases for recovering background phase maps."""

    def setUp(self):
        self.profile = small_profile()
        self.regions = PhaseMap.grid(4, 4, 1200.0, 1200.0).regions
        self.zero_template = SignalTemplate(list(self.regions), np.zeros(16))
        # π/2 on the two left columns
        self.diversity = PhaseMap(list(self.regions),
                                  np.array([math.pi / 2 if k % 4 < 2 else 0.0 for k in range(16)]))

    def measure(self, phases: np.ndarray):
        truth = PhaseMap(list(self.regions), phases)
        plain = synthesize_image(self.profile, truth, self.zero_template, 0.0, GRID)
        diverse = synthesize_image(self.profile, truth.with_phases(phases + self.diversity.phases),
                                   self.zero_template, 0.0, GRID)
        return [Measurement(plain), Measurement(diverse, self.diversity)]

    def test_flat_map(self):
        """Test a flat map is recovered as flat."""
        result = reconstruct_phase_map(self.measure(np.zeros(16)), self.regions, self.profile,
                                       ScanSpec(-1.0, 1.0, 0.01))
        np.testing.assert_allclose(result.phases, 0.0, atol=1e-4)
        self.assertEqual(result.phases[0], 0.0)

    def test_bump(self):
        """Test a single raised region is located and recovered."""
        truth = np.zeros(16)
        truth[5] = 0.3
        result = reconstruct_phase_map(self.measure(truth), self.regions, self.profile, ScanSpec(-1.0, 1.0, 0.01))
        self.assertEqual(int(np.argmax(result.phases)), 5)
        np.testing.assert_allclose(result.phases, truth, atol=1e-5)

    def test_small_bump(self):
        """Test a 1e-4 rad bump is recovered within the scan resolution."""
        truth = np.zeros(16)
        truth[5] = 1e-4
        scan = ScanSpec(-0.01, 0.01, 1e-4)
        with self.assertLogs('vacuumprobe.reconstruction', level='DEBUG') as logs:
            result = reconstruct_phase_map(self.measure(truth), self.regions, self.profile, scan)
        self.assertEqual(int(np.argmax(result.phases)), 5)
        np.testing.assert_allclose(result.phases, truth, atol=0.1 * scan.step)
        self.assertFalse([line for line in logs.output if line.startswith("WARNING")])

    def test_random_map(self):
        """Test a random map with 1e-3 rad RMS is recovered within three scan steps."""
        rng = np.random.Generator(np.random.PCG64(2024))
        truth = 1e-3 * rng.standard_normal(16)
        scan = ScanSpec(-0.01, 0.01, 1e-4)
        result = reconstruct_phase_map(self.measure(truth), self.regions, self.profile, scan)
        self.assertLess(float(np.max(np.abs(result.phases - (truth - truth[0])))), 3 * scan.step)

    def test_converged_map_logs_no_warning(self):
        """Test an exactly fitting map stops without a convergence warning."""
        with self.assertLogs('vacuumprobe.reconstruction', level='DEBUG') as logs:
            reconstruct_phase_map(self.measure(np.zeros(16)), self.regions, self.profile, ScanSpec(-1.0, 1.0, 0.01))
        self.assertFalse([line for line in logs.output if line.startswith("WARNING")])
        sweeps = [line for line in logs.output if "Sweep" in line]
        self.assertLess(len(sweeps), 20)

    def test_twin_ambiguity_is_rejected(self):
        """Test a set without phase diversity raises DomainError."""
        truth = np.zeros(16)
        truth[5] = 0.3
        plain = self.measure(truth)[0]
        with self.assertRaises(DomainError):
            reconstruct_phase_map([plain], self.regions, self.profile, ScanSpec(-1.0, 1.0, 0.01))
        uniform = PhaseMap(list(self.regions), np.full(16, 0.5), complement_phase=0.5)
        with self.assertRaises(DomainError):
            reconstruct_phase_map([plain, Measurement(plain.image, uniform)], self.regions, self.profile,
                                  ScanSpec(-1.0, 1.0, 0.01))

    def test_underdetermined(self):
        """Test fewer sampling points than regions raises DomainError."""
        image = synthesize_image(self.profile, PhaseMap(list(self.regions), np.zeros(16)), self.zero_template, 0.0,
                                 GridSpec(200.0, 2, 2))
        with self.assertRaises(DomainError):
            reconstruct_phase_map([Measurement(image)], self.regions, self.profile, mask_radius=0.0)

    def test_invalid_inputs(self):
        """Test empty inputs and misaligned diversity maps raise DomainError."""
        measurements = self.measure(np.zeros(16))
        with self.assertRaises(DomainError):
            reconstruct_phase_map(measurements, [], self.profile)
        with self.assertRaises(DomainError):
            reconstruct_phase_map([], self.regions, self.profile)
        wrong = Measurement(measurements[0].image, PhaseMap.grid(2, 2, 1200.0, 1200.0))
        with self.assertRaises(DomainError):
            reconstruct_phase_map([wrong], self.regions, self.profile)


if __name__ == '__main__':
    unittest.main()
