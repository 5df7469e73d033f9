"""
Tests for the command-line interface and scenario runner.
"""
import json
import tempfile
import unittest
from contextlib import redirect_stdout
from io import StringIO
from pathlib import Path

from vacuumprobe import __version__
from vacuumprobe.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO, EXIT_OK, main, setup_argument_parser

SMALL_IMAGE = """schema_version = 1
scenario = "image"

[imaging]
half_extent_um = 500.0
quadrature_order = 4
"""

SMALL_FIT = """schema_version = 1
scenario = "fit"

[fit]
half_extent_um = 500.0
perturbation = 0.05
scan_step = 0.05
mask_radii_um = [20.0, 100.0]
"""

SMALL_FIT_RECONSTRUCTION = """schema_version = 1
scenario = "fit"

[fit]
half_extent_um = 500.0
scan_step = 0.05
tiles_x = 2
background_rms_rad = 0.05
reconstruct_background = true
"""


class TestCommandLine(unittest.TestCase):
    """Test cases for running scenarios end to end."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, name: str, text: str) -> str:
        path = self.directory / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def run_scenario(self, *args) -> int:
        with self.assertLogs("vacuumprobe", level="INFO"):
            return main(list(args))

    def read_bytes(self, directory: Path):
        return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}

    def test_argument_parser(self):
        """Test that every scenario is a subcommand with the common options."""
        args = setup_argument_parser().parse_args(["fit", "--seed", "4", "--threads", "auto"])
        self.assertEqual(args.scenario, "fit")
        self.assertEqual(args.seed, 4)
        self.assertEqual(args.threads, "auto")

    def test_version(self):
        """Test the version flag."""
        stdout = StringIO()
        with redirect_stdout(stdout), self.assertRaises(SystemExit) as context:
            main(["--version"])
        self.assertEqual(context.exception.code, 0)
        self.assertIn(__version__, stdout.getvalue())

    def test_table1(self):
        """Test the parameter table and manifest."""
        out = self.directory / "table1"
        self.assertEqual(self.run_scenario("table1", "--out", str(out)), EXIT_OK)
        report = json.loads((out / "table1.json").read_text(encoding="utf-8"))
        self.assertAlmostEqual(report['qed']['delta_rad'] / 3.17e-7, 1.0, delta=0.01)
        self.assertAlmostEqual(report['signal_path']['peak_intensity_photons_per_um2'] / 1.96e11, 1.0, delta=0.02)
        self.assertGreaterEqual(report['signal_path']['pedestal_fraction_20um_square'], 0.99)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest['scenario'], "table1")
        self.assertEqual(manifest['artifacts'], ["table1.json"])
        self.assertEqual(manifest['package']['version'], __version__)
        self.assertIsNone(manifest['config_source'])

    def test_table1_is_reproducible(self):
        """Test byte-identical reruns of the parameter table."""
        first, second = self.directory / "a", self.directory / "b"
        self.assertEqual(self.run_scenario("table1", "--out", str(first)), EXIT_OK)
        self.assertEqual(self.run_scenario("table1", "--out", str(second)), EXIT_OK)
        self.assertEqual(self.read_bytes(first), self.read_bytes(second))

    def test_image_is_reproducible(self):
        """Test byte-identical reruns of the image scenario."""
        config = self.write_config("image.toml", SMALL_IMAGE)
        first, second = self.directory / "a", self.directory / "b"
        self.assertEqual(self.run_scenario("image", "--config", config, "--out", str(first)), EXIT_OK)
        self.assertEqual(self.run_scenario("image", "--config", config, "--out", str(second)), EXIT_OK)
        first_files = self.read_bytes(first)
        self.assertIn("focal_image.csv", first_files)
        self.assertEqual(first_files, self.read_bytes(second))

    def test_config_dates_in_manifest(self):
        """Test that TOML dates in the configuration are echoed as ISO strings."""
        config = self.write_config("dated.toml", "run_date = 2024-01-01T09:30:00Z\n" + SMALL_IMAGE)
        out = self.directory / "dated"
        self.assertEqual(self.run_scenario("image", "--config", config, "--out", str(out)), EXIT_OK)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest['config']['run_date'], "2024-01-01T09:30:00+00:00")

    def test_kinematics_is_reproducible(self):
        """Test byte-identical reruns of the kinematics table."""
        first, second = self.directory / "a", self.directory / "b"
        self.assertEqual(self.run_scenario("kinematics", "--out", str(first)), EXIT_OK)
        self.assertEqual(self.run_scenario("kinematics", "--out", str(second)), EXIT_OK)
        self.assertEqual(self.read_bytes(first), self.read_bytes(second))
        manifest = json.loads((first / "manifest.json").read_text(encoding="utf-8"))
        self.assertLess(manifest['derived']['max_abs_residual'], 1e-12)
        lines = (first / "kinematics.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(lines), 1 + 6 * 4)

    def test_sensitivity_is_reproducible(self):
        """Test the sensitivity report and byte-identical reruns."""
        first, second = self.directory / "a", self.directory / "b"
        self.assertEqual(self.run_scenario("sensitivity", "--out", str(first)), EXIT_OK)
        self.assertEqual(self.run_scenario("sensitivity", "--out", str(second), "--threads", "3"), EXIT_OK)
        first_files, second_files = self.read_bytes(first), self.read_bytes(second)
        for name in ("sensitivity_report.json", "sensitivity_sweep.csv", "sensitivity_sweep.json"):
            self.assertEqual(first_files[name], second_files[name])
        report = json.loads(first_files["sensitivity_report.json"])
        self.assertTrue(report['excluded'])
        sweep = first_files["sensitivity_sweep.csv"].decode("utf-8").splitlines()
        self.assertEqual(sweep[0], "m_eV,gM_inv_GeV,f_m,d_m,N_photons,yield_per_pulse,m_cut_eV,excluded_bool")
        self.assertEqual(len(sweep), 1 + 5)

    def test_image(self):
        """Test the image scenario on a small grid."""
        config = self.write_config("image.toml", SMALL_IMAGE)
        out = self.directory / "image"
        self.assertEqual(self.run_scenario("image", "--config", config, "--out", str(out)), EXIT_OK)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest['config_source'], config)
        self.assertEqual(manifest['artifacts'], sorted(manifest['artifacts']))
        for name in ("focal_image.csv", "focal_image.json", "profile_x.csv", "profile_y.json",
                     "pedestal_profile_x.csv", "wire_pattern.csv"):
            self.assertIn(name, manifest['artifacts'])
            self.assertTrue((out / name).exists())
        header = (out / "focal_image.csv").read_text(encoding="utf-8").splitlines()[0].split(",")
        self.assertEqual(header[0], "y_um")
        self.assertEqual(len(header), 1 + 21)
        self.assertEqual(manifest['derived']['provenance'], "with_signal")

    def test_fit_seed(self):
        """Test that the seed fixes the synthetic measurement."""
        config = self.write_config("fit.toml", SMALL_FIT)
        runs = {}
        for name, seed in (("a", "1"), ("b", "1"), ("c", "2")):
            out = self.directory / name
            self.assertEqual(self.run_scenario("fit", "--config", config, "--out", str(out), "--seed", seed), EXIT_OK)
            runs[name] = self.read_bytes(out)
        self.assertEqual(runs['a']["synthetic_image.csv"], runs['b']["synthetic_image.csv"])
        self.assertEqual(runs['a']["fit_result.json"], runs['b']["fit_result.json"])
        self.assertNotEqual(runs['a']["synthetic_image.csv"], runs['c']["synthetic_image.csv"])
        self.assertIn("mask_study.csv", runs['a'])
        result = json.loads(runs['a']["fit_result.json"])
        self.assertIn('kappa_hat', result)
        self.assertEqual(result['kappa_true'], 1.0)

    def test_fit_with_reconstructed_background(self):
        """Test the fit scenario recovering its background map from reference images first."""
        config = self.write_config("reconstruct.toml", SMALL_FIT_RECONSTRUCTION)
        out = self.directory / "reconstruct"
        self.assertEqual(self.run_scenario("fit", "--config", config, "--out", str(out), "--seed", "3"), EXIT_OK)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertIn("reconstructed_phase_map.json", manifest['artifacts'])
        self.assertLess(manifest['derived']['reconstruction_max_error_rad'], 1e-4)
        recovered = json.loads((out / "reconstructed_phase_map.json").read_text(encoding="utf-8"))
        self.assertEqual(len(recovered['regions']), 2)
        self.assertEqual(recovered['regions'][0]['phase'], 0.0)
        self.assertIn('kappa_hat', json.loads((out / "fit_result.json").read_text(encoding="utf-8")))

    def test_configuration_errors(self):
        """Test exit code 2 for invalid configurations."""
        bad_version = self.write_config("bad.toml", "schema_version = 2\n")
        out = str(self.directory / "out")
        self.assertEqual(self.run_scenario("image", "--config", bad_version, "--out", out), EXIT_CONFIG)
        missing = str(self.directory / "missing.toml")
        self.assertEqual(self.run_scenario("image", "--config", missing, "--out", out), EXIT_CONFIG)
        self.assertEqual(self.run_scenario("fit", "--seed", "-1", "--out", out), EXIT_CONFIG)
        self.assertEqual(self.run_scenario("table1", "--threads", "none", "--out", out), EXIT_CONFIG)
        self.assertFalse((self.directory / "out").exists())

    def test_domain_error(self):
        """Test exit code 3 when a setup fails its preconditions at run time."""
        config = self.write_config("short.toml", "schema_version = 1\n\n[setup]\ndelta_t_fs = 1e-4\n")
        out = str(self.directory / "out")
        self.assertEqual(self.run_scenario("sensitivity", "--config", config, "--out", out), EXIT_DOMAIN)

    def test_output_error(self):
        """Test exit code 4 when the output directory cannot be created."""
        blocker = self.directory / "file"
        blocker.write_text("x", encoding="utf-8")
        self.assertEqual(self.run_scenario("table1", "--out", str(blocker / "out")), EXIT_IO)


if __name__ == "__main__":
    unittest.main()
