"""
Tests for the export module.
"""
import json
import math
import datetime
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from vacuumprobe.exceptions import ArtifactIOError
from vacuumprobe.export import emit_line_profile, emit_table, format_value, write_grid, write_json, write_rows
from vacuumprobe.models import FieldKind


class TestFormatValue(unittest.TestCase):
    """Test cases for CSV cell formatting."""

    def test_floats_keep_full_precision(self):
        """Test 17 significant digits."""
        self.assertEqual(format_value(0.1), "0.10000000000000001")
        self.assertEqual(float(format_value(math.pi)), math.pi)
        self.assertEqual(format_value(np.float64(2.5)), "2.5")

    def test_other_types(self):
        """Test booleans, integers and strings."""
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(np.bool_(False)), "false")
        self.assertEqual(format_value(3), "3")
        self.assertEqual(format_value(np.int64(-4)), "-4")
        self.assertEqual(format_value("scalar"), "scalar")


class TestWriters(unittest.TestCase):
    """Test cases for the artifact writers."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_json_sorted_and_sanitized(self):
        """Test sorted keys, numpy values, enums and non-finite numbers."""
        path = write_json(self.directory / "report.json", {
            'zeta': np.float64(1.5), 'alpha': [np.int64(1), np.inf], 'kind': FieldKind.SCALAR,
            'flag': np.bool_(True), 'array': np.array([0.5, 1.0])})
        text = path.read_text(encoding="utf-8")
        self.assertTrue(text.endswith("}\n"))
        self.assertLess(text.index('"alpha"'), text.index('"zeta"'))
        data = json.loads(text)
        self.assertEqual(data['alpha'], [1, "inf"])
        self.assertEqual(data['kind'], "scalar")
        self.assertIs(data['flag'], True)
        self.assertEqual(data['array'], [0.5, 1.0])

    def test_json_dates_and_times(self):
        """Test TOML date and time values are written as ISO 8601 strings."""
        path = write_json(self.directory / "dates.json", {
            'stamp': datetime.datetime(2024, 1, 1, 9, 30, tzinfo=datetime.timezone.utc),
            'day': datetime.date(2024, 1, 1), 'clock': [datetime.time(7, 45)]})
        data = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(data['stamp'], "2024-01-01T09:30:00+00:00")
        self.assertEqual(data['day'], "2024-01-01")
        self.assertEqual(data['clock'], ["07:45:00"])

    def test_json_is_deterministic(self):
        """Test that equal payloads give identical bytes regardless of key order."""
        first = write_json(self.directory / "a.json", {'b': 1, 'a': 2}).read_bytes()
        second = write_json(self.directory / "b.json", {'a': 2, 'b': 1}).read_bytes()
        self.assertEqual(first, second)

    def test_rows_use_lf(self):
        """Test the CSV table layout."""
        path = write_rows(self.directory / "nested" / "table.csv", ['m_eV', 'excluded_bool'],
                          [{'m_eV': 1e-10, 'excluded_bool': True}, {'m_eV': 0.25, 'excluded_bool': False}])
        data = path.read_bytes()
        self.assertNotIn(b"\r", data)
        self.assertEqual(data.decode("utf-8"),
                         "m_eV,excluded_bool\n1e-10,true\n0.25,false\n")

    def test_grid_layout(self):
        """Test the header row of x coordinates and the leading y column."""
        path = write_grid(self.directory / "grid.csv", np.array([-1.0, 1.0]), np.array([0.5]),
                          np.array([[2.0, 3.0]]))
        self.assertEqual(path.read_text(encoding="utf-8"), "y_um,-1,1\n0.5,2,3\n")

    def test_empty_grid(self):
        """Test that an empty grid gives the header only."""
        path = write_grid(self.directory / "empty.csv", np.array([]), np.array([]), np.zeros((0, 0)))
        self.assertEqual(path.read_text(encoding="utf-8"), "y_um\n")

    def test_line_profile_in_metres(self):
        """Test the line profile columns and sidecar."""
        paths = emit_line_profile(self.directory, "profile_x", np.array([-50.0, 0.0, 50.0]),
                                  np.array([1.0, 4.0, 1.0]), {'axis': 'x'})
        self.assertEqual([p.name for p in paths], ["profile_x.csv", "profile_x.json"])
        lines = paths[0].read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "position_m,photons_per_pixel")
        self.assertAlmostEqual(float(lines[1].split(",")[0]), -5e-5, places=18)
        sidecar = json.loads(paths[1].read_text(encoding="utf-8"))
        self.assertEqual(sidecar['axis'], "x")
        self.assertEqual(sidecar['columns']['position_m'], "m")

    def test_table_sidecar(self):
        """Test that the table sidecar counts rows."""
        paths = emit_table(self.directory, "kinematics", ['a'], [{'a': 1}, {'a': 2}], {'units': {'a': 'eV'}})
        sidecar = json.loads(paths[1].read_text(encoding="utf-8"))
        self.assertEqual(sidecar['n_rows'], 2)
        self.assertEqual(sidecar['units'], {'a': 'eV'})

    def test_unwritable_path(self):
        """Test that write failures become ArtifactIOError."""
        with patch("builtins.open", side_effect=PermissionError(13, "Permission denied")):
            with self.assertRaises(ArtifactIOError) as context:
                write_json(self.directory / "denied.json", {'a': 1})
        self.assertTrue(context.exception.path.endswith("denied.json"))
        blocker = self.directory / "file"
        blocker.write_text("x", encoding="utf-8")
        with self.assertRaises(ArtifactIOError):
            write_rows(blocker / "table.csv", ['a'], [{'a': 1}])
        with self.assertRaises(ArtifactIOError):
            write_grid(blocker / "grid.csv", np.array([1.0]), np.array([1.0]), np.array([[1.0]]))


if __name__ == "__main__":
    unittest.main()
