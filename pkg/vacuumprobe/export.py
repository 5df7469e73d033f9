"""
Plot-data writers: CSV tables and grids with 17 significant digits, JSON
sidecars and reports with sorted keys.
"""
import csv
import json
import datetime
import math
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np

from vacuumprobe.exceptions import ArtifactIOError
from vacuumprobe.models import FocalPlaneImage

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """CSV cell text: '.17g' for floats, lower-case booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no literal for non-finite numbers
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Enum):
        return _jsonable(value.value)
    if isinstance(value, (datetime.date, datetime.time)):
        # TOML dates and times
        return value.isoformat()
    return value


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as e:
        raise ArtifactIOError(str(path), e.strerror or str(e)) from e
    logger.info(f"Wrote {path}")
    return path


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    """JSON with sorted keys and a trailing newline."""
    return _write_text(Path(path), json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_rows(path: Path, fieldnames: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """CSV table, comma separated, LF line endings."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(fieldnames)
            for row in rows:
                writer.writerow([format_value(row[name]) for name in fieldnames])
    except OSError as e:
        raise ArtifactIOError(str(path), e.strerror or str(e)) from e
    logger.info(f"Wrote {path}")
    return path


def write_grid(path: Path, x_values: np.ndarray, y_values: np.ndarray, values: np.ndarray,
               corner: str = "y_um") -> Path:
    """
    2D grid as CSV: the header row lists the x coordinates, each following
    row starts with its y coordinate. An empty grid gives the header only.
    """
    header = [corner] + [format_value(x) for x in x_values]
    rows = []
    if x_values.size:
        for y, row in zip(y_values, values):
            rows.append([format_value(y)] + [format_value(v) for v in row])
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ArtifactIOError(str(path), e.strerror or str(e)) from e
    logger.info(f"Wrote {path}")
    return path


def emit_image(directory: Path, stem: str, image: FocalPlaneImage) -> List[Path]:
    """Focal image grid plus its JSON sidecar."""
    directory = Path(directory)
    grid_path = write_grid(directory / f"{stem}.csv", image.x_centers, image.y_centers, image.values)
    sidecar = dict(image.metadata(), axes={'rows': 'y_um', 'columns': 'x_um'})
    return [grid_path, write_json(directory / f"{stem}.json", sidecar)]


def emit_line_profile(directory: Path, stem: str, positions_um: np.ndarray, photons: np.ndarray,
                      metadata: Dict[str, Any]) -> List[Path]:
    """Two-column line profile (position_m, photons_per_pixel) plus sidecar."""
    directory = Path(directory)
    rows = [{'position_m': p * 1e-6, 'photons_per_pixel': v} for p, v in zip(positions_um, photons)]
    csv_path = write_rows(directory / f"{stem}.csv", ['position_m', 'photons_per_pixel'], rows)
    sidecar = dict(metadata, columns={'position_m': 'm', 'photons_per_pixel': 'photons/pixel'})
    return [csv_path, write_json(directory / f"{stem}.json", sidecar)]


def emit_table(directory: Path, stem: str, fieldnames: Sequence[str], rows: Sequence[Mapping[str, Any]],
               metadata: Dict[str, Any]) -> List[Path]:
    """Table CSV plus a sidecar carrying units and run metadata."""
    directory = Path(directory)
    csv_path = write_rows(directory / f"{stem}.csv", fieldnames, rows)
    return [csv_path, write_json(directory / f"{stem}.json", dict(metadata, n_rows=len(rows)))]
