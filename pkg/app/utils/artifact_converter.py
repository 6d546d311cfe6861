import csv
import hashlib
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import rapidjson

from app.core.config.settings import settings
from app.core.exceptions import ArtifactIOError, OutputCollisionError
from app.models.manifest import OutputRecord, RunManifest
from app.utils.rational_series import RationalSeries

logger = logging.getLogger(__name__)

class ArtifactConverter:
    """Utility class for turning results into CSV and JSON artifacts"""

    @staticmethod
    def format_value(value: Any) -> str:
        """Render one CSV cell

        Rationals print as "num/den", floats with OUTPUT_FLOAT_DIGITS significant
        digits, booleans as true/false and None as an empty cell.
        """
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, Fraction):
            return f"{value.numerator}/{value.denominator}"
        if isinstance(value, float):
            return format(value, f".{settings.OUTPUT_FLOAT_DIGITS}g")
        if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
            return value.value
        return str(value)

    @staticmethod
    def digest(path: Path) -> str:
        """sha256 hex digest of a file

        Raises:
            ArtifactIOError: If the file cannot be read
        """
        try:
            return hashlib.sha256(Path(path).read_bytes()).hexdigest()
        except OSError as e:
            raise ArtifactIOError(f"Cannot read {path}", str(path), e)

    @staticmethod
    def _open_for_write(path: Path, force: bool):
        path = Path(path)
        if path.exists() and not force:
            raise OutputCollisionError(str(path))
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            return open(path, "w", newline="", encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Cannot open {path} for writing", str(path), e)

    @staticmethod
    def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Dict[str, Any]], force: bool = False) -> OutputRecord:
        """Write rows as CSV with a fixed column order

        Args:
            path: Destination file
            columns: Header, also the key order of each row
            rows: Mappings from column name to value
            force: Overwrite an existing file

        Returns:
            OutputRecord with the content digest

        Raises:
            OutputCollisionError: If the file exists and force is False
            ArtifactIOError: If writing fails
        """
        count = 0
        handle = ArtifactConverter._open_for_write(path, force)
        try:
            with handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([ArtifactConverter.format_value(row.get(c)) for c in columns])
                    count += 1
        except OSError as e:
            raise ArtifactIOError(f"Failed writing {path}", str(path), e)
        logger.info(f"[ARTIFACT] Wrote {count} rows to {path}")
        return OutputRecord(path=str(path), sha256=ArtifactConverter.digest(path), rows=count)

    @staticmethod
    def series_rows(series: RationalSeries, decimal: bool = False, start: int = 0) -> List[Dict[str, Any]]:
        """power, numerator, denominator and optionally decimal for each coefficient"""
        rows = []
        for power in range(start, series.order + 1):
            c = series.coeff(power)
            row = {"power": power, "numerator": c.numerator, "denominator": c.denominator}
            if decimal:
                row["decimal"] = float(c)
            rows.append(row)
        return rows

    @staticmethod
    def write_manifest(path: Path, manifest: RunManifest, force: bool = False) -> Path:
        """Serialize a manifest with python-rapidjson

        Raises:
            OutputCollisionError: If the file exists and force is False
            ArtifactIOError: If writing fails
        """
        handle = ArtifactConverter._open_for_write(path, force)
        try:
            with handle:
                handle.write(rapidjson.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True))
                handle.write("\n")
        except (OSError, TypeError, ValueError) as e:
            raise ArtifactIOError(f"Failed writing manifest {path}", str(path), e)
        logger.info(f"[ARTIFACT] Manifest written to {path}")
        return Path(path)

    @staticmethod
    def load_manifest(path: Path) -> RunManifest:
        """Read a manifest written by write_manifest

        Raises:
            ArtifactIOError: If the file is missing or not a valid manifest
        """
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = rapidjson.load(handle)
            return RunManifest.model_validate(data)
        except OSError as e:
            raise ArtifactIOError(f"Cannot read manifest {path}", str(path), e)
        except (ValueError, rapidjson.JSONDecodeError) as e:
            raise ArtifactIOError(f"Invalid manifest {path}: {e}", str(path), e)
