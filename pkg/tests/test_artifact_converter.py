from datetime import datetime, timezone
from fractions import Fraction

import pytest

from app.core.exceptions import ArtifactIOError, OutputCollisionError
from app.models.book_types import TradeKind
from app.models.manifest import RunManifest
from app.utils.artifact_converter import ArtifactConverter
from app.utils.rational_series import RationalSeries


@pytest.mark.parametrize("value, expected", [
    (Fraction(3, 8), "3/8"),
    (Fraction(2), "2/1"),
    (0.5, "0.5"),
    (1.0 / 3.0, "0.333333333333"),
    (True, "true"),
    (None, ""),
    (TradeKind.TYPE_II, "II"),
    (7, "7"),
])
def test_format_value(value, expected):
    assert ArtifactConverter.format_value(value) == expected


def test_write_csv_records_digest(out_dir):
    path = out_dir / "table.csv"
    record = ArtifactConverter.write_csv(path, ["a", "b"], [{"a": 1, "b": Fraction(1, 2)}, {"a": 2}])
    assert path.read_text(encoding="utf-8") == "a,b\n1,1/2\n2,\n"
    assert record.rows == 2
    assert record.sha256 == ArtifactConverter.digest(path)


def test_write_csv_refuses_to_overwrite(out_dir):
    path = out_dir / "table.csv"
    ArtifactConverter.write_csv(path, ["a"], [{"a": 1}])
    with pytest.raises(OutputCollisionError):
        ArtifactConverter.write_csv(path, ["a"], [{"a": 2}])
    ArtifactConverter.write_csv(path, ["a"], [{"a": 2}], force=True)
    assert path.read_text(encoding="utf-8") == "a\n2\n"


def test_series_rows():
    rows = ArtifactConverter.series_rows(RationalSeries([0, Fraction(1, 2), Fraction(1, 4)], 2), decimal=True, start=1)
    assert rows == [
        {"power": 1, "numerator": 1, "denominator": 2, "decimal": 0.5},
        {"power": 2, "numerator": 1, "denominator": 4, "decimal": 0.25},
    ]


def test_manifest_written_and_loaded(out_dir):
    manifest = RunManifest(
        command="exact",
        command_line=["exact", "--target", "r"],
        config={"order": 9},
        tool_version="0.3.0",
        started=datetime(2024, 6, 1, tzinfo=timezone.utc),
    )
    path = ArtifactConverter.write_manifest(out_dir / "run.manifest.json", manifest)
    assert ArtifactConverter.load_manifest(path) == manifest


def test_invalid_manifest(out_dir):
    path = out_dir / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ArtifactIOError):
        ArtifactConverter.load_manifest(path)
