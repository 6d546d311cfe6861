import subprocess
import sys
from pathlib import Path

from app.models.avalanche_types import Censored
from app.models.verification_types import CheckResult

ROOT = Path(__file__).resolve().parents[1]
MODEL_MODULES = [
    "app.models.book_types",
    "app.models.avalanche_types",
    "app.models.series_types",
    "app.models.limit_types",
    "app.models.verification_types",
    "app.models.manifest",
    "app.api.common",
    "app.core.config.settings",
]


def test_field_descriptions_are_schema_metadata():
    assert CheckResult.model_fields["name"].description == "What was compared"
    assert Censored.model_fields["observed_until"].description == "Last time index of the path"


def test_models_import_without_pydantic_deprecations():
    code = "; ".join(f"import {module}" for module in MODEL_MODULES)
    result = subprocess.run(
        [sys.executable, "-W", "error::pydantic.warnings.PydanticDeprecatedSince20", "-c", code],
        cwd=ROOT,
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
