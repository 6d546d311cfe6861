import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.core.exceptions import OutputCollisionError
from app.models.manifest import OutputRecord

logger = logging.getLogger(__name__)

DEFAULT_OUT = "out"


class CommandResult(BaseModel):
    """What a command handler hands back to the dispatcher"""
    outputs: List[OutputRecord] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict, description="Recorded in the run manifest")
    censored_count: Optional[int] = None


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    """Flags every subcommand shares"""
    group = parser.add_argument_group("run options")
    group.add_argument("--threads", type=int, default=None,
                       help="Worker processes (default AVALANCHE_THREADS); output does not depend on it")
    group.add_argument("--out", default=None, help=f"Output directory (default ./{DEFAULT_OUT})")
    group.add_argument("--force", action="store_true", help="Overwrite existing outputs")
    group.add_argument("--manifest", default=None, metavar="FILE",
                       help="Rerun the command recorded in FILE and compare output digests")


def out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or DEFAULT_OUT)


def output_path(args: argparse.Namespace, name: str) -> Path:
    return out_dir(args) / name


def manifest_path(args: argparse.Namespace, first_output: str) -> Path:
    """Run manifest sits next to the first output, named after it"""
    return out_dir(args) / f"{Path(first_output).stem}.manifest.json"


def claim_outputs(args: argparse.Namespace, *names: str) -> None:
    """Refuse to start writing when any planned output or the manifest already exists

    Raises:
        OutputCollisionError: On the first existing file, unless --force
    """
    if args.force or not names:
        return
    for path in [output_path(args, name) for name in names] + [manifest_path(args, names[0])]:
        if path.exists():
            logger.error(f"[ARTIFACT] Refusing to overwrite {path}")
            raise OutputCollisionError(str(path))


def tag(value: Any) -> str:
    """File name fragment for a number, 0.5 -> 0p5"""
    return str(value).replace(".", "p").replace("-", "m")
