import argparse
import logging
import os
import shlex
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

# Configure logging first
logging.basicConfig(
    level=logging.DEBUG if os.getenv("DEBUG", "False").lower() == "true" else logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)  # stdout carries command results
    ]
)

logger = logging.getLogger(__name__)

from app.core.config.settings import settings, validate_required_settings  # noqa: E402
from app.core.exceptions import AvalancheError, InvariantViolation, ValidationError  # noqa: E402
from app.api import exact, limit, simulate, trades, verify  # noqa: E402
from app.api.common import CommandResult, manifest_path  # noqa: E402
from app.models.manifest import RunManifest  # noqa: E402
from app.utils.artifact_converter import ArtifactConverter  # noqa: E402

logging.getLogger().setLevel(settings.LOG_LEVEL if not settings.DEBUG else "DEBUG")

COMMANDS = (simulate, exact, verify, limit, trades)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as ValidationError"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="avalanche",
        description="Avalanche lengths in a binomial limit order book: simulation, exact series, limits, verification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.TOOL_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _rerun_args(args: argparse.Namespace) -> List[str]:
    """Command line recorded in args.manifest, with this run's --out/--force/--threads applied"""
    manifest = ArtifactConverter.load_manifest(args.manifest)
    if manifest.command != args.command:
        raise ValidationError(f"Manifest records '{manifest.command}', not '{args.command}'")
    argv = []
    skip = False
    for token in manifest.command_line:
        if skip:
            skip = False
            continue
        if token in ("--out", "--threads", "--manifest"):
            skip = True
            continue
        if token == "--force" or token.startswith(("--out=", "--threads=", "--manifest=")):
            continue
        argv.append(token)
    if args.out:
        argv += ["--out", args.out]
    if args.force:
        argv.append("--force")
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    return argv


def run(argv: List[str]) -> RunManifest:
    """Parse, dispatch and record one command

    Raises:
        AvalancheError: any toolkit failure, mapped to an exit code by main
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    expected = None
    if args.manifest:
        expected = ArtifactConverter.load_manifest(args.manifest).digests()
        argv = _rerun_args(args)
        logger.info(f"[MANIFEST] Rerunning: {shlex.join(argv)}")
        args = parser.parse_args(argv)

    started = datetime.now(timezone.utc)
    clock = time.perf_counter()
    result: CommandResult = args.handler(args)
    manifest = RunManifest(
        command=args.command,
        command_line=list(argv),
        config=result.config,
        tool_version=settings.TOOL_VERSION,
        started=started,
        elapsed_seconds=time.perf_counter() - clock,
        outputs=result.outputs,
        censored_count=result.censored_count,
    )
    first = Path(result.outputs[0].path).name if result.outputs else args.command
    ArtifactConverter.write_manifest(manifest_path(args, first), manifest, args.force)

    if expected is not None:
        produced = manifest.digests()
        differing = sorted(name for name in expected if produced.get(name) != expected[name])
        if differing:
            raise InvariantViolation("Rerun did not reproduce the recorded outputs", {"files": differing})
        logger.info(f"[MANIFEST] All {len(expected)} output digests reproduced")
    return manifest


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns 0 success, 1 verification failure, 2 usage error, 3 I/O error"""
    if not validate_required_settings():
        return ValidationError.exit_code
    try:
        run(sys.argv[1:] if argv is None else argv)
        return 0
    except AvalancheError as e:
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        logger.exception(f"Unhandled error: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
