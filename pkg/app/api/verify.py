import argparse
import logging

from app.api.common import CommandResult, add_common_flags, claim_outputs, output_path
from app.core.exceptions import VerificationFailure
from app.models.verification_types import Budget, Suite
from app.services.verification import run_suite
from app.utils.artifact_converter import ArtifactConverter

logger = logging.getLogger(__name__)

COLUMNS = ["suite", "name", "expected", "actual", "status"]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "verify",
        help="Cross-check tables, enumeration, simulation and limits",
        description="Runs the verification suites. CSV columns: suite, name, expected, actual, status. "
                    "Exit code 1 if any check fails.",
    )
    parser.add_argument("--suite", default=Suite.ALL.value, choices=[s.value for s in Suite])
    parser.add_argument("--budget", default=Budget.QUICK.value, choices=[b.value for b in Budget])
    add_common_flags(parser)
    parser.set_defaults(handler=cmd_verify)


def cmd_verify(args: argparse.Namespace) -> CommandResult:
    """Run a suite, print PASS/FAIL per check and write the diff report

    Raises:
        VerificationFailure: If any check fails, after the report is written
    """
    suite, budget = Suite(args.suite), Budget(args.budget)
    name = f"verify_{suite.value}_{budget.value}.csv"
    claim_outputs(args, name)
    report = run_suite(suite, budget, args.threads)
    for check in report.checks:
        print(f"{check.status} [{check.suite.value}] {check.name}: expected {check.expected}, got {check.actual}")
    rows = [dict(check.model_dump(), status=check.status) for check in report.checks]
    record = ArtifactConverter.write_csv(output_path(args, name), COLUMNS, rows, args.force)
    print(f"{len(report.checks) - report.failed} passed, {report.failed} failed")
    if not report.passed:
        raise VerificationFailure(report.failed, len(report.checks))
    return CommandResult(outputs=[record], config={"suite": report.suite.value, "budget": report.budget.value})
