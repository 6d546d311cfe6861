import argparse
import logging
from typing import Any, Dict, List

from app.api.common import CommandResult, add_common_flags, claim_outputs, output_path, tag
from app.core.config.settings import settings
from app.models.limit_types import LaplaceArg
from app.services import scaling_limits
from app.utils.artifact_converter import ArtifactConverter
from app.utils.validator import Validator

logger = logging.getLogger(__name__)

CONVERGENCE_COLUMNS = ["lambda", "n", "discrete_value", "limit_value", "scaled_error", "fitted_order", "method"]
TARGETS = ("simplified", "full", "h", "hyperbolic", "converge-t1", "converge-simplified", "split")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "limit",
        help="Continuum limit transforms and convergence studies",
        description="simplified/full: lambda, epsilon, mu, value columns. "
                    "h: lambda, mu, integral, tanh_target, coth_target, matches_tanh. "
                    "hyperbolic: s, mu, tanh_term, coth_term, csch_term, sech_sq_term, sech_sq_alternate, "
                    "identity_residual (the lambda grid is read as s). "
                    "converge-*: lambda, n, discrete_value, limit_value, scaled_error, fitted_order, method. "
                    "split: per-n Type I/II entries and the reading each favours.",
    )
    parser.add_argument("--target", choices=TARGETS, help="What to compute (required)")
    parser.add_argument("--lambda-grid", default="1", help="Comma separated Laplace variables, e.g. 0.1,1,10")
    parser.add_argument("--epsilon", type=float, default=1.0, help="Continuum window")
    parser.add_argument("--mu", type=float, default=1.0, help="Continuum spread")
    parser.add_argument("--n-grid", default=None, help="Comma separated n values for convergence studies")
    parser.add_argument("--series-mode", default="auto", choices=scaling_limits.SERIES_MODES,
                        help="How converge-t1 evaluates the discrete transform")
    parser.add_argument("--printed-h", action="store_true",
                        help="Use the image series of h without alternating signs")
    add_common_flags(parser)
    parser.set_defaults(handler=cmd_limit)


def _convergence_rows(lam: float, report) -> List[Dict[str, Any]]:
    rows = []
    for row in report.rows:
        rows.append(dict(row.model_dump(), **{"lambda": lam, "fitted_order": report.fitted_order}))
    return rows


def cmd_limit(args: argparse.Namespace) -> CommandResult:
    """Evaluate a limit target over the lambda grid and write CSV"""
    Validator.require("limit", target=args.target)
    lambdas = Validator.validate_grid("--lambda-grid", args.lambda_grid)
    epsilon = Validator.validate_positive_float("--epsilon", args.epsilon)
    mu = Validator.validate_positive_float("--mu", args.mu)
    n_grid = Validator.validate_int_grid("--n-grid", args.n_grid) if args.n_grid else None
    alternating = not args.printed_h
    target = args.target
    name = f"limit_{target}_eps{tag(epsilon)}_mu{tag(mu)}.csv"
    claim_outputs(args, name)
    logger.info(f"[LIMIT] target={target}, lambdas={lambdas}, eps={epsilon}, mu={mu}")

    if target == "simplified":
        columns = ["lambda", "epsilon", "value"]
        rows = []
        for lam in lambdas:
            value = scaling_limits.simplified_limit_laplace(LaplaceArg(lam=lam, epsilon_c=epsilon, mu_c=mu))
            rows.append({"lambda": lam, "epsilon": epsilon, "value": value})
            print(f"lambda={lam:g}: {value:.{settings.OUTPUT_FLOAT_DIGITS}g}")
    elif target == "full":
        columns = ["lambda", "epsilon", "mu", "simplified", "full"]
        rows = [
            {"lambda": r.lam, "epsilon": r.epsilon_c, "mu": r.mu_c, "simplified": r.simplified, "full": r.full}
            for r in scaling_limits.limit_table(lambdas, epsilon, mu)
        ]
    elif target == "h":
        columns = ["lambda", "mu", "alternating", "integral", "tanh_target", "coth_target", "matches_tanh"]
        rows = []
        for lam in lambdas:
            check = scaling_limits.h_transform_quadrature(lam, mu, alternating)
            rows.append({"lambda": lam, "mu": mu, "alternating": check.alternating, "integral": check.integral,
                         "tanh_target": check.tanh_target, "coth_target": check.coth_target,
                         "matches_tanh": check.matches_tanh})
    elif target == "hyperbolic":
        columns = ["s", "mu", "tanh_term", "coth_term", "csch_term", "sech_sq_term", "sech_sq_alternate",
                   "identity_residual"]
        rows = []
        for s in lambdas:
            entries = scaling_limits.hyperbolic_coefficients(s, mu)
            rows.append(dict(entries.model_dump(exclude={"mu_c"}), mu=entries.mu_c))
    elif target == "converge-t1":
        columns = CONVERGENCE_COLUMNS
        rows = []
        for lam in lambdas:
            report = scaling_limits.convergence_study_t1(mu, lam, n_grid, args.series_mode, args.threads)
            rows.extend(_convergence_rows(lam, report))
            print(f"s={lam:g}: fitted order {report.fitted_order}")
    elif target == "converge-simplified":
        columns = CONVERGENCE_COLUMNS
        rows = []
        for lam in lambdas:
            report = scaling_limits.convergence_study_simplified(epsilon, lam, n_grid, args.threads)
            rows.extend(_convergence_rows(lam, report))
            print(f"lambda={lam:g}: fitted order {report.fitted_order}")
    else:
        columns = ["s", "n", "mu_n", "type_one_scaled", "coth_target", "type_two_raw", "type_two_scaled",
                   "csch_target", "tau_d_value", "sech_sq_printed", "sech_sq_alternate", "type_two_reading",
                   "tau_d_reading"]
        rows = []
        for s in lambdas:
            report = scaling_limits.convergence_study_split(mu, s, n_grid)
            for row in report.rows:
                rows.append(dict(row.model_dump(), s=s, type_two_reading=report.type_two_reading,
                                 tau_d_reading=report.tau_d_reading))
            print(f"s={s:g}: Type II entry reads as {report.type_two_reading}, tau_D entry as {report.tau_d_reading}")

    record = ArtifactConverter.write_csv(output_path(args, name), columns, rows, args.force)
    return CommandResult(outputs=[record], config={
        "target": target,
        "lambda_grid": lambdas,
        "epsilon": epsilon,
        "mu": mu,
        "n_grid": n_grid,
        "alternating_h": alternating,
    })
