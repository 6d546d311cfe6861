import argparse
import logging

from app.api.common import CommandResult, add_common_flags, claim_outputs, output_path
from app.core.config.settings import settings
from app.core.exceptions import UndefinedMomentsError, ValidationError
from app.models.avalanche_types import AvalancheConfig, Quantity
from app.models.book_types import InitMode
from app.services import avalanche_stats
from app.utils.artifact_converter import ArtifactConverter
from app.utils.validator import Validator

logger = logging.getLogger(__name__)

COLUMNS = ["value", "count", "p_hat", "ci_low", "ci_high"]
GAP_COLUMNS = ["statistic", "p_value", "first_size", "second_size"]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "simulate",
        help="Monte Carlo distribution of an avalanche quantity",
        description="Seeded Monte Carlo tally. CSV columns: value, count, p_hat, ci_low, ci_high "
                    "(binomial band at CI_Z standard deviations).",
    )
    parser.add_argument("--mu", type=int, help="Spread parameter (required)")
    parser.add_argument("--epsilon", type=int, help="Window in time steps (required)")
    parser.add_argument("--paths", type=int, help="Number of simulated paths (required)")
    parser.add_argument("--seed", type=int, help="64-bit master seed (required)")
    parser.add_argument("--horizon", type=int, default=None, help="Steps per path (default 64 eps + 64 mu^2)")
    parser.add_argument("--certify-horizon", action="store_true",
                        help="Pick the horizon from exact tail mass so censoring is below 1e-7")
    parser.add_argument("--empty-book", action="store_true", help="Start from the empty book")
    parser.add_argument("--quantity", default=Quantity.FULL_LENGTH.value, choices=[q.value for q in Quantity])
    parser.add_argument("--iid-check", action="store_true",
                        help="Also write a KS comparison of the first two FullBook intertrade gaps")
    add_common_flags(parser)
    parser.set_defaults(handler=cmd_simulate)


def cmd_simulate(args: argparse.Namespace) -> CommandResult:
    """Run the Monte Carlo estimator and write its distribution CSV"""
    Validator.require("simulate", mu=args.mu, epsilon=args.epsilon, paths=args.paths, seed=args.seed)
    mu = Validator.validate_positive_int("--mu", args.mu)
    epsilon = Validator.validate_positive_int("--epsilon", args.epsilon)
    paths = Validator.validate_positive_int("--paths", args.paths)
    seed = Validator.validate_positive_int("--seed", args.seed, minimum=0)
    if seed >= 2 ** 64:
        raise ValidationError(f"--seed must be below 2^64, got {seed}")
    quantity = Quantity(args.quantity)
    init_mode = InitMode.EMPTY_BOOK if args.empty_book else InitMode.FULL_BOOK
    name = f"simulate_{quantity.value}_mu{mu}_eps{epsilon}_{init_mode.value.lower()}.csv"
    gap_name = f"simulate_gaps_mu{mu}.csv"
    claim_outputs(args, name, *([gap_name] if args.iid_check else []))

    horizon = args.horizon
    if horizon is not None:
        Validator.validate_positive_int("--horizon", horizon)
    elif args.certify_horizon:
        horizon = avalanche_stats.certified_horizon(mu, epsilon, quantity, init_mode)

    config = AvalancheConfig(mu=mu, epsilon=epsilon, horizon=horizon, n_paths=paths, init_mode=init_mode, master_seed=seed)
    dist = avalanche_stats.estimate_distribution(config, quantity, args.threads)

    z = settings.CI_Z
    rows = []
    for value, count in dist.counts.items():
        low, high = dist.interval(value, z)
        rows.append({"value": value, "count": count, "p_hat": dist.p_hat(value), "ci_low": low, "ci_high": high})
    outputs = [ArtifactConverter.write_csv(output_path(args, name), COLUMNS, rows, args.force)]

    try:
        moments = avalanche_stats.sample_moments(dist)
        print(f"{quantity.value}: mean {moments.mean:.6g} +- {moments.mean_se:.2g}, "
              f"variance {moments.variance:.6g} +- {moments.variance_se:.2g}, "
              f"{dist.n_samples} kept, {dist.censored_count} censored")
    except UndefinedMomentsError:
        print(f"{quantity.value}: {dist.n_samples} kept, {dist.censored_count} censored")

    if args.iid_check:
        check = avalanche_stats.excursion_iid_check(config, args.threads)
        outputs.append(ArtifactConverter.write_csv(output_path(args, gap_name), GAP_COLUMNS, [check.model_dump()], args.force))

    return CommandResult(
        outputs=outputs,
        config={
            "mu": mu,
            "epsilon": epsilon,
            "n_paths": paths,
            "seed": seed,
            "horizon": config.effective_horizon,
            "mode": init_mode.value,
            "quantity": quantity.value,
        },
        censored_count=dist.censored_count,
    )
