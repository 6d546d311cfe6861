import argparse
import logging

from app.api.common import CommandResult, add_common_flags, claim_outputs, output_path
from app.core.exceptions import ValidationError
from app.models.book_types import InitMode, RngStream
from app.services import walk_and_book
from app.utils.artifact_converter import ArtifactConverter
from app.utils.validator import Validator

logger = logging.getLogger(__name__)

COLUMNS = ["path_id", "time", "level", "kind", "gap", "flash_crash"]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "trades",
        help="Trade log of seeded paths",
        description="One row per trade. CSV columns: path_id, time, level, kind, gap, flash_crash "
                    "(plus best_ask for the full book). Path i uses stream i of the seed, as in simulate.",
    )
    parser.add_argument("--mu", type=int, help="Spread parameter (required)")
    parser.add_argument("--epsilon", type=int, default=1, help="Window used to flag flash-crash trades")
    parser.add_argument("--seed", type=int, help="64-bit master seed (required)")
    parser.add_argument("--horizon", type=int, default=100, help="Steps per path")
    parser.add_argument("--first-path", type=int, default=0, help="Stream index of the first path")
    parser.add_argument("--paths", type=int, default=1, help="Number of consecutive paths")
    parser.add_argument("--empty-book", action="store_true", help="Start from the empty book")
    add_common_flags(parser)
    parser.set_defaults(handler=cmd_trades)


def cmd_trades(args: argparse.Namespace) -> CommandResult:
    """Replay seeded paths through the book and export every trade"""
    Validator.require("trades", mu=args.mu, seed=args.seed)
    mu = Validator.validate_positive_int("--mu", args.mu)
    epsilon = Validator.validate_positive_int("--epsilon", args.epsilon)
    seed = Validator.validate_positive_int("--seed", args.seed, minimum=0)
    if seed >= 2 ** 64:
        raise ValidationError(f"--seed must be below 2^64, got {seed}")
    horizon = Validator.validate_positive_int("--horizon", args.horizon)
    first = Validator.validate_positive_int("--first-path", args.first_path, minimum=0)
    paths = Validator.validate_positive_int("--paths", args.paths)
    init_mode = InitMode.EMPTY_BOOK if args.empty_book else InitMode.FULL_BOOK
    name = f"trades_mu{mu}_seed{seed}_{init_mode.value}.csv"
    claim_outputs(args, name)

    rows = []
    for path_id in range(first, first + paths):
        path = walk_and_book.generate_walk(RngStream(master_seed=seed, stream_index=path_id), horizon)
        for event in walk_and_book.detect_trades(path, mu, init_mode, epsilon):
            rows.append({
                "path_id": path_id,
                "time": event.time,
                "level": event.level,
                "kind": event.kind,
                "gap": event.intertrade_gap,
                "flash_crash": event.flash_crash,
                "best_ask": event.best_ask,
            })
    logger.info(f"[TRADES] {len(rows)} trades over {paths} paths")
    columns = COLUMNS + (["best_ask"] if init_mode == InitMode.FULL_BOOK else [])
    record = ArtifactConverter.write_csv(output_path(args, name), columns, rows, args.force)
    return CommandResult(outputs=[record], config={
        "mu": mu,
        "epsilon": epsilon,
        "seed": seed,
        "horizon": horizon,
        "first_path": first,
        "n_paths": paths,
        "mode": init_mode.value,
    })
