import argparse
import logging
from typing import Any, Dict, List

from app.api.common import CommandResult, add_common_flags, claim_outputs, output_path
from app.core.config.settings import settings
from app.models.book_types import InitMode
from app.models.series_types import PathClass
from app.services import exact_series, oracle
from app.utils.artifact_converter import ArtifactConverter
from app.utils.validator import Validator

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["power", "numerator", "denominator"]
# target -> flags it needs
TARGETS = {
    "t1": ("mu",),
    "q": ("mu", "epsilon"),
    "simplified-pgf": ("epsilon",),
    "full-pgf": ("mu", "epsilon"),
    "moments": ("epsilon",),
    "empty-t1": ("mu",),
    "classes": ("mu",),
    "split": ("mu",),
    "d-index": ("mu",),
    "tau-d": ("mu",),
    "r": (),
    "empty-readings": ("mu",),
}


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "exact",
        help="Exact rational generating functions and laws",
        description="Exact series as CSV. Series targets: power, numerator, denominator[, decimal]. "
                    "q: mu, epsilon, q[, decimal]. moments: epsilon, mean, variance[, decimals]. "
                    "classes and split: power plus one rational column per part. "
                    "empty-readings: one row per reading of the empty-book first-trade formula.",
    )
    parser.add_argument("--target", choices=list(TARGETS), help="What to compute (required)")
    parser.add_argument("--mu", type=int, default=None)
    parser.add_argument("--epsilon", type=int, default=None)
    parser.add_argument("--order", type=int, default=None, help=f"Truncation order N (default {settings.DEFAULT_TRUNCATION})")
    parser.add_argument("--decimal", action="store_true", help="Add decimal columns")
    add_common_flags(parser)
    parser.set_defaults(handler=cmd_exact)


def _write_series(args, name: str, series, start: int = 0):
    columns = SERIES_COLUMNS + (["decimal"] if args.decimal else [])
    rows = ArtifactConverter.series_rows(series, args.decimal, start)
    return ArtifactConverter.write_csv(output_path(args, name), columns, rows, args.force)


def _write_parts(args, name: str, parts: Dict[str, Any], order: int):
    columns = ["power"] + list(parts)
    if args.decimal:
        columns += [f"{part}_decimal" for part in parts]
    rows: List[Dict[str, Any]] = []
    for power in range(order + 1):
        row: Dict[str, Any] = {"power": power}
        for part, series in parts.items():
            row[part] = series.coeff(power)
            if args.decimal:
                row[f"{part}_decimal"] = float(series.coeff(power))
        rows.append(row)
    return ArtifactConverter.write_csv(output_path(args, name), columns, rows, args.force)


def cmd_exact(args: argparse.Namespace) -> CommandResult:
    """Compute one exact target and write it as rational CSV"""
    Validator.require("exact", target=args.target)
    target = args.target
    Validator.require(target, **{flag: getattr(args, flag) for flag in TARGETS[target]})
    mu = Validator.validate_positive_int("--mu", args.mu) if args.mu is not None else None
    epsilon = Validator.validate_positive_int("--epsilon", args.epsilon) if args.epsilon is not None else None
    order = Validator.validate_order(args.order)
    suffix = "".join(f"_{k}{v}" for k, v in (("mu", mu), ("eps", epsilon)) if v is not None)
    name = f"exact_{target}{suffix}.csv"
    claim_outputs(args, name)
    logger.info(f"[EXACT] target={target}, mu={mu}, eps={epsilon}, order={order}")

    if target == "t1":
        record = _write_series(args, name, exact_series.t1_pgf(mu, order))
    elif target == "q":
        q = exact_series.t1_survival(mu, epsilon)
        row = {"mu": mu, "epsilon": epsilon, "q": q, "decimal": float(q)}
        columns = ["mu", "epsilon", "q"] + (["decimal"] if args.decimal else [])
        record = ArtifactConverter.write_csv(output_path(args, name), columns, [row], args.force)
        print(f"q_{epsilon} (mu={mu}) = {ArtifactConverter.format_value(q)}")
    elif target == "simplified-pgf":
        record = _write_series(args, name, exact_series.simplified_avalanche_pgf(epsilon, order))
    elif target == "full-pgf":
        record = _write_series(args, name, exact_series.full_avalanche_pgf(mu, epsilon, order))
    elif target == "moments":
        moments = exact_series.simplified_moments(epsilon)
        row = {"epsilon": epsilon, "mean": moments.mean, "variance": moments.variance,
               "mean_decimal": float(moments.mean), "variance_decimal": float(moments.variance)}
        columns = ["epsilon", "mean", "variance"] + (["mean_decimal", "variance_decimal"] if args.decimal else [])
        record = ArtifactConverter.write_csv(output_path(args, name), columns, [row], args.force)
        print(f"L_{epsilon}: mean {ArtifactConverter.format_value(moments.mean)}, "
              f"variance {ArtifactConverter.format_value(moments.variance)}")
    elif target == "empty-t1":
        law = exact_series.first_trade_law_empty(mu, order)
        record = _write_parts(args, name, {"type_one": law.type_one, "type_two": law.type_two, "total": law.total}, order)
    elif target == "classes":
        parts = {f"class_{c.value.lower()}": exact_series.class_gf(c, mu, order) for c in PathClass}
        record = _write_parts(args, name, parts, order)
    elif target == "split":
        split = exact_series.t1_split(mu, order)
        record = _write_parts(args, name, {"type_one": split.type_one, "type_two": split.type_two, "total": split.total},
                              order)
    elif target == "d-index":
        record = _write_series(args, name, exact_series.d_index_pgf(mu, order))
    elif target == "tau-d":
        record = _write_series(args, name, exact_series.first_type2_time_pgf(mu, order))
    elif target == "r":
        record = _write_series(args, name, exact_series.pgf_R(order))
    else:
        max_len = min(order, settings.ORACLE_MAX_LEN)
        enumerated = oracle.brute_force_first_trade(mu, InitMode.EMPTY_BOOK, max_len)
        readings = exact_series.empty_book_reading_report(mu, enumerated)
        columns = ["name", "lower_index", "mirrored_index", "includes_empty_path", "first_mismatch", "mismatches",
                   "compared_through"]
        record = ArtifactConverter.write_csv(output_path(args, name), columns, [r.model_dump() for r in readings],
                                             args.force)

    return CommandResult(outputs=[record], config={"target": target, "mu": mu, "epsilon": epsilon, "order": order})
