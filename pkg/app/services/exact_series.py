"""
Exact generating functions of the book model.

Every law here is a fair-coin path count divided by 2^n, so each class
generating function comes out of an integer lattice walk with absorbing and
killing barriers. Products, reciprocals and sums are then taken exactly in
RationalSeries. The mpmath evaluators at the end return the same transforms
untruncated, through the continued-fraction resolvent of the band walk.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import mpmath
import rapidjson

from app.core.config.settings import settings
from app.core.exceptions import SeriesError, ValidationError
from app.models.series_types import (
    EmptyBookLaw,
    EmptyBookReading,
    EpsilonPrime,
    LadderLawTable,
    MomentPair,
    PathClass,
    RationalForm,
    ReferenceTables,
    T1Split,
)
from app.utils.rational_series import RationalSeries

logger = logging.getLogger(__name__)

# survival_R cross-checks its closed form against the phi sum up to this window
_DIRECT_CHECK_LIMIT = 512

_REFERENCE_TABLES = Path(__file__).resolve().parent.parent / "data" / "reference_tables.json"


def _order(order: Optional[int]) -> int:
    order = settings.DEFAULT_TRUNCATION if order is None else order
    if order < 1:
        raise ValidationError(f"Truncation order must be >= 1, got {order}")
    if order > settings.MAX_SERIES_ORDER:
        raise ValidationError(f"Truncation order {order} exceeds MAX_SERIES_ORDER={settings.MAX_SERIES_ORDER}")
    return order


def _check_mu(mu: int) -> None:
    if mu < 1:
        raise ValidationError(f"Spread parameter mu must be >= 1, got {mu}")


def _check_epsilon(epsilon: int) -> None:
    if epsilon < 1:
        raise ValidationError(f"Window epsilon must be >= 1, got {epsilon}")


# ---------------------------------------------------------------------------
# series arithmetic front end
# ---------------------------------------------------------------------------

def series_arith(op: str, a: RationalSeries, b: Optional[RationalSeries] = None, factor: Optional[Fraction] = None) -> RationalSeries:
    """Dispatch add | mul | reciprocal | scale on RationalSeries.

    Args:
        op: one of "add", "mul", "reciprocal", "scale"
        a: first operand
        b: second operand for add and mul
        factor: scalar for scale

    Returns:
        The exact result through the smaller truncation order

    Raises:
        NonUnitConstantTermError: reciprocal of a series with zero constant term
        ValidationError: unknown op or missing operand
    """
    if op == "add":
        if b is None:
            raise ValidationError("add needs two series")
        return a + b
    if op == "mul":
        if b is None:
            raise ValidationError("mul needs two series")
        return a * b
    if op == "reciprocal":
        return a.reciprocal()
    if op == "scale":
        if factor is None:
            raise ValidationError("scale needs a factor")
        return a.scale(factor)
    raise ValidationError(f"Unknown series operation: {op}")


# ---------------------------------------------------------------------------
# ladder law of the walk
# ---------------------------------------------------------------------------

def first_passage_phi(r: int, n: int) -> Fraction:
    """P[first passage through r happens at n] = (r/n) C(n, (n+r)/2) 2^-n"""
    if r < 1 or n < 1:
        raise ValidationError(f"first_passage_phi needs r >= 1 and n >= 1, got ({r}, {n})")
    if n < r or (n - r) % 2:
        return Fraction(0)
    return Fraction(r * comb(n, (n + r) // 2), n * (1 << n))


def count_first_passage_paths(k: int) -> int:
    """Number of length-k paths first hitting +1 at k (a Catalan number for odd k)"""
    if k < 1:
        raise ValidationError(f"Path length must be >= 1, got {k}")
    if k % 2 == 0:
        return 0
    numerator = comb(k, (k + 1) // 2)
    count, remainder = divmod(numerator, k)
    assert remainder == 0, f"C({k}, {(k + 1) // 2}) not divisible by {k}"
    return count


def ladder_law_table(r_max: int, n_max: int) -> LadderLawTable:
    phi = {
        (r, n): first_passage_phi(r, n)
        for r in range(1, r_max + 1)
        for n in range(r, n_max + 1, 2)
    }
    return LadderLawTable(r_max=r_max, n_max=n_max, phi=phi)


def pgf_R(order: Optional[int] = None) -> RationalSeries:
    """Series of E[z^R] = (1 - sqrt(1 - z^2)) / z built from the phi table"""
    order = _order(order)
    return RationalSeries([0] + [first_passage_phi(1, n) for n in range(1, order + 1)], order)


def epsilon_prime(epsilon: int) -> EpsilonPrime:
    _check_epsilon(epsilon)
    return EpsilonPrime.of(epsilon)


def survival_R(epsilon: int) -> Fraction:
    """P[R > eps] in closed form; asserted against 1 - sum of phi"""
    ep = epsilon_prime(epsilon).epsilon_prime
    closed = Fraction(3 + ep, 2 + ep) * Fraction(comb(2 + ep, (3 + ep) // 2), 1 << (2 + ep))
    if ep <= _DIRECT_CHECK_LIMIT:
        direct = 1 - sum((first_passage_phi(1, n) for n in range(1, ep + 1, 2)), Fraction(0))
        if closed != direct:
            raise SeriesError(f"Closed form P[R>{epsilon}]={closed} disagrees with direct sum {direct}")
    return closed


def phi_polynomial(epsilon: int, order: Optional[int] = None) -> RationalSeries:
    """Phi_eps(z) = sum of phi_{1,n} z^n over odd n <= eps'"""
    ep = epsilon_prime(epsilon).epsilon_prime
    order = max(_order(order), ep)
    coeffs = [Fraction(0)] * (order + 1)
    for n in range(1, ep + 1, 2):
        coeffs[n] = first_passage_phi(1, n)
    return RationalSeries(coeffs, order)


def simplified_avalanche_pgf(epsilon: int, order: Optional[int] = None) -> RationalSeries:
    """E[z^L_eps] = P[R > eps] / (E[1 - z^R; R <= eps] + P[R > eps])"""
    order = _order(order)
    tail = survival_R(epsilon)
    denominator = (1 - phi_polynomial(epsilon, order)).truncate(order)
    return denominator.reciprocal().scale(tail)


def simplified_moments(epsilon: int) -> MomentPair:
    """Closed-form mean and variance of L_eps.

    The variance uses C(2+e', (3+e')/2) in its middle term; the printed
    C(2+e', 3+e') is zero and divides by zero (see printed_variance).
    """
    ep = epsilon_prime(epsilon).epsilon_prime
    central = comb(2 + ep, (3 + ep) // 2)
    power = 1 << (2 + ep)
    mean = (2 + ep) - Fraction(2 + ep, 3 + ep) * Fraction(power, central)
    variance = (
        Fraction(4, 3) * (2 + 3 * ep + ep * ep)
        - Fraction(6 + 7 * ep + 2 * ep * ep, 3 + ep) * Fraction(power, central)
        + Fraction((2 + ep) ** 2, (3 + ep) ** 2) * Fraction(power * power, central * central)
    )
    return MomentPair(mean=mean, variance=variance)


def printed_variance(epsilon: int) -> Fraction:
    """Variance exactly as printed, with C(2+e', 3+e') in the middle term.

    Raises:
        SeriesError: always for eps >= 1, the binomial is zero
    """
    ep = epsilon_prime(epsilon).epsilon_prime
    binomial = comb(2 + ep, 3 + ep)
    if binomial == 0:
        raise SeriesError(f"Printed variance divides by C({2 + ep}, {3 + ep}) = 0")
    central = comb(2 + ep, (3 + ep) // 2)
    power = 1 << (2 + ep)
    return (
        Fraction(4, 3) * (2 + 3 * ep + ep * ep)
        - Fraction(6 + 7 * ep + 2 * ep * ep, 3 + ep) * Fraction(power, binomial)
        + Fraction((2 + ep) ** 2, (3 + ep) ** 2) * Fraction(power * power, central * central)
    )


def simplified_moments_from_pgf(epsilon: int) -> MomentPair:
    """Mean and variance from derivatives of P/(1 - Phi(z)) at z = 1"""
    coeffs = phi_polynomial(epsilon, epsilon_prime(epsilon).epsilon_prime).coefficients
    tail = 1 - sum(coeffs, Fraction(0))
    d1 = sum((n * c for n, c in enumerate(coeffs)), Fraction(0))
    d2 = sum((n * (n - 1) * c for n, c in enumerate(coeffs)), Fraction(0))
    mean = d1 / tail
    variance = (d2 + d1) / tail + mean * mean
    return MomentPair(mean=mean, variance=variance)


# ---------------------------------------------------------------------------
# path classes A, B, C
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _band_top_counts(width: int, order: int) -> Tuple[int, ...]:
    """Paths from the top of a band of `width` levels that stay inside.

    Entry n is the number of length-n paths from the top level (0) that
    never left {-width+1, ..., 0} and sit on the top level at time n.
    """
    occupancy = [0] * width
    occupancy[width - 1] = 1
    out = [occupancy[width - 1]]
    for _ in range(order):
        nxt = [0] * width
        for i, c in enumerate(occupancy):
            if not c:
                continue
            if i + 1 < width:
                nxt[i + 1] += c
            if i - 1 >= 0:
                nxt[i - 1] += c
        occupancy = nxt
        out.append(occupancy[width - 1])
    return tuple(out)


@lru_cache(maxsize=256)
def _class_counts(path_class: PathClass, mu: int, order: int) -> Tuple[int, ...]:
    if path_class == PathClass.A:
        # last step leaves the top of the band upward to +1
        top = _band_top_counts(mu, order)
        return (0,) + top[:order]
    if path_class == PathClass.B:
        # last step leaves the top of the band downward to -1
        top = _band_top_counts(mu, order)
        return (0,) + top[:order]
    # C: like A, but the band floor -mu + 1 must have been visited
    width = mu
    fresh = [0] * width
    touched = [0] * width
    if width == 1:
        touched[0] = 1
    else:
        fresh[width - 1] = 1
    counts = [0]
    for _ in range(order):
        counts.append(touched[width - 1])
        nxt_fresh = [0] * width
        nxt_touched = [0] * width
        for i in range(width):
            for j in (i - 1, i + 1):
                if not 0 <= j < width:
                    continue
                if fresh[i]:
                    if j == 0:
                        nxt_touched[j] += fresh[i]
                    else:
                        nxt_fresh[j] += fresh[i]
                if touched[i]:
                    nxt_touched[j] += touched[i]
        fresh, touched = nxt_fresh, nxt_touched
    return tuple(counts)


def class_gf(path_class: PathClass, mu: int, order: Optional[int] = None) -> RationalSeries:
    """Generating function of class A, B or C by barrier-restricted path counting.

    A: stays in (-mu, 0] then steps to +1.
    B: stays in (-mu, 0], is at 0 at n-1 and steps to -1.
    C: an A path whose minimum before the last step is exactly -mu + 1.
    """
    path_class = PathClass(path_class)
    _check_mu(mu)
    order = _order(order)
    return RationalSeries.from_counts(_class_counts(path_class, mu, order), order)


def class_mass(path_class: PathClass, mu: int) -> Fraction:
    """Total mass by gambler's ruin: A, B -> mu/(mu+1); C -> 1/(mu(mu+1))"""
    path_class = PathClass(path_class)
    _check_mu(mu)
    if path_class in (PathClass.A, PathClass.B):
        return Fraction(mu, mu + 1)
    return Fraction(1, mu * (mu + 1))


def closed_form_class_a(mu: int, order: Optional[int] = None) -> RationalSeries:
    """A_mu from its closed rational form, available for mu in {1, 2}"""
    order = _order(order)
    z = RationalSeries.monomial(1, 1, order)
    if mu == 1:
        return z.scale(Fraction(1, 2))
    if mu == 2:
        # 2z / (4 - z^2)
        return z.scale(2) * (4 - z * z).reciprocal()
    raise ValidationError(f"Closed form only wired for mu in (1, 2), got {mu}")


# ---------------------------------------------------------------------------
# first trade in the full book
# ---------------------------------------------------------------------------

def _type_two_part(mu: int, order: int) -> RationalSeries:
    b = class_gf(PathClass.B, mu, order)
    c = class_gf(PathClass.C, mu, order)
    return b * c * b.geometric()


def t1_pgf(mu: int, order: Optional[int] = None) -> RationalSeries:
    """E[z^T1] = A + B C / (1 - B)"""
    _check_mu(mu)
    order = _order(order)
    return class_gf(PathClass.A, mu, order) + _type_two_part(mu, order)


def d_index_pgf(mu: int, order: Optional[int] = None) -> RationalSeries:
    """E[w^D]: D is geometric with success probability P[S(T1) <= 0] = 1/(mu+1)"""
    _check_mu(mu)
    order = _order(order)
    p = Fraction(1, mu + 1)
    coeffs = [Fraction(0)] + [p * (1 - p) ** (k - 1) for k in range(1, order + 1)]
    return RationalSeries(coeffs, order)


def first_type2_time_pgf(mu: int, order: Optional[int] = None) -> RationalSeries:
    """E[z^tau_D] = type-II part / (1 - type-I part)"""
    _check_mu(mu)
    order = _order(order)
    return _type_two_part(mu, order) * class_gf(PathClass.A, mu, order).geometric()


def t1_split(mu: int, order: Optional[int] = None) -> T1Split:
    _check_mu(mu)
    order = _order(order)
    return T1Split(
        mu=mu,
        type_one=class_gf(PathClass.A, mu, order),
        type_two=_type_two_part(mu, order),
        d_pgf=d_index_pgf(mu, order),
        type_two_mass=Fraction(1, mu + 1),
    )


def t1_survival(mu: int, epsilon: int) -> Fraction:
    """q_eps = P[T1 > eps]"""
    _check_mu(mu)
    _check_epsilon(epsilon)
    return 1 - t1_pgf(mu, epsilon).partial_sum()


def full_avalanche_pgf(mu: int, epsilon: int, order: Optional[int] = None) -> RationalSeries:
    """E[z^L*] = q_eps / (1 - sum_{k <= eps} p_k z^k)"""
    _check_mu(mu)
    _check_epsilon(epsilon)
    order = _order(order)
    head = t1_pgf(mu, epsilon)
    q = 1 - head.partial_sum()
    polynomial = RationalSeries(head.coefficients, epsilon)
    denominator = RationalSeries((1 - polynomial).coefficients, order)
    if denominator.coeff(0) <= 0:
        raise SeriesError(f"Denominator constant term {denominator.coeff(0)} must be positive")
    return denominator.reciprocal().scale(q)


# ---------------------------------------------------------------------------
# first trade in the empty book
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _empty_book_counts(mu: int, order: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Counts of first empty-book trades at n, split by type.

    State is (drawup d, running minimum m) with 0 <= d < mu and minima at or
    below -mu merged. An up-step that makes the drawup reach mu trades at
    level m + mu, which is Type I exactly when m > -mu.
    """
    states: Dict[Tuple[int, int], int] = {(0, 0): 1}
    type_one = [0] * (order + 1)
    type_two = [0] * (order + 1)
    for n in range(1, order + 1):
        nxt: Dict[Tuple[int, int], int] = {}
        for (d, m), c in states.items():
            if d + 1 == mu:
                if m > -mu:
                    type_one[n] += c
                else:
                    type_two[n] += c
            else:
                key = (d + 1, m)
                nxt[key] = nxt.get(key, 0) + c
            if d == 0:
                key = (0, max(m - 1, -mu))
            else:
                key = (d - 1, m)
            nxt[key] = nxt.get(key, 0) + c
        states = nxt
    return tuple(type_one), tuple(type_two)


def first_trade_law_empty(mu: int, order: Optional[int] = None) -> EmptyBookLaw:
    _check_mu(mu)
    order = _order(order)
    one, two = _empty_book_counts(mu, order)
    return EmptyBookLaw(
        mu=mu,
        type_one=RationalSeries.from_counts(one, order),
        type_two=RationalSeries.from_counts(two, order),
    )


def first_trade_pgf_empty(mu: int, order: Optional[int] = None) -> RationalSeries:
    """E[z^T~1] for the initially empty book, from the drawup lattice"""
    return first_trade_law_empty(mu, order).total


def _barrier_first_hits(start: int, target: int, low: int, high: int, order: int, include_empty: bool) -> Tuple[int, ...]:
    """Counts of paths from start first reaching target at n, with every
    intermediate level strictly inside (low, high)."""
    counts = [0] * (order + 1)
    if include_empty and start == target:
        counts[0] = 1
    levels: Dict[int, int] = {start: 1}
    for n in range(1, order + 1):
        nxt: Dict[int, int] = {}
        for level, c in levels.items():
            for step in (-1, 1):
                new = level + step
                if new == target:
                    counts[n] += c
                elif low < new < high:
                    nxt[new] = nxt.get(new, 0) + c
        levels = nxt
    return tuple(counts)


def empty_book_printed_type_one(mu: int, order: int, lower_index: int, mirrored_index: bool, include_empty: bool) -> RationalSeries:
    """Type I part of the printed empty-book formula under one reading.

    G[mu, k]: from 0, inside (k - mu, mu), first reaching k - mu.
    F[mu]:    from 0, inside (-1, mu), first reaching mu.
    The sum runs over k = lower_index..mu of G[mu, k] (or G[mu, mu - k]) times F[mu].
    """
    f = RationalSeries.from_counts(_barrier_first_hits(0, mu, -1, mu, order, False), order)
    total = RationalSeries.zero(order)
    for k in range(lower_index, mu + 1):
        index = mu - k if mirrored_index else k
        g_counts = _barrier_first_hits(0, index - mu, index - mu, mu, order, include_empty)
        total = total + RationalSeries.from_counts(g_counts, order) * f
    return total


def empty_book_reading_report(mu: int, oracle: List[Fraction], order: Optional[int] = None) -> List[EmptyBookReading]:
    """Compare every reading of the printed empty-book formula with an oracle.

    Args:
        mu: spread parameter
        oracle: exact P[T~1 = n] for n = 0..len(oracle)-1
        order: series order, defaults to len(oracle) - 1

    Returns:
        One EmptyBookReading per (lower index, index form, empty path) combination
    """
    order = len(oracle) - 1 if order is None else min(order, len(oracle) - 1)
    type_two = _type_two_part(mu, order)
    readings: List[EmptyBookReading] = []
    for lower_index in (0, 1):
        for mirrored in (False, True):
            for include_empty in (False, True):
                series = empty_book_printed_type_one(mu, order, lower_index, mirrored, include_empty) + type_two
                diffs = [n for n in range(order + 1) if series.coeff(n) != oracle[n]]
                name = f"k={lower_index}..mu, G[mu,{'mu-k' if mirrored else 'k'}], empty path {'in' if include_empty else 'out'}"
                readings.append(EmptyBookReading(
                    name=name,
                    lower_index=lower_index,
                    mirrored_index=mirrored,
                    includes_empty_path=include_empty,
                    first_mismatch=diffs[0] if diffs else None,
                    mismatches=len(diffs),
                    compared_through=order,
                ))
    logger.info(f"[EXACT] Empty-book readings for mu={mu}: "
                f"{sum(r.first_mismatch is None for r in readings)} of {len(readings)} agree through n={order}")
    return readings


# ---------------------------------------------------------------------------
# untruncated transforms in mpmath
# ---------------------------------------------------------------------------

def _class_a_value(mu: int, z) -> mpmath.mpf:
    """A_mu(z) = (z/2) g_mu with g_1 = 1, g_j = 1 / (1 - z^2 g_{j-1} / 4)"""
    if mu == 0:
        return mpmath.mpf(0)
    quarter = z * z / 4
    g = mpmath.mpf(1)
    for _ in range(mu - 1):
        g = 1 / (1 - quarter * g)
    return z / 2 * g


def type_split_transform(mu: int, z, dps: Optional[int] = None) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """(E[z^T1; S(T1) > 0], E[z^T1; S(T1) <= 0]) at 0 <= z <= 1"""
    _check_mu(mu)
    dps = dps or settings.MPMATH_DPS
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        a = _class_a_value(mu, z)
        c = a - _class_a_value(mu - 1, z)
        return +a, +(a * c / (1 - a))


def t1_transform(mu: int, z, dps: Optional[int] = None) -> mpmath.mpf:
    dps = dps or settings.MPMATH_DPS
    with mpmath.workdps(dps):
        one, two = type_split_transform(mu, z, dps)
        return +(one + two)


def tau_d_transform(mu: int, z, dps: Optional[int] = None) -> mpmath.mpf:
    """E[z^tau_D] = X / (1 - A)"""
    dps = dps or settings.MPMATH_DPS
    with mpmath.workdps(dps):
        one, two = type_split_transform(mu, z, dps)
        return +(two / (1 - one))


def simplified_transform(epsilon: int, z, dps: Optional[int] = None) -> mpmath.mpf:
    """(1 - Phi_eps(1)) / (1 - Phi_eps(z)) with phi by its ratio recurrence"""
    ep = epsilon_prime(epsilon).epsilon_prime
    dps = dps or settings.MPMATH_DPS
    tail = survival_R(epsilon)
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        phi = mpmath.mpf(1) / 2
        power = z
        z2 = z * z
        total = phi * power
        k = 0
        while 2 * k + 3 <= ep:
            phi = phi * (2 * k + 1) / (2 * (k + 2))
            power *= z2
            total += phi * power
            k += 1
        tail_mp = mpmath.mpf(tail.numerator) / tail.denominator
        return +(tail_mp / (1 - total))


def series_order_for(z, tolerance: float) -> int:
    """Smallest N with z^(N+1) <= tolerance"""
    z = mpmath.mpf(z)
    if z >= 1:
        raise ValidationError("A certified tail needs z < 1")
    return max(int(mpmath.ceil(mpmath.log(tolerance) / mpmath.log(z))) - 1, 1)


# ---------------------------------------------------------------------------
# published reference values
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def table_reference() -> ReferenceTables:
    """Published first-trade and full-avalanche tables as exact rationals"""
    with open(_REFERENCE_TABLES, "r", encoding="utf-8") as handle:
        raw = rapidjson.load(handle)

    def fractions(row: List[str]) -> List[Fraction]:
        return [Fraction(cell) for cell in row]

    return ReferenceTables(
        first_trade={int(mu): fractions(row) for mu, row in raw["first_trade"].items()},
        first_trade_survival={int(mu): fractions(row) for mu, row in raw["first_trade_survival"].items()},
        full_avalanche_forms={
            int(mu): [RationalForm(**form) for form in forms] for mu, forms in raw["full_avalanche_forms"].items()
        },
        full_avalanche={int(mu): [fractions(row) for row in rows] for mu, rows in raw["full_avalanche"].items()},
    )
