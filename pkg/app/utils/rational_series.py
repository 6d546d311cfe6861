"""
Truncated power series with exact rational coefficients.

A RationalSeries carries coefficients c_0..c_N of a power series in z and the
truncation order N. Every result of arithmetic is exact through the smaller
order of its operands. All probability generating functions of the toolkit
are carried in this type.
"""

import logging
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple, Union

import mpmath

from app.core.exceptions import NonUnitConstantTermError, ValidationError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]


class RationalSeries:
    """Immutable truncated power series over the rationals"""

    __slots__ = ("_coefficients", "_order")

    def __init__(self, coefficients: Iterable[Number], order: int):
        if order < 0:
            raise ValidationError(f"Truncation order must be >= 0, got {order}")
        coeffs = [Fraction(c) for c in coefficients][: order + 1]
        coeffs.extend(Fraction(0) for _ in range(order + 1 - len(coeffs)))
        self._coefficients: Tuple[Fraction, ...] = tuple(coeffs)
        self._order = order

    # construction helpers

    @classmethod
    def zero(cls, order: int) -> "RationalSeries":
        return cls([], order)

    @classmethod
    def one(cls, order: int) -> "RationalSeries":
        return cls([1], order)

    @classmethod
    def monomial(cls, power: int, coefficient: Number, order: int) -> "RationalSeries":
        coeffs = [Fraction(0)] * (order + 1)
        if power <= order:
            coeffs[power] = Fraction(coefficient)
        return cls(coeffs, order)

    @classmethod
    def from_counts(cls, counts: Sequence[int], order: int) -> "RationalSeries":
        """Build c_n = counts[n] / 2^n, the law of a fair-coin path class"""
        return cls((Fraction(c, 1 << n) for n, c in enumerate(counts)), order)

    # accessors

    @property
    def order(self) -> int:
        return self._order

    @property
    def coefficients(self) -> Tuple[Fraction, ...]:
        return self._coefficients

    def coeff(self, power: int) -> Fraction:
        if power < 0 or power > self._order:
            raise ValidationError(f"Power {power} outside truncation order {self._order}")
        return self._coefficients[power]

    def __getitem__(self, power: int) -> Fraction:
        return self.coeff(power)

    def __len__(self) -> int:
        return self._order + 1

    def __iter__(self):
        return iter(self._coefficients)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalSeries):
            return NotImplemented
        return self._order == other._order and self._coefficients == other._coefficients

    def __hash__(self) -> int:
        return hash((self._order, self._coefficients))

    def __repr__(self) -> str:
        shown = ", ".join(str(c) for c in self._coefficients[:6])
        tail = ", ..." if self._order >= 6 else ""
        return f"RationalSeries([{shown}{tail}], order={self._order})"

    # arithmetic

    def truncate(self, order: int) -> "RationalSeries":
        return RationalSeries(self._coefficients, min(order, self._order))

    def _coerce(self, other: Union["RationalSeries", Number]) -> "RationalSeries":
        if isinstance(other, RationalSeries):
            return other
        return RationalSeries([other], self._order)

    def __add__(self, other: Union["RationalSeries", Number]) -> "RationalSeries":
        other = self._coerce(other)
        order = min(self._order, other._order)
        return RationalSeries((a + b for a, b in zip(self._coefficients, other._coefficients)), order)

    __radd__ = __add__

    def __neg__(self) -> "RationalSeries":
        return RationalSeries((-c for c in self._coefficients), self._order)

    def __sub__(self, other: Union["RationalSeries", Number]) -> "RationalSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Number) -> "RationalSeries":
        return self._coerce(other) - self

    def scale(self, factor: Number) -> "RationalSeries":
        factor = Fraction(factor)
        return RationalSeries((factor * c for c in self._coefficients), self._order)

    def __mul__(self, other: Union["RationalSeries", Number]) -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return self.scale(other)
        order = min(self._order, other._order)
        a, b = self._coefficients, other._coefficients
        out: List[Fraction] = [Fraction(0)] * (order + 1)
        nonzero_a = [(i, c) for i, c in enumerate(a[: order + 1]) if c]
        for j, cb in enumerate(b[: order + 1]):
            if not cb:
                continue
            for i, ca in nonzero_a:
                if i + j > order:
                    break
                out[i + j] += ca * cb
        return RationalSeries(out, order)

    __rmul__ = __mul__

    def reciprocal(self) -> "RationalSeries":
        """Return 1/self through the same order; needs c_0 != 0"""
        a = self._coefficients
        if a[0] == 0:
            raise NonUnitConstantTermError()
        inv0 = 1 / a[0]
        out: List[Fraction] = [inv0]
        nonzero = [(i, c) for i, c in enumerate(a) if c and i > 0]
        for n in range(1, self._order + 1):
            acc = Fraction(0)
            for i, c in nonzero:
                if i > n:
                    break
                acc += c * out[n - i]
            out.append(-acc * inv0)
        return RationalSeries(out, self._order)

    def __truediv__(self, other: Union["RationalSeries", Number]) -> "RationalSeries":
        if isinstance(other, RationalSeries):
            return self * other.reciprocal()
        return self.scale(Fraction(1) / Fraction(other))

    def geometric(self) -> "RationalSeries":
        """Return 1/(1 - self); needs a constant term other than 1"""
        return (1 - self).reciprocal()

    # evaluation

    def partial_sum(self, upto: int = None) -> Fraction:
        upto = self._order if upto is None else min(upto, self._order)
        return sum(self._coefficients[: upto + 1], Fraction(0))

    def value_at_one(self) -> Fraction:
        return self.partial_sum()

    def derivative(self) -> "RationalSeries":
        return RationalSeries((n * c for n, c in enumerate(self._coefficients) if n > 0), max(self._order - 1, 0))

    def is_dyadic(self) -> bool:
        return all(c.denominator & (c.denominator - 1) == 0 for c in self._coefficients)

    def is_probability_series(self) -> bool:
        if any(c < 0 or c > 1 for c in self._coefficients):
            return False
        return self.partial_sum() <= 1

    def evaluate(self, z, dps: int = 50) -> Tuple[mpmath.mpf, mpmath.mpf]:
        """Evaluate a probability series at 0 <= z <= 1 in mpmath.

        Returns:
            (value of the truncated sum, certified bound on the omitted tail)

        The tail of a probability series is at most (1 - partial mass) * z^(N+1).
        """
        with mpmath.workdps(dps):
            z = mpmath.mpf(z)
            if z < 0 or z > 1:
                raise ValidationError(f"Certified evaluation needs 0 <= z <= 1, got {z}")
            value = mpmath.mpf(0)
            power = mpmath.mpf(1)
            for c in self._coefficients:
                if c:
                    value += mpmath.mpf(c.numerator) / c.denominator * power
                power *= z
            mass = self.partial_sum()
            missing = 1 - mpmath.mpf(mass.numerator) / mass.denominator
            bound = max(missing, mpmath.mpf(0)) * power
            return +value, +bound
