"""Exact decision procedure for diagonals of selfadjoint projections.

A [0, 1]-valued sequence is such a diagonal iff the sum of its small
entries and the sum of the complements of its large entries are either
jointly infinite or differ by an integer.  Everything here is computed
in exact rational arithmetic; no floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import IncompatibleStreams, NotADiagonal, OutOfRangeEntry

HALF = Fraction(1, 2)
ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class ExtendedRational:
    """A nonnegative rational or +infinity."""

    finite: bool
    value: Fraction = ZERO

    @classmethod
    def of(cls, value: Fraction) -> "ExtendedRational":
        return cls(True, Fraction(value))

    @classmethod
    def infinite(cls) -> "ExtendedRational":
        return cls(False)

    def __add__(self, other: "ExtendedRational") -> "ExtendedRational":
        if self.finite and other.finite:
            return ExtendedRational(True, self.value + other.value)
        return ExtendedRational.infinite()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtendedRational):
            return NotImplemented
        if self.finite != other.finite:
            return False
        return (not self.finite) or self.value == other.value

    def __repr__(self) -> str:
        return str(self.value) if self.finite else "inf"


def _as_unit_fraction(x) -> Fraction:
    f = Fraction(x)
    if not (ZERO <= f <= ONE):
        raise OutOfRangeEntry(f"entry {f} is outside [0, 1]")
    return f


class RationalStream:
    """One closed-form stream of exact rational entries in [0, 1]."""

    def entry(self, k: int) -> Fraction:
        raise NotImplementedError

    def bucket_sums(self, le_half: bool) -> tuple[ExtendedRational, ExtendedRational]:
        """(sum of small entries, sum of 1-complements of large entries)."""
        raise NotImplementedError

    def trace_sums(self) -> tuple[ExtendedRational, ExtendedRational]:
        """(sum of entries, sum of complements)."""
        raise NotImplementedError

    def half_count(self) -> float:
        """Number of entries equal to exactly 1/2 (may be inf)."""
        raise NotImplementedError

    def average_with(self, other: "RationalStream") -> "RationalStream":
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _is_small(v: Fraction, le_half: bool) -> bool:
    return v <= HALF if le_half else v < HALF


@dataclass(frozen=True)
class ConstantRational(RationalStream):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _as_unit_fraction(self.c))

    def entry(self, k: int) -> Fraction:
        return self.c

    def bucket_sums(self, le_half: bool):
        if _is_small(self.c, le_half):
            if self.c == ZERO:
                return ExtendedRational.of(ZERO), ExtendedRational.of(ZERO)
            return ExtendedRational.infinite(), ExtendedRational.of(ZERO)
        if self.c == ONE:
            return ExtendedRational.of(ZERO), ExtendedRational.of(ZERO)
        return ExtendedRational.of(ZERO), ExtendedRational.infinite()

    def trace_sums(self):
        tr = ExtendedRational.of(ZERO) if self.c == ZERO else ExtendedRational.infinite()
        co = ExtendedRational.of(ZERO) if self.c == ONE else ExtendedRational.infinite()
        return tr, co

    def half_count(self) -> float:
        return math.inf if self.c == HALF else 0

    def average_with(self, other):
        if isinstance(other, ConstantRational):
            return ConstantRational((self.c + other.c) / 2)
        if isinstance(other, GeometricRational) and self.c == ZERO:
            return GeometricRational(other.c / 2, other.r)
        if isinstance(other, PeriodicRational):
            return other.average_with(self)
        raise IncompatibleStreams(
            f"cannot average {type(self).__name__} with {type(other).__name__} in closed form")

    def to_json(self):
        return {"kind": "constant", "c": str(self.c)}


@dataclass(frozen=True)
class PeriodicRational(RationalStream):
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("periodic stream needs at least one value")
        object.__setattr__(self, "values",
                           tuple(_as_unit_fraction(v) for v in self.values))

    def entry(self, k: int) -> Fraction:
        return self.values[k % len(self.values)]

    def bucket_sums(self, le_half: bool):
        a = ExtendedRational.of(ZERO)
        b = ExtendedRational.of(ZERO)
        for v in self.values:
            if _is_small(v, le_half):
                if v != ZERO:
                    a = ExtendedRational.infinite()
            elif v != ONE:
                b = ExtendedRational.infinite()
        return a, b

    def trace_sums(self):
        tr = (ExtendedRational.of(ZERO) if all(v == ZERO for v in self.values)
              else ExtendedRational.infinite())
        co = (ExtendedRational.of(ZERO) if all(v == ONE for v in self.values)
              else ExtendedRational.infinite())
        return tr, co

    def half_count(self) -> float:
        return math.inf if any(v == HALF for v in self.values) else 0

    def average_with(self, other):
        if isinstance(other, PeriodicRational):
            n = math.lcm(len(self.values), len(other.values))
            return PeriodicRational(tuple(
                (self.entry(k) + other.entry(k)) / 2 for k in range(n)))
        if isinstance(other, ConstantRational):
            return PeriodicRational(tuple((v + other.c) / 2 for v in self.values))
        raise IncompatibleStreams(
            f"cannot average {type(self).__name__} with {type(other).__name__} in closed form")

    def to_json(self):
        return {"kind": "periodic", "values": [str(v) for v in self.values]}


@dataclass(frozen=True)
class GeometricRational(RationalStream):
    """Entries c * r^k, k = 0, 1, 2, ...; requires 0 < r < 1."""

    c: Fraction
    r: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _as_unit_fraction(self.c))
        r = Fraction(self.r)
        if not (ZERO < r < ONE):
            raise ValueError(f"geometric ratio must be in (0, 1), got {r}")
        object.__setattr__(self, "r", r)

    def entry(self, k: int) -> Fraction:
        return self.c * self.r**k

    def _split_index(self, le_half: bool) -> int:
        """First k whose entry falls in the small bucket."""
        k = 0
        while not _is_small(self.entry(k), le_half):
            k += 1
        return k

    def bucket_sums(self, le_half: bool):
        if self.c == ZERO:
            return ExtendedRational.of(ZERO), ExtendedRational.of(ZERO)
        k0 = self._split_index(le_half)
        # tail from k0 on is a geometric series with exact rational sum
        a = self.c * self.r**k0 / (ONE - self.r)
        b = sum((ONE - self.entry(k) for k in range(k0)), start=ZERO)
        return ExtendedRational.of(a), ExtendedRational.of(b)

    def trace_sums(self):
        # complements 1 - c r^k tend to 1, so their sum always diverges
        return ExtendedRational.of(self.c / (ONE - self.r)), ExtendedRational.infinite()

    def half_count(self) -> float:
        k = 0
        while self.entry(k) > HALF:
            k += 1
        return 1 if self.entry(k) == HALF else 0

    def average_with(self, other):
        if isinstance(other, GeometricRational) and self.r == other.r:
            return GeometricRational((self.c + other.c) / 2, self.r)
        if isinstance(other, ConstantRational) and other.c == ZERO:
            return GeometricRational(self.c / 2, self.r)
        raise IncompatibleStreams(
            f"cannot average {type(self).__name__} with {type(other).__name__} in closed form")

    def to_json(self):
        return {"kind": "geometric", "c": str(self.c), "r": str(self.r)}


@dataclass(frozen=True)
class DiagonalSeq:
    """Exact sequence: a finite prefix followed by interleaved streams.

    Entry n for n >= len(prefix): stream (n - len(prefix)) mod k, position
    (n - len(prefix)) // k, where k is the number of streams.
    """

    prefix: tuple[Fraction, ...]
    tails: tuple[RationalStream, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix",
                           tuple(_as_unit_fraction(v) for v in self.prefix))
        if not self.tails:
            raise ValueError("a diagonal sequence needs at least one tail stream")
        object.__setattr__(self, "tails", tuple(self.tails))

    @property
    def interleave(self) -> int:
        return len(self.tails)

    def entry(self, n: int) -> Fraction:
        if n < len(self.prefix):
            return self.prefix[n]
        j = n - len(self.prefix)
        k = self.interleave
        return self.tails[j % k].entry(j // k)

    def entries(self, n: int) -> list[Fraction]:
        return [self.entry(i) for i in range(n)]

    def to_json(self) -> dict:
        return {
            "prefix": [str(v) for v in self.prefix],
            "tails": [s.to_json() for s in self.tails],
            "interleave": self.interleave,
        }


@dataclass(frozen=True)
class KadisonSums:
    """The two bucket sums of the projection-diagonal criterion, together
    with the count of entries exactly equal to 1/2."""

    a: ExtendedRational
    b: ExtendedRational
    half_entries: float  # int or math.inf
    le_half: bool

    @property
    def finite(self) -> bool:
        return self.a.finite and self.b.finite

    def difference(self) -> Fraction:
        if not self.finite:
            raise NotADiagonal("difference undefined for infinite sums")
        return self.a.value - self.b.value


def sums(d: DiagonalSeq, le_half: bool = False) -> KadisonSums:
    """Exact bucket sums: ``a`` collects small entries, ``b`` collects
    1-complements of large ones.

    The default convention counts entries equal to 1/2 as large;
    ``le_half`` moves them to the small bucket.  Either way the final
    decision is the same (each move shifts a - b by exactly 1).
    """
    a = ExtendedRational.of(ZERO)
    b = ExtendedRational.of(ZERO)
    halves = 0.0
    for v in d.prefix:
        if _is_small(v, le_half):
            a = a + ExtendedRational.of(v)
        else:
            b = b + ExtendedRational.of(ONE - v)
        if v == HALF:
            halves += 1
    for s in d.tails:
        sa, sb = s.bucket_sums(le_half)
        a = a + sa
        b = b + sb
        halves += s.half_count()
    return KadisonSums(a=a, b=b, half_entries=halves, le_half=le_half)


def decide(d: DiagonalSeq, le_half: bool = False) -> bool:
    """True iff the sequence is the diagonal of some selfadjoint
    projection: the bucket sums are jointly infinite, or their difference
    is an integer."""
    s = sums(d, le_half)
    if not s.finite:
        return True
    return s.difference().denominator == 1


def trace_sums(d: DiagonalSeq) -> tuple[ExtendedRational, ExtendedRational]:
    """(sum of entries, sum of complements) as extended rationals."""
    tr = ExtendedRational.of(sum(d.prefix, start=ZERO))
    co = ExtendedRational.of(sum((ONE - v for v in d.prefix), start=ZERO))
    for s in d.tails:
        st, sc = s.trace_sums()
        tr = tr + st
        co = co + sc
    return tr, co


def midpoint(d: DiagonalSeq, e: DiagonalSeq) -> DiagonalSeq:
    """Entrywise exact average of two sequences.

    Requires the same interleaving arity and prefix lengths congruent
    modulo it, so streams pair off after materializing the prefix overlap.
    """
    if d.interleave != e.interleave:
        raise IncompatibleStreams(
            f"interleave {d.interleave} vs {e.interleave}")
    k = d.interleave
    la, lb = len(d.prefix), len(e.prefix)
    if (la - lb) % k != 0:
        raise IncompatibleStreams(
            "prefix lengths differ by a non-multiple of the interleave arity")
    n = max(la, lb)
    prefix = tuple((d.entry(i) + e.entry(i)) / 2 for i in range(n))
    # align stream positions past the common prefix
    shift_d = (n - la) // k
    shift_e = (n - lb) // k
    tails = []
    for i in range(k):
        sd = _shifted(d.tails[i], shift_d)
        se = _shifted(e.tails[i], shift_e)
        tails.append(sd.average_with(se))
    return DiagonalSeq(prefix=prefix, tails=tuple(tails))


def _shifted(s: RationalStream, by: int) -> RationalStream:
    if by == 0:
        return s
    if isinstance(s, ConstantRational):
        return s
    if isinstance(s, GeometricRational):
        return GeometricRational(s.c * s.r**by, s.r)
    if isinstance(s, PeriodicRational):
        p = len(s.values)
        return PeriodicRational(tuple(s.values[(i + by) % p] for i in range(p)))
    raise IncompatibleStreams(f"cannot shift stream {type(s).__name__}")


def same_projection_class(d: DiagonalSeq, e: DiagonalSeq) -> bool:
    """Do the two diagonals belong to one projection up to unitary
    equivalence?  Both must pass the criterion; the classes match iff the
    traces of the projection and its complement agree (infinite counts as
    equal to infinite)."""
    if not decide(d) or not decide(e):
        raise NotADiagonal("both sequences must pass the projection-diagonal test")
    return trace_sums(d) == trace_sums(e)


# ---------------------------------------------------------------------------
# the catalog sequences
# ---------------------------------------------------------------------------


def alternating_zero_one() -> DiagonalSeq:
    """0, 1, 0, 1, ...; both bucket sums vanish."""
    return DiagonalSeq(prefix=(), tails=(ConstantRational(ZERO), ConstantRational(ONE)))


def halving_interleaved_ones() -> DiagonalSeq:
    """1/2, 1, 1/4, 1, 1/8, ...; a diagonal of the same projection."""
    return DiagonalSeq(prefix=(),
                       tails=(GeometricRational(HALF, HALF), ConstantRational(ONE)))


def quartering_interleaved_ones() -> DiagonalSeq:
    """1/4, 1, 1/8, 1, ...; the midpoint of the two above, and not a
    projection diagonal (bucket sums 1/2 and 0)."""
    return DiagonalSeq(prefix=(),
                       tails=(GeometricRational(Fraction(1, 4), HALF), ConstantRational(ONE)))


def catalog() -> dict[str, DiagonalSeq]:
    return {
        "alternating_zero_one": alternating_zero_one(),
        "halving_interleaved_ones": halving_interleaved_ones(),
        "quartering_interleaved_ones": quartering_interleaved_ones(),
        "midpoint_of_first_two": midpoint(alternating_zero_one(),
                                          halving_interleaved_ones()),
        "constant_third": DiagonalSeq(prefix=(), tails=(ConstantRational(Fraction(1, 3)),)),
        "single_one": DiagonalSeq(prefix=(ONE,), tails=(ConstantRational(ZERO),)),
        "double_one": DiagonalSeq(prefix=(ONE, ONE), tails=(ConstantRational(ZERO),)),
    }
