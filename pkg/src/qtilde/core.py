"""Stochastic matrices, cylinder intervals and the point <-> digit codec.

A matrix is an explicit finite list of columns followed by a symbolic tail
rule.  Column ``k`` (1-based) splits every rank ``k-1`` interval into
sub-intervals whose lengths are proportional to the column weights.

Weights may be floats or :class:`fractions.Fraction`.  Every routine here
uses plain arithmetic on them, so a matrix built from fractions and fed
rational points is processed exactly; this is what the test oracles rely on.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from numbers import Rational
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import series
from .errors import (AlphabetMismatch, ColumnSumViolation, Condition2Violation, DepthOverflow,
                     DigitOutOfRange, NonPositiveEntry, SpecError)

#: absolute tolerance for every stochasticity check
SUM_TOLERANCE = 1e-12
DEFAULT_DEPTH = 64
#: default encoding stops once the cylinder is shorter than this
MIN_LENGTH = 1e-18
_LOG_FLOOR = math.log(2.2250738585072014e-308)


def _total(values: Iterable) -> Union[float, Fraction]:
    """Exact sum for rationals, compensated sum otherwise."""
    values = list(values)
    if all(isinstance(v, Rational) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(values)


def _log(w) -> float:
    return math.log(w) if w > 0 else -math.inf


@dataclass(frozen=True)
class ColumnSpec:
    """One column of a stochastic matrix.

    Either ``weights`` (digits ``0..len-1``) or ``lazy_ratio`` r, meaning the
    countable row ``(1-r) * r**i``.
    """

    weights: Optional[tuple] = None
    lazy_ratio: Optional[Union[float, Fraction]] = None
    _cum: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if (self.weights is None) == (self.lazy_ratio is None):
            raise SpecError("column needs exactly one of weights / lazy_ratio")
        if self.weights is not None:
            w = tuple(self.weights)
            if len(w) < 2:
                raise SpecError("a column needs at least two digits")
            object.__setattr__(self, "weights", w)
            cum = [0]
            for i in range(len(w)):
                cum.append(_total(w[: i + 1]))
            object.__setattr__(self, "_cum", tuple(cum))
        elif not 0 < self.lazy_ratio < 1:
            raise SpecError("lazy geometric row needs ratio in (0, 1)")

    @classmethod
    def lazy(cls, ratio) -> "ColumnSpec":
        return cls(lazy_ratio=ratio)

    @property
    def size(self) -> Optional[int]:
        """Number of digits, ``None`` for a countable row."""
        return None if self.weights is None else len(self.weights)

    @property
    def is_lazy(self) -> bool:
        return self.weights is None

    @cached_property
    def as_float(self) -> "ColumnSpec":
        """The same column with float weights (``self`` if already float)."""
        if self.weights is not None:
            if all(isinstance(w, float) for w in self.weights):
                return self
            return ColumnSpec(tuple(float(w) for w in self.weights))
        if isinstance(self.lazy_ratio, float):
            return self
        return ColumnSpec(lazy_ratio=float(self.lazy_ratio))

    def weight(self, i: int):
        if i < 0 or (self.weights is not None and i >= len(self.weights)):
            raise DigitOutOfRange(f"digit {i} outside column of size {self.size}")
        if self.weights is not None:
            return self.weights[i]
        r = self.lazy_ratio
        return (1 - r) * r ** i

    def cumulative(self, i: int):
        """Total weight of digits strictly below ``i``."""
        if self.weights is not None:
            return self._cum[i]
        return 1 - self.lazy_ratio ** i

    def max_weight(self):
        if self.weights is not None:
            return max(self.weights)
        return 1 - self.lazy_ratio

    def locate(self, u) -> int:
        """Digit whose half-open cell ``[C_i, C_{i+1})`` holds ``u``.

        Empty cells are skipped; ``u`` at or beyond the top maps to the last
        non-empty digit.
        """
        if self.weights is not None:
            i = bisect.bisect_right(self._cum, u) - 1
            n = len(self.weights)
            if i >= n or u >= self._cum[-1]:
                i = n - 1
            i = max(i, 0)
            while i > 0 and self.weights[i] == 0:
                i -= 1
            return i
        if u >= 1:
            raise DigitOutOfRange("the point 1 lies in no cell of a countable column")
        r = self.lazy_ratio
        i = max(int(math.floor(math.log1p(-float(u)) / math.log(float(r)))), 0)
        while i > 0 and self.cumulative(i) > u:
            i -= 1
        while self.cumulative(i + 1) <= u:
            i += 1
        return i

    def to_json(self):
        if self.weights is not None:
            return [number_to_json(w) for w in self.weights]
        return {"lazy": "geometric", "ratio": number_to_json(self.lazy_ratio)}


@dataclass(frozen=True)
class Constant:
    """Every tail column equals ``column``."""

    column: ColumnSpec

    @property
    def size(self) -> Optional[int]:
        return self.column.size

    def column_at(self, k: int) -> ColumnSpec:
        return self.column

    def rate(self) -> series.Rate:
        return series.ZeroTail()

    def profile(self) -> tuple:
        if self.column.is_lazy:
            raise SpecError("countable columns have no finite profile")
        return tuple((w, 0) for w in self.column.weights)

    def to_json(self) -> dict:
        return {"rule": "constant", "column": self.column.to_json()}


@dataclass(frozen=True)
class _OneDigitRule:
    """Distinguished ``digit`` gets ``t_k`` (or ``1 - t_k``); the other digits
    share the rest in the fixed proportions ``split``."""

    digit: int
    c: Union[float, Fraction]
    complement: bool = False
    split: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(self.split))
        if not self.split:
            raise SpecError("one-digit rule needs a split for the remaining digits")
        if not 0 <= self.digit <= len(self.split):
            raise SpecError(f"distinguished digit {self.digit} outside alphabet")

    @property
    def size(self) -> int:
        return len(self.split) + 1

    def t(self, k: int):
        raise NotImplementedError

    def column_at(self, k: int) -> ColumnSpec:
        return _rule_column(self, k)

    def profile(self) -> tuple:
        """Per digit ``(alpha, beta)`` with weight ``alpha + beta * t_k``."""
        if self.complement:
            rest = [(0, s) for s in self.split]
            own = (1, -1)
        else:
            rest = [(s, -s) for s in self.split]
            own = (0, 1)
        rest.insert(self.digit, own)
        return tuple(rest)


@dataclass(frozen=True)
class OneDigitGeometric(_OneDigitRule):
    r: Union[float, Fraction] = Fraction(1, 2)

    def t(self, k: int):
        return self.c * self.r ** k

    def rate(self) -> series.GeometricTail:
        return series.GeometricTail(self.c, self.r)

    def to_json(self) -> dict:
        return {"rule": "geometric", "digit": self.digit, "c": number_to_json(self.c),
                "r": number_to_json(self.r), "complement": self.complement,
                "split": [number_to_json(s) for s in self.split]}


@dataclass(frozen=True)
class OneDigitHarmonic(_OneDigitRule):
    offset: Union[float, Fraction] = 0

    def t(self, k: int):
        return self.c / (k + self.offset)

    def rate(self) -> series.HarmonicTail:
        return series.HarmonicTail(self.c, self.offset)

    def to_json(self) -> dict:
        return {"rule": "harmonic", "digit": self.digit, "c": number_to_json(self.c),
                "offset": number_to_json(self.offset), "complement": self.complement,
                "split": [number_to_json(s) for s in self.split]}


TailRule = Union[Constant, OneDigitGeometric, OneDigitHarmonic]


@lru_cache(maxsize=8192)
def _rule_column(rule: _OneDigitRule, k: int) -> ColumnSpec:
    t = rule.t(k)
    own = 1 - t if rule.complement else t
    rest = 1 - own
    weights = [s * rest for s in rule.split]
    weights.insert(rule.digit, own)
    return ColumnSpec(tuple(weights))


@dataclass(frozen=True)
class MatrixSpec:
    """Columns ``1..len(prefix)`` explicitly, ``tail`` beyond."""

    prefix: tuple
    tail: TailRule
    kind: str = "Q"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if self.kind not in ("Q", "P"):
            raise SpecError(f"kind must be 'Q' or 'P', not {self.kind!r}")

    @classmethod
    def constant(cls, weights: Sequence, kind: str = "Q") -> "MatrixSpec":
        return cls((), Constant(ColumnSpec(tuple(weights))), kind)

    def column(self, k: int) -> ColumnSpec:
        return column_at(self, k)

    def size_at(self, k: int) -> Optional[int]:
        return column_at(self, k).size

    @property
    def tail_start(self) -> int:
        """Last rank given explicitly; the tail rule governs every later rank."""
        return len(self.prefix)

    def constant_column(self) -> Optional[ColumnSpec]:
        """The common column if every column is the same, else ``None``."""
        if not isinstance(self.tail, Constant):
            return None
        col = self.tail.column
        if all(c == col for c in self.prefix):
            return col
        return None

    def limit(self) -> tuple:
        """Entrywise limit of the columns as k grows, from the tail rule."""
        return tuple(float(a) for a, _ in self.tail.profile())

    def to_json(self) -> dict:
        return {"kind": self.kind, "prefix": [c.to_json() for c in self.prefix],
                "tail": self.tail.to_json()}


def column_at(spec: MatrixSpec, k: int) -> ColumnSpec:
    """Column ``k`` (1-based) of ``spec``."""
    if k < 1:
        raise ValueError("ranks start at 1")
    if k <= len(spec.prefix):
        return spec.prefix[k - 1]
    return spec.tail.column_at(k)


# -- JSON --------------------------------------------------------------------

def number_from_json(v) -> Union[float, Fraction]:
    """JSON integers and ``"p/q"`` strings are exact; JSON floats stay floats."""
    if isinstance(v, bool):
        raise SpecError(f"expected a number, got {v!r}")
    if isinstance(v, (int, str)):
        return Fraction(v)
    if isinstance(v, float):
        return v
    raise SpecError(f"expected a number, got {v!r}")


def number_to_json(v):
    if isinstance(v, Rational):
        v = Fraction(v)
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


def _column_from_json(obj) -> ColumnSpec:
    if isinstance(obj, dict):
        if obj.get("lazy") != "geometric":
            raise SpecError(f"unsupported lazy row {obj!r}")
        return ColumnSpec.lazy(number_from_json(obj["ratio"]))
    return ColumnSpec(tuple(number_from_json(w) for w in obj))


def matrix_from_json(obj: dict) -> MatrixSpec:
    try:
        kind = obj.get("kind", "Q")
        prefix = tuple(_column_from_json(c) for c in obj.get("prefix", []))
        tail = obj["tail"]
        rule = tail["rule"]
        if rule == "constant":
            rule_obj = Constant(_column_from_json(tail["column"]))
        elif rule == "geometric":
            rule_obj = OneDigitGeometric(int(tail["digit"]), number_from_json(tail["c"]),
                                         bool(tail.get("complement", False)),
                                         tuple(number_from_json(s) for s in tail["split"]),
                                         r=number_from_json(tail["r"]))
        elif rule == "harmonic":
            rule_obj = OneDigitHarmonic(int(tail["digit"]), number_from_json(tail["c"]),
                                        bool(tail.get("complement", False)),
                                        tuple(number_from_json(s) for s in tail["split"]),
                                        offset=number_from_json(tail.get("offset", 0)))
        else:
            raise SpecError(f"unknown tail rule {rule!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed matrix document: {exc}") from exc
    return MatrixSpec(prefix, rule_obj, kind)


def load_matrix(path: Union[str, Path]) -> MatrixSpec:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


# -- validation -------------------------------------------------------------

class Check(NamedTuple):
    name: str
    passed: bool
    argument: str


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    checks: tuple
    condition2: Optional[series.ProductVerdict] = None

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _check_column(col: ColumnSpec, kind: str, where: str) -> list:
    if col.is_lazy:
        return [Check(f"{where}: lazy row", True,
                      f"geometric row with ratio {float(col.lazy_ratio):.6g} is stochastic by construction")]
    w = col.weights
    if kind == "Q" and any(x <= 0 for x in w):
        raise NonPositiveEntry(f"{where}: Q-entries must be positive, got {[float(x) for x in w]}")
    if any(x < 0 for x in w):
        raise NonPositiveEntry(f"{where}: negative entry in {[float(x) for x in w]}")
    total = _total(w)
    if abs(total - 1) > SUM_TOLERANCE:
        raise ColumnSumViolation(f"{where}: column sums to {float(total)!r}")
    return [Check(f"{where}: entries", True, "positive" if kind == "Q" else "non-negative"),
            Check(f"{where}: column sum", True, f"|sum - 1| = {float(abs(total - 1)):.3g}")]


def _check_tail(rule: TailRule, kind: str, start: int) -> list:
    if isinstance(rule, Constant):
        return _check_column(rule.column, kind, "tail column")
    split = rule.split
    if kind == "Q" and any(s <= 0 for s in split):
        raise NonPositiveEntry("tail split must be positive for a Q-matrix")
    if any(s < 0 for s in split):
        raise NonPositiveEntry("tail split has a negative entry")
    if abs(_total(split) - 1) > SUM_TOLERANCE:
        raise ColumnSumViolation(f"tail split sums to {float(_total(split))!r}")
    if rule.c <= 0:
        raise NonPositiveEntry("tail coefficient must be positive")
    first = start + 1
    if isinstance(rule, OneDigitGeometric):
        if not 0 < rule.r < 1:
            raise SpecError("geometric tail ratio must lie in (0, 1)")
        # t_k decreases, so the first tail rank carries the largest t
        peak = rule.c * rule.r ** first
    else:
        if first + rule.offset <= 0:
            raise SpecError("harmonic tail denominator k + offset must stay positive")
        peak = rule.c / (first + rule.offset)
    if peak >= 1:
        raise NonPositiveEntry(f"tail rule gives t_{first} = {float(peak):.6g} >= 1")
    return [Check("tail rule", True, f"0 < t_k <= {float(peak):.6g} < 1 for all k >= {first}; "
                                     "split stochastic")]


def column_max_deficit(spec: MatrixSpec) -> series.DeficitSequence:
    """Deficits ``1 - max_i w_ik`` as a symbolic sequence."""
    start = spec.tail_start
    tail = spec.tail
    if isinstance(tail, Constant):
        prefix = [1 - c.max_weight() for c in spec.prefix]
        top = tail.column.max_weight()
        tail_seq = series.ZeroTail() if top == 1 else series.ConstantTail(1 - top)
        return series.DeficitSequence(tuple(prefix), tail_seq)
    prof = tail.profile()
    top = max(a for a, _ in prof)
    if top < 1:
        def fn(k, prof=prof, rule=tail):
            t = rule.rate().values(k)
            return 1 - np.max([float(a) + float(b) * t for a, b in prof], axis=0)

        prefix = [1 - column_at(spec, k).max_weight() for k in range(1, start + 1)]
        gen = series.GeneratorTail(fn, summable=False, label=f"1 - max tends to {1 - float(top):.6g} > 0")
        return series.DeficitSequence(tuple(prefix), gen)
    # the digit with limit 1 eventually dominates once t_k <= 1/2
    end = start
    while tail.t(end + 1) > Fraction(1, 2):
        end += 1
    prefix = [1 - column_at(spec, k).max_weight() for k in range(1, end + 1)]
    return series.DeficitSequence(tuple(prefix), tail.rate())


def validate_matrix(spec: MatrixSpec, kind: Optional[str] = None) -> ValidationReport:
    """Check positivity, stochasticity and (for Q) that column maxima multiply to 0.

    Raises the first violated check; on success returns the full report.
    """
    kind = kind or spec.kind
    checks = []
    for k, col in enumerate(spec.prefix, start=1):
        checks += _check_column(col, kind, f"column {k}")
    checks += _check_tail(spec.tail, kind, spec.tail_start)
    verdict = None
    if kind == "Q":
        verdict = series.infinite_product(column_max_deficit(spec))
        if verdict.is_positive:
            raise Condition2Violation(
                f"prod_k max_i q_ik = {verdict.value:.10g} > 0 ({verdict.argument})")
        if verdict.is_inconclusive:
            checks.append(Check("condition (2)", False, verdict.argument))
        else:
            checks.append(Check("condition (2)", True, verdict.argument))
    return ValidationReport(kind, tuple(checks), verdict)


# -- digits and cylinders ------------------------------------------------------

@dataclass(frozen=True)
class DigitSequence:
    """A truncated digit expansion ``(i_1, ..., i_n)``."""

    digits: tuple
    canonical: bool = True

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, item):
        return self.digits[item]


def _as_digits(digits) -> tuple:
    if isinstance(digits, DigitSequence):
        return digits.digits
    return tuple(int(d) for d in digits)


@dataclass(frozen=True)
class Cylinder:
    """The closed rank-k interval ``[left, left + length]``."""

    prefix: DigitSequence
    left: Union[float, Fraction]
    log_length: float
    rank: int
    length: Union[float, Fraction] = 1

    @property
    def right(self):
        return self.left + self.length

    def contains(self, x) -> bool:
        return self.left <= x <= self.right


class Decoded(NamedTuple):
    value: Union[float, Fraction]
    log_length: float


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def _column(Q: MatrixSpec, k: int, exact: bool) -> ColumnSpec:
    col = column_at(Q, k)
    return col if exact else col.as_float


def decode(digits, Q: MatrixSpec, exact: bool = True) -> Decoded:
    """Left endpoint of the cylinder of ``digits`` and its log-length.

    Any infinite continuation of ``digits`` lies within
    ``[value, value + exp(log_length)]``.  With ``exact=False`` rational
    weights are converted to floats first.
    """
    terms = []
    length = 1
    log_length = 0.0
    for k, i in enumerate(_as_digits(digits), start=1):
        col = _column(Q, k, exact)
        if i < 0 or (col.size is not None and i >= col.size):
            raise DigitOutOfRange(f"digit {i} at rank {k} outside alphabet of size {col.size}")
        terms.append(col.cumulative(i) * length)
        q = col.weight(i)
        length = length * q
        log_length += _log(q)
    return Decoded(_total(terms) if terms else 0, log_length)


def cylinder_of(prefix, Q: MatrixSpec) -> Cylinder:
    digits = _as_digits(prefix)
    left, log_length = decode(digits, Q)
    length = 1
    for k, i in enumerate(digits, start=1):
        length = length * column_at(Q, k).weight(i)
    return Cylinder(DigitSequence(digits), left, log_length, len(digits), length)


def encode(x, Q: MatrixSpec, depth: Optional[int] = None) -> DigitSequence:
    """Canonical digits of ``x``.

    At each rank the renormalised remainder picks the digit whose half-open
    cell contains it (remainder 1 goes to the last digit), so doubly
    represented endpoints get the expansion ending in zeros.  With
    ``depth=None`` the expansion runs to rank 64 or until the cylinder is
    shorter than ``MIN_LENGTH``.  A rational ``x`` on a rational matrix is
    expanded exactly; a float ``x`` uses float cell boundaries.
    """
    if not 0 <= x <= 1:
        raise ValueError(f"x = {x!r} outside [0, 1]")
    exact = is_exact(x)
    limit = DEFAULT_DEPTH if depth is None else depth
    stop = math.log(MIN_LENGTH) if depth is None else -math.inf
    r = x
    digits = []
    log_length = 0.0
    for k in range(1, limit + 1):
        # once the remainder is 0 every later digit is 0; float weights suffice
        col = _column(Q, k, exact and r != 0)
        i = col.locate(r)
        q = col.weight(i)
        r = (r - col.cumulative(i)) / q
        if r < 0:
            r = 0 * r
        elif r > 1:
            r = 1 + 0 * r
        log_length += _log(q)
        if log_length < _LOG_FLOOR:
            raise DepthOverflow(f"cylinder length underflows at rank {k}; lower the depth")
        digits.append(i)
        if log_length < stop:
            break
    return DigitSequence(tuple(digits))


def transport(x, Q_src: MatrixSpec, Q_dst: MatrixSpec, depth: int = DEFAULT_DEPTH):
    """Re-read the digits of ``x`` under ``Q_src`` as digits under ``Q_dst``."""
    for k in range(1, depth + 1):
        a, b = Q_src.size_at(k), Q_dst.size_at(k)
        if a != b:
            raise AlphabetMismatch(f"rank {k}: alphabet sizes {a} and {b} differ")
    return decode(encode(x, Q_src, depth), Q_dst, is_exact(x)).value


def cylinders(Q: MatrixSpec, rank: int, allowed=None):
    """Yield every rank-``rank`` cylinder, optionally restricted per rank.

    ``allowed(k)`` returns the admissible digits at rank k.
    """
    def walk(k, digits, left, length, log_length):
        if k > rank:
            yield Cylinder(DigitSequence(tuple(digits)), left, log_length, rank, length)
            return
        col = column_at(Q, k)
        if col.is_lazy:
            raise SpecError("cannot enumerate cylinders of a countable column")
        pool = range(col.size) if allowed is None else sorted(allowed(k))
        for i in pool:
            q = col.weight(i)
            yield from walk(k + 1, digits + [i], left + col.cumulative(i) * length,
                            length * q, log_length + _log(q))

    yield from walk(1, [], 0, 1, 0.0)
