"""Infinite products of the form prod(1 - a_k) and the matching series sum(a_k).

Whether such a product vanishes is decided symbolically from the declared
shape of the tail of ``a_k``; floating point only ever evaluates magnitudes.
For ``0 <= a_k < 1`` the product is zero exactly when the series diverges.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import UndeclaredTail

#: target for the certified remainder of a convergent tail
TAIL_TOLERANCE = 1e-12
#: hard stop for numerically summed tails
MAX_TERMS = 1 << 24


@dataclass(frozen=True)
class ZeroTail:
    """a_k = 0."""

    def values(self, k: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(k))

    def describe(self) -> str:
        return "zero tail"


@dataclass(frozen=True)
class ConstantTail:
    """a_k = a."""

    a: float

    def values(self, k: np.ndarray) -> np.ndarray:
        return np.full(np.shape(k), float(self.a))

    def describe(self) -> str:
        return f"constant tail a={float(self.a):.12g}"


@dataclass(frozen=True)
class GeometricTail:
    """a_k = c * r**k."""

    c: float
    r: float

    def values(self, k: np.ndarray) -> np.ndarray:
        return float(self.c) * np.power(float(self.r), np.asarray(k, dtype=float))

    def describe(self) -> str:
        return f"geometric tail {float(self.c):.12g}*{float(self.r):.12g}^k"


@dataclass(frozen=True)
class HarmonicTail:
    """a_k = c / (k + m)."""

    c: float
    m: float

    def values(self, k: np.ndarray) -> np.ndarray:
        return float(self.c) / (np.asarray(k, dtype=float) + float(self.m))

    def describe(self) -> str:
        return f"harmonic tail {float(self.c):.12g}/(k+{float(self.m):.12g})"


Rate = Union[ZeroTail, GeometricTail, HarmonicTail]


@dataclass(frozen=True)
class AffineTail:
    """a_k = offset + scale * t_k with t_k one of the elementary rates.

    Arises when a deficit collects several matrix entries driven by the
    same tail rule.
    """

    offset: float
    scale: float
    inner: Rate

    def values(self, k: np.ndarray) -> np.ndarray:
        return float(self.offset) + float(self.scale) * self.inner.values(k)

    def describe(self) -> str:
        return (f"affine tail {float(self.offset):.12g} + "
                f"{float(self.scale):.12g} * ({self.inner.describe()})")


@dataclass(frozen=True)
class GeneratorTail:
    """User-supplied a_k with an optional declared summability class.

    ``fn`` must accept a float array of ranks.  ``decay`` is
    ``("geometric", r)`` or ``("power", s)`` and drives the remainder
    estimate when the product is evaluated.
    """

    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    summable: Optional[bool] = None
    decay: Optional[tuple] = None
    label: str = "generator"

    def values(self, k: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(k, dtype=float)), dtype=float)

    def describe(self) -> str:
        return f"{self.label} tail"


Tail = Union[ZeroTail, ConstantTail, GeometricTail, HarmonicTail, AffineTail, GeneratorTail]


@dataclass(frozen=True)
class DeficitSequence:
    """a_1..a_K given explicitly, followed by a tail rule for k > K.

    Tail rules are evaluated at the absolute rank ``k``.
    """

    prefix: tuple = ()
    tail: Tail = ZeroTail()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        for a in self.prefix:
            if not 0 <= a < 1:
                raise ValueError(f"deficit {a!r} outside [0, 1)")

    def term(self, k: int) -> float:
        if k <= len(self.prefix):
            return float(self.prefix[k - 1])
        return float(self.tail.values(np.array([float(k)]))[0])

    def terms(self, n: int) -> np.ndarray:
        head = np.asarray([float(a) for a in self.prefix[:n]], dtype=float)
        if n <= len(self.prefix):
            return head
        ks = np.arange(len(self.prefix) + 1, n + 1, dtype=float)
        return np.concatenate([head, self.tail.values(ks)])


class Verdict(enum.Enum):
    ZERO = "zero"
    POSITIVE = "positive"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ProductVerdict:
    verdict: Verdict
    value: Optional[float]
    error_bound: Optional[float]
    argument: str
    terms: int = 0

    @property
    def is_zero(self) -> bool:
        return self.verdict is Verdict.ZERO

    @property
    def is_positive(self) -> bool:
        return self.verdict is Verdict.POSITIVE

    @property
    def is_inconclusive(self) -> bool:
        return self.verdict is Verdict.INCONCLUSIVE

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "value": self.value,
            "error_bound": self.error_bound,
            "terms": self.terms,
            "argument": self.argument,
        }


def _series_class(tail: Tail) -> Optional[bool]:
    if isinstance(tail, ZeroTail):
        return True
    if isinstance(tail, ConstantTail):
        return tail.a == 0
    if isinstance(tail, GeometricTail):
        return True
    if isinstance(tail, HarmonicTail):
        return tail.c == 0
    if isinstance(tail, AffineTail):
        if tail.offset > 0:
            return False
        if tail.scale == 0:
            return True
        return _series_class(tail.inner)
    if isinstance(tail, GeneratorTail):
        return tail.summable
    raise TypeError(f"unknown tail {tail!r}")


def series_converges(d: DeficitSequence) -> bool:
    """True iff sum(a_k) is finite; decided from the tail rule alone."""
    verdict = _series_class(d.tail)
    if verdict is None:
        raise UndeclaredTail(f"{d.tail.describe()} has no declared summability class")
    return verdict


def _decay(tail: Tail) -> tuple:
    """Decay descriptor of a summable tail: ("zero",) / ("geometric", r, exact) / ("power", s)."""
    if isinstance(tail, ZeroTail):
        return ("zero",)
    if isinstance(tail, ConstantTail):
        return ("zero",)
    if isinstance(tail, HarmonicTail):
        return ("zero",)
    if isinstance(tail, GeometricTail):
        return ("geometric", float(tail.r), True)
    if isinstance(tail, AffineTail):
        if tail.scale == 0:
            return ("zero",)
        return _decay(tail.inner)
    if isinstance(tail, GeneratorTail):
        if tail.decay is None:
            return ("power", 2.0)
        kind, rate = tail.decay
        if kind == "geometric":
            return ("geometric", float(rate), False)
        return ("power", float(rate))
    raise TypeError(f"unknown tail {tail!r}")


def _log_tail(tail: Tail, start: int) -> tuple[float, float, int]:
    """Sum of log(1 - a_k) for k > start, with a bound on the neglected remainder.

    Returns (log_sum, remainder_bound, last_rank_summed).
    """
    decay = _decay(tail)
    if decay[0] == "zero":
        return 0.0, 0.0, start
    partial = []
    k = start + 1
    block = 64
    bound = math.inf
    while k <= MAX_TERMS:
        ks = np.arange(k, k + block, dtype=float)
        partial.append(float(np.sum(np.log1p(-tail.values(ks)))))
        k += block
        a_next = float(tail.values(np.array([float(k)]))[0])
        if a_next >= 1:
            bound = math.inf
        elif decay[0] == "geometric":
            r = decay[1]
            # -log(1-a) <= a/(1-a); tail dominated by a_next * sum r^j
            bound = a_next / ((1 - r) * (1 - a_next))
            if not decay[2]:
                bound *= 2
        else:
            s = decay[1]
            # Euler-Maclaurin estimate of sum_{j>=k} a_j for a_j ~ A j^-s
            estimate = a_next * k / (s - 1) + a_next / 2
            if a_next * k / (s - 1) < TAIL_TOLERANCE or k + block > MAX_TERMS:
                partial.append(-estimate)
                bound = 16 * a_next + TAIL_TOLERANCE * estimate
                return math.fsum(partial), bound, k - 1
        if bound < TAIL_TOLERANCE:
            return math.fsum(partial), bound, k - 1
        block = min(block * 2, 1 << 20)
    return math.fsum(partial), bound, k - 1


def partial_product(d: DeficitSequence, n: int) -> float:
    """prod_{k<=n} (1 - a_k) in floating point."""
    return math.exp(math.fsum(np.log1p(-d.terms(n)).tolist()))


def infinite_product(d: DeficitSequence) -> ProductVerdict:
    """Decide and, when positive, evaluate prod_{k>=1} (1 - a_k)."""
    converges = _series_class(d.tail)
    what = d.tail.describe()
    if converges is None:
        return ProductVerdict(Verdict.INCONCLUSIVE, None, None,
                              f"{what}: summability undeclared", len(d.prefix))
    if not converges:
        return ProductVerdict(Verdict.ZERO, 0.0, 0.0,
                              f"{what}: sum a_k diverges, product vanishes", len(d.prefix))
    head = math.fsum(math.log1p(-float(a)) for a in d.prefix)
    tail_sum, bound, last = _log_tail(d.tail, len(d.prefix))
    value = math.exp(head + tail_sum)
    # float summation error on top of the analytic remainder
    rounding = 16 * math.ulp(1.0) * (abs(head) + abs(tail_sum) + 1) * value
    error = value * (math.expm1(bound) if bound < 1 else math.inf) + rounding
    if head == 0 and tail_sum == 0 and bound == 0:
        error = 0.0
    return ProductVerdict(Verdict.POSITIVE, value, error,
                          f"{what}: sum a_k converges, product positive", last)
