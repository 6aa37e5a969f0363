"""Digit-restricted sets: Lebesgue measure, covers and Hausdorff dimension."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from . import core, series
from .errors import CoverTooLarge, IncompatibleTail, SpecError, UndefinedRatio

DEFAULT_COVER_CAP = 10 ** 7


def cover_cap() -> int:
    """Cover-size limit, overridable through ``QTILDE_CAP``."""
    return int(os.environ.get("QTILDE_CAP", DEFAULT_COVER_CAP))


@dataclass(frozen=True)
class DigitSelector:
    """Admissible digits per rank: ``prefix[k-1]`` for k <= len(prefix), ``tail`` after."""

    prefix: tuple = ()
    tail: frozenset = frozenset()

    def __post_init__(self):
        prefix = tuple(frozenset(v) for v in self.prefix)
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", frozenset(self.tail))
        if any(not v for v in prefix) or not self.tail:
            raise SpecError("every digit subset must be non-empty")

    @classmethod
    def uniform(cls, digits) -> "DigitSelector":
        return cls((), frozenset(digits))

    def at(self, k: int) -> frozenset:
        return self.prefix[k - 1] if k <= len(self.prefix) else self.tail


@dataclass(frozen=True)
class FrequencyVector:
    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if any(x < 0 for x in v) or abs(math.fsum(v) - 1) > 1e-9:
            raise ValueError(f"frequencies must be non-negative and sum to 1, got {v}")

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


def _check_selector(Q: core.MatrixSpec, V: DigitSelector, upto: int) -> None:
    for k in range(1, upto + 1):
        size = Q.size_at(k)
        if size is None:
            raise IncompatibleTail(f"column {k} is countable; selectors need finite columns")
        if max(V.at(k)) >= size or min(V.at(k)) < 0:
            raise SpecError(f"selector at rank {k} names digits outside 0..{size - 1}")


def selection_deficit(Q: core.MatrixSpec, V: DigitSelector) -> series.DeficitSequence:
    """W_k = total Q-weight of the digits excluded at rank k."""
    start = max(Q.tail_start, len(V.prefix))
    _check_selector(Q, V, start + 1)
    prefix = []
    for k in range(1, start + 1):
        col = core.column_at(Q, k)
        prefix.append(core._total(col.weight(i) for i in range(col.size) if i not in V.at(k)))
    try:
        profile = Q.tail.profile()
    except SpecError as exc:
        raise IncompatibleTail(str(exc)) from exc
    excluded = [profile[i] for i in range(len(profile)) if i not in V.tail]
    offset = core._total(a for a, _ in excluded) if excluded else 0
    scale = core._total(b for _, b in excluded) if excluded else 0
    rate = Q.tail.rate()
    if scale == 0 or isinstance(rate, series.ZeroTail):
        tail = series.ConstantTail(offset) if offset else series.ZeroTail()
    elif offset == 0:
        tail = series.AffineTail(0, scale, rate)
    else:
        tail = series.AffineTail(offset, scale, rate)
    return series.DeficitSequence(tuple(prefix), tail)


def gamma_measure(Q: core.MatrixSpec, V: DigitSelector) -> series.ProductVerdict:
    """Lebesgue measure of the set of points using only selected digits."""
    return series.infinite_product(selection_deficit(Q, V))


def gamma_prefix_cover(Q: core.MatrixSpec, V: DigitSelector, rank: int, cap: int = None) -> list:
    """All rank-``rank`` cylinders whose digits are admissible."""
    if rank < 1:
        raise ValueError("rank must be at least 1")
    _check_selector(Q, V, rank)
    cap = cover_cap() if cap is None else cap
    count = math.prod(len(V.at(k)) for k in range(1, rank + 1))
    if count > cap:
        raise CoverTooLarge(f"cover has {count} cylinders, cap is {cap}")
    return list(core.cylinders(Q, rank, V.at))


class MoranRoot(NamedTuple):
    dimension: float
    degenerate: bool


def moran_dimension(q_limit: Sequence[float], V0, tol: float = 1e-12) -> MoranRoot:
    """Root x in [0, 1] of sum_{i in V0} q_i**x = 1, found by bisection.

    Limits equal to zero on a selected digit make the equation degenerate; the
    result is then dimension 0 with ``degenerate=True``.
    """
    q = [float(v) for v in q_limit]
    V0 = sorted(set(V0))
    if not V0:
        raise ValueError("V0 must be non-empty")
    if any(v < 0 or v > 1 for v in q) or abs(math.fsum(q) - 1) > 1e-9:
        raise ValueError(f"limit weights must lie in [0, 1] and sum to 1, got {q}")
    chosen = [q[i] for i in V0]
    if any(v == 0 for v in chosen):
        return MoranRoot(0.0, True)
    if len(chosen) == 1:
        return MoranRoot(0.0, False)
    if abs(math.fsum(chosen) - 1) <= 1e-15:
        return MoranRoot(1.0, False)

    def g(x):
        return math.fsum(v ** x for v in chosen) - 1

    lo, hi = 0.0, 1.0
    while hi - lo > tol * 1e-3:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return MoranRoot(0.5 * (lo + hi), False)


def _entropy_ratio(nu: Sequence[float], q: Sequence[float]) -> float:
    num = math.fsum(v * math.log(v) for v in nu if v > 0)
    if any(v > 0 and w <= 0 for v, w in zip(nu, q)):
        raise ValueError("positive frequency on a digit with zero weight")
    den = math.fsum(v * math.log(w) for v, w in zip(nu, q) if v > 0)
    if den == 0:
        raise UndefinedRatio("all frequency sits on digits of weight 1")
    return num / den


def frequency_set_dimension(q_limit: Sequence[float], nu) -> float:
    """Dimension of the points whose digit frequencies converge to ``nu``."""
    nu = nu if isinstance(nu, FrequencyVector) else FrequencyVector(tuple(nu))
    if len(nu) != len(q_limit):
        raise ValueError("frequency vector and weights differ in length")
    return _entropy_ratio(list(nu), [float(v) for v in q_limit])


def gamma_dimension(Q: core.MatrixSpec, V0) -> MoranRoot:
    """Dimension of the set using digits ``V0`` at every rank, via the tail limit."""
    sizes = {Q.size_at(k) for k in range(1, Q.tail_start + 2)}
    if len(sizes) != 1 or None in sizes:
        raise IncompatibleTail("dimension needs one finite alphabet shared by all columns")
    return moran_dimension(Q.limit(), V0)
