"""Brute-force checks in exact rational arithmetic.

Random specs are drawn with every weight a square of a rational
(``w_i = x_i**2`` for a rational point ``x`` on the unit sphere), so square
roots of products of weights stay rational and identities involving
``sqrt(p q)`` can be compared with ``==``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import core, fractals, measures
from .core import ColumnSpec, Constant, MatrixSpec, OneDigitGeometric, OneDigitHarmonic
from .errors import NotConstantColumns, SpecError
from .measures import MeasureSpec


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "cases": self.cases,
                "detail": self.detail}


def exact_sqrt(x: Fraction) -> Fraction:
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n != x.numerator or d * d != x.denominator:
        raise ValueError(f"{x} is not a square of a rational")
    return Fraction(n, d)


def sphere_column(rng: random.Random, size: int, zeros: int = 0) -> tuple:
    """Random rational weights summing to 1, each a perfect square.

    Inverse stereographic projection of a rational point gives a rational
    point on the unit sphere; its squared coordinates are the weights.
    ``zeros`` coordinates are forced to 0 before shuffling.
    """
    live = size - zeros
    if live < 1:
        raise ValueError("a column needs at least one positive weight")
    while True:
        t = [Fraction(rng.randint(1, 12), rng.randint(1, 12)) for _ in range(live - 1)]
        norm = sum((v * v for v in t), Fraction(0))
        x = [2 * v / (norm + 1) for v in t] + [(norm - 1) / (norm + 1)]
        w = [v * v for v in x]
        if all(w):
            break
    w += [Fraction(0)] * zeros
    rng.shuffle(w)
    return tuple(w)


def random_measure(rng: random.Random, ranks: int = 6, sizes=(2, 3, 4),
                   zeros: bool = True) -> MeasureSpec:
    """Explicit columns up to ``ranks`` and a constant tail; P may contain zeros."""
    dims = [rng.choice(sizes) for _ in range(ranks + 1)]

    def pcol(s):
        z = rng.randint(0, s - 1) if zeros and rng.random() < 0.3 else 0
        return ColumnSpec(sphere_column(rng, s, z))

    qs = [ColumnSpec(sphere_column(rng, s)) for s in dims]
    ps = [pcol(s) for s in dims]
    Q = MatrixSpec(tuple(qs[:-1]), Constant(qs[-1]), "Q")
    P = MatrixSpec(tuple(ps[:-1]), Constant(ps[-1]), "P")
    return MeasureSpec(Q, P)


def _simplex(rng: random.Random, size: int, zeros: int = 0) -> tuple:
    raw = [rng.randint(1, 9) for _ in range(size - zeros)] + [0] * zeros
    rng.shuffle(raw)
    return tuple(Fraction(v, sum(raw)) for v in raw)


def _tail_rule(rng: random.Random, size: int, kind: str):
    zeros = rng.randint(0, size - 1) if kind == "P" and rng.random() < 0.5 else 0
    rule = rng.choice(["constant", "geometric", "harmonic"])
    if rule == "constant":
        return Constant(ColumnSpec(_simplex(rng, size, zeros)))
    digit = rng.randrange(size)
    split = _simplex(rng, size - 1, min(zeros, size - 2))
    complement = rng.random() < 0.5
    if rule == "geometric":
        return OneDigitGeometric(digit, Fraction(rng.randint(1, 4), 4), complement, split,
                                 r=Fraction(rng.randint(1, 4), 5))
    return OneDigitHarmonic(digit, Fraction(rng.randint(1, 3), 2), complement, split,
                            offset=rng.randint(1, 4))


def _related_rule(rng: random.Random, q_rule, size: int):
    """A P tail that shares Q's tail often enough to reach every class."""
    u = rng.random()
    if u < 0.3:
        return q_rule
    if u < 0.45 and isinstance(q_rule, OneDigitGeometric) and not q_rule.complement:
        # drop the vanishing digit: support keeps a positive-length carrier
        rest = list(q_rule.split)
        rest.insert(q_rule.digit, Fraction(0))
        if size < 3 or rng.random() < 0.5:
            return Constant(ColumnSpec(tuple(rest)))
        # concentrate on another digit: atoms carried by a positive-length set
        e = rng.choice([i for i in range(size) if i != q_rule.digit])
        split = [w for i, w in enumerate(rest) if i != e]
        total = sum(split)
        return OneDigitGeometric(e, Fraction(1, 2), True, tuple(w / total for w in split),
                                 r=Fraction(1, 2))
    return _tail_rule(rng, size, "P")


def random_tail_measure(rng: random.Random, max_prefix: int = 3) -> MeasureSpec:
    """A valid measure with random prefixes and random tail rules for Q and P."""
    while True:
        size = rng.choice((2, 3, 4))
        n = rng.randint(0, max_prefix)
        qpre = tuple(ColumnSpec(_simplex(rng, size)) for _ in range(n))
        ppre = tuple(ColumnSpec(_simplex(rng, size, rng.randint(0, size - 1))) for _ in range(n))
        try:
            Q = MatrixSpec(qpre, _tail_rule(rng, size, "Q"), "Q")
            P = MatrixSpec(ppre, _related_rule(rng, Q.tail, size), "P")
            return MeasureSpec(Q, P)
        except SpecError:
            continue


def check_additivity(Q: MatrixSpec, rank: int) -> Optional[str]:
    """Children of every cylinder below ``rank`` tile their parent exactly."""
    for n in range(0, rank):
        for cyl in core.cylinders(Q, n) if n else [core.cylinder_of((), Q)]:
            col = core.column_at(Q, n + 1)
            kids = [core.cylinder_of(cyl.prefix.digits + (i,), Q) for i in range(col.size)]
            if sum(c.length for c in kids) != cyl.length:
                return f"lengths under {cyl.prefix.digits} do not add up"
            if kids[0].left != cyl.left or kids[-1].right != cyl.right:
                return f"children of {cyl.prefix.digits} do not span it"
            if any(a.right != b.left for a, b in zip(kids, kids[1:])):
                return f"children of {cyl.prefix.digits} overlap or leave gaps"
    return None


def check_kakutani(m: MeasureSpec, rank: int) -> Optional[str]:
    """sum over rank-n cylinders of sqrt(mu * lambda) equals the product of affinities."""
    for n in range(1, rank + 1):
        lhs = sum((exact_sqrt(measures.cylinder_mass(m, c.prefix) * c.length)
                   for c in core.cylinders(m.Q, n)), Fraction(0))
        rhs = Fraction(1)
        for k in range(1, n + 1):
            p, q = core.column_at(m.P, k), core.column_at(m.Q, k)
            rhs *= sum((exact_sqrt(a * b) for a, b in zip(p.weights, q.weights)), Fraction(0))
        if lhs != rhs or measures.rho_partial(m, n) != rhs:
            return f"rank {n}: {lhs} != {rhs}"
    return None


def check_cdf_mass(m: MeasureSpec, rank: int, depth: int = core.DEFAULT_DEPTH) -> Optional[str]:
    """F(right) - F(left) equals the cylinder mass for every cylinder up to ``rank``."""
    for n in range(1, rank + 1):
        for c in core.cylinders(m.Q, n):
            diff = measures.cdf(m, c.right, depth) - measures.cdf(m, c.left, depth)
            if diff != measures.cylinder_mass(m, c.prefix):
                return f"cylinder {c.prefix.digits}: {diff} != mass"
    return None


def check_cover(Q: MatrixSpec, V: fractals.DigitSelector, rank: int) -> Optional[str]:
    """The admissible rank-n cylinders have total length prod_k sum_{i in V_k} q_ik."""
    for n in range(1, rank + 1):
        total = sum((c.length for c in fractals.gamma_prefix_cover(Q, V, n)), Fraction(0))
        expected = math.prod((sum(core.column_at(Q, k).weight(i) for i in V.at(k))
                              for k in range(1, n + 1)), start=Fraction(1))
        if total != expected:
            return f"rank {n}: cover length {total} != {expected}"
    return None


def check_self_similarity(m: MeasureSpec, rank: int) -> Optional[str]:
    residual = measures.self_similarity_residual(m, rank)
    return None if residual == 0 else f"residual {residual}"


def _is_constant(m: MeasureSpec) -> bool:
    try:
        m.constant_columns()
    except NotConstantColumns:
        return False
    return True


def _tally(name: str, failures: list, cases: int) -> OracleResult:
    return OracleResult(name, not failures, cases, "; ".join(failures[:3]))


def run_suite(seed: int = 42, specs: int = 20, rank: int = 4) -> list:
    """All oracle checks on ``specs`` random rational specs plus the constant fixtures."""
    rng = random.Random(seed)
    pool = [random_measure(rng, rank) for _ in range(specs)]
    results = []
    checks = [
        ("cylinder_additivity", lambda m: check_additivity(m.Q, rank)),
        ("kakutani_finite_rank", lambda m: check_kakutani(m, rank)),
        ("cdf_mass_consistency", lambda m: check_cdf_mass(m, rank)),
        ("cover_consistency",
         lambda m: check_cover(m.Q, measures.support_selector(m), rank)),
    ]
    for name, fn in checks:
        failures = [f"spec {j}: {msg}" for j, m in enumerate(pool) if (msg := fn(m))]
        results.append(_tally(name, failures, len(pool)))
    from . import fixtures
    constant = [f.measure for f in fixtures.FIXTURES.values()
                if f.measure is not None and _is_constant(f.measure)]
    failures = [f"{j}: {msg}" for j, m in enumerate(constant)
                if (msg := check_self_similarity(m, rank))]
    results.append(_tally("self_similarity", failures, len(constant)))
    return results
