"""Law of a random point whose digits are independent with column laws from P.

Spectral type follows from two infinite products: the Hellinger affinity
``rho = prod_k sum_i sqrt(p_ik q_ik)`` against Lebesgue measure and the
atom weight ``prod_k max_i p_ik``.  The support type follows from which
digits P forbids and how much Q-length they carry.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional

import numpy as np

from . import core, fractals, series
from .core import MatrixSpec, column_at
from .errors import (AlphabetMismatch, IncompatibleTail, InconclusiveVerdict, NotConstantColumns,
                     SpecError, SpecInconsistency)


@dataclass(frozen=True)
class MeasureSpec:
    Q: MatrixSpec
    P: MatrixSpec

    def __post_init__(self):
        core.validate_matrix(self.Q, "Q")
        core.validate_matrix(self.P, "P")
        for k in range(1, max(self.Q.tail_start, self.P.tail_start) + 2):
            a, b = self.Q.size_at(k), self.P.size_at(k)
            if a != b:
                raise AlphabetMismatch(f"rank {k}: Q has {a} digits, P has {b}")

    @property
    def tail_start(self) -> int:
        return max(self.Q.tail_start, self.P.tail_start)

    def constant_columns(self) -> tuple:
        """``(p, q)`` when both matrices repeat a single finite column."""
        p, q = self.P.constant_column(), self.Q.constant_column()
        if p is None or q is None or p.is_lazy or q.is_lazy:
            raise NotConstantColumns("measure is not built from one repeated column")
        return p.weights, q.weights

    def to_json(self) -> dict:
        return {"q_matrix": self.Q.to_json(), "p_matrix": self.P.to_json()}

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def measure_from_json(obj: dict) -> MeasureSpec:
    try:
        q, p = obj["q_matrix"], obj["p_matrix"]
    except (KeyError, TypeError) as exc:
        raise SpecError(f"measure document needs q_matrix and p_matrix: {exc}") from exc
    return MeasureSpec(core.matrix_from_json({**q, "kind": "Q"}),
                       core.matrix_from_json({**p, "kind": "P"}))


def load_measure(path) -> MeasureSpec:
    with open(path) as fh:
        return measure_from_json(json.load(fh))


# -- tail asymptotics ------------------------------------------------------

class _Decay(enum.IntEnum):
    ZERO = 0
    GEOMETRIC = 1
    POWER = 2
    DIVERGENT = 3


def _profiles(m: MeasureSpec):
    try:
        pp, qp = m.P.tail.profile(), m.Q.tail.profile()
    except SpecError as exc:
        raise IncompatibleTail(str(exc)) from exc
    return pp, qp, m.P.tail.rate(), m.Q.tail.rate()


def _active(beta, rate):
    """The rate driving an entry, or None for an entry constant in k."""
    if beta == 0 or isinstance(rate, series.ZeroTail):
        return None
    return rate


def _same_drift(pb, pr, qb, qr) -> bool:
    """Whether pb * tP_k and qb * tQ_k are the same sequence."""
    if pr is None or qr is None:
        return pr is None and qr is None
    if type(pr) is not type(qr) or pb * pr.c != qb * qr.c:
        return False
    if isinstance(pr, series.GeometricTail):
        return pr.r == qr.r
    return pr.m == qr.m


def _worst(classes):
    kind = max(c[0] for c in classes)
    if kind == _Decay.GEOMETRIC:
        return kind, max(c[1] for c in classes if c[0] == kind)
    if kind == _Decay.POWER:
        return kind, min(c[1] for c in classes if c[0] == kind)
    return kind, None


def _hellinger_class(pe, qe, p_rate, q_rate):
    """Summability of (sqrt(p_k) - sqrt(q_k))**2 for one digit's tail entries."""
    (pa, pb), (qa, qb) = pe, qe
    pr, qr = _active(pb, p_rate), _active(qb, q_rate)
    if pa != qa:
        return _Decay.DIVERGENT, None
    if _same_drift(pb, pr, qb, qr):
        return _Decay.ZERO, None
    harmonic = [r for r in (pr, qr) if isinstance(r, series.HarmonicTail)]
    ratio = max([float(r.r) for r in (pr, qr) if isinstance(r, series.GeometricTail)], default=0.0)
    if pa > 0:
        # difference of order t_k, squared
        return (_Decay.POWER, 2.0) if harmonic else (_Decay.GEOMETRIC, ratio)
    if not harmonic:
        return _Decay.GEOMETRIC, ratio
    if len(harmonic) == 2 and pb * pr.c == qb * qr.c:
        # same leading 1/k term; square roots differ at order k^-3/2
        return _Decay.POWER, 3.0
    return _Decay.DIVERGENT, None


def _hellinger_deficit(pcol: core.ColumnSpec, qcol: core.ColumnSpec) -> float:
    total = 0.0
    for p, q in zip(pcol.weights, qcol.weights):
        p, q = float(p), float(q)
        if p != q:
            total += (p - q) ** 2 / (math.sqrt(p) + math.sqrt(q)) ** 2
    return 0.5 * total


def _sqrt(x):
    """Exact square root of a perfect-square rational, float otherwise."""
    if isinstance(x, Rational):
        x = Fraction(x)
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(x)


def affinity(pcol: core.ColumnSpec, qcol: core.ColumnSpec):
    """sum_i sqrt(p_i q_i) for one column pair."""
    return core._total(_sqrt(p * q) for p, q in zip(pcol.weights, qcol.weights))


def rho_partial(m: MeasureSpec, K: int):
    """prod_{k<=K} sum_i sqrt(p_ik q_ik); exact for perfect-square rationals."""
    out = 1
    for k in range(1, K + 1):
        out = out * affinity(column_at(m.P, k), column_at(m.Q, k))
    return out


def rho_deficit(m: MeasureSpec) -> series.DeficitSequence:
    """Deficits 1 - sum_i sqrt(p_ik q_ik), written as half the squared Hellinger distance."""
    pp, qp, p_rate, q_rate = _profiles(m)
    start = m.tail_start
    prefix = [_hellinger_deficit(column_at(m.P, k), column_at(m.Q, k)) for k in range(1, start + 1)]
    kind, rate = _worst([_hellinger_class(pe, qe, p_rate, q_rate) for pe, qe in zip(pp, qp)])
    if kind == _Decay.ZERO:
        return series.DeficitSequence(tuple(prefix), series.ZeroTail())

    pa = np.array([float(a) for a, _ in pp])[:, None]
    pb = np.array([float(b) for _, b in pp])[:, None]
    qa = np.array([float(a) for a, _ in qp])[:, None]
    qb = np.array([float(b) for _, b in qp])[:, None]

    def fn(k):
        p = np.clip(pa + pb * p_rate.values(k)[None, :], 0.0, 1.0)
        q = np.clip(qa + qb * q_rate.values(k)[None, :], 0.0, 1.0)
        num = (p - q) ** 2
        den = (np.sqrt(p) + np.sqrt(q)) ** 2
        return 0.5 * np.sum(np.divide(num, den, out=np.zeros_like(num), where=den > 0), axis=0)

    if kind == _Decay.DIVERGENT:
        gen = series.GeneratorTail(fn, summable=False, label="Hellinger deficit, non-summable")
    elif kind == _Decay.GEOMETRIC:
        gen = series.GeneratorTail(fn, summable=True, decay=("geometric", rate),
                                   label=f"Hellinger deficit, geometric decay ratio <= {rate:.6g}")
    else:
        gen = series.GeneratorTail(fn, summable=True, decay=("power", rate),
                                   label=f"Hellinger deficit, decay k^-{rate:g}")
    return series.DeficitSequence(tuple(prefix), gen)


def rho(m: MeasureSpec) -> series.ProductVerdict:
    return series.infinite_product(rho_deficit(m))


def p_max(m: MeasureSpec) -> series.ProductVerdict:
    return series.infinite_product(core.column_max_deficit(m.P))


# -- classification ------------------------------------------------------------

class Spectral(enum.Enum):
    PURE_POINT = "pure_point"
    ABSOLUTELY_CONTINUOUS = "absolutely_continuous"
    SINGULAR_CONTINUOUS = "singular_continuous"


@dataclass(frozen=True)
class SpectralType:
    kind: Spectral
    rho: series.ProductVerdict
    p_max: series.ProductVerdict


def classify_spectral(m: MeasureSpec) -> SpectralType:
    r, pm = rho(m), p_max(m)
    for name, v in (("rho", r), ("P_max", pm)):
        if v.is_inconclusive:
            raise InconclusiveVerdict(f"{name}: {v.argument}")
    if r.is_positive and pm.is_positive:
        raise SpecInconsistency("rho > 0 and P_max > 0 cannot both hold")
    if r.is_positive:
        kind = Spectral.ABSOLUTELY_CONTINUOUS
    elif pm.is_positive:
        kind = Spectral.PURE_POINT
    else:
        kind = Spectral.SINGULAR_CONTINUOUS
    return SpectralType(kind, r, pm)


class Topo(enum.Enum):
    S = "S"
    C = "C"
    P = "P"


@dataclass(frozen=True)
class TopoType:
    kind: Topo
    zero_columns_in_prefix: int
    zeros_in_tail: bool
    forbidden_length: Optional[series.ProductVerdict]
    argument: str


def support_selector(m: MeasureSpec) -> fractals.DigitSelector:
    """Digits with positive probability, rank by rank."""
    prefix = []
    for k in range(1, m.tail_start + 1):
        col = column_at(m.P, k)
        prefix.append(frozenset(i for i, w in enumerate(col.weights) if w != 0))
    pp = m.P.tail.profile()
    tail = frozenset(i for i, (a, b) in enumerate(pp) if a != 0 or b != 0)
    return fractals.DigitSelector(tuple(prefix), tail)


def classify_topological(m: MeasureSpec) -> TopoType:
    """S, C or P type of the topological support."""
    _profiles(m)
    V = support_selector(m)
    sizes = [m.P.size_at(k) for k in range(1, m.tail_start + 1)]
    in_prefix = sum(len(v) < n for v, n in zip(V.prefix, sizes))
    in_tail = len(V.tail) < m.P.tail.size
    if not in_tail:
        return TopoType(Topo.S, in_prefix, False, None,
                        f"only {in_prefix} column(s) contain zero p-entries")
    deficit = fractals.selection_deficit(m.Q, V)
    length = series.infinite_product(deficit)
    if series.series_converges(deficit):
        kind = Topo.P
        why = "sum of Q-weight on forbidden digits converges"
    else:
        kind = Topo.C
        why = "sum of Q-weight on forbidden digits diverges"
    return TopoType(kind, in_prefix, True, length,
                    f"infinitely many columns with zero p-entries; {why} ({deficit.tail.describe()})")


@dataclass(frozen=True)
class RatioSeriesResult:
    converges: bool
    q_plus: bool
    argument: str


def _ratio_class(pe, qe, p_rate, q_rate):
    """Summability of (1 - p_k/q_k)**2 for one digit's tail entries."""
    (pa, pb), (qa, qb) = pe, qe
    pr, qr = _active(pb, p_rate), _active(qb, q_rate)
    if _same_drift(pb, pr, qb, qr) and pa == qa:
        return _Decay.ZERO
    if qa > 0:
        if pa != qa:
            return _Decay.DIVERGENT
        return _Decay.POWER if any(isinstance(r, series.HarmonicTail) for r in (pr, qr)) \
            else _Decay.GEOMETRIC
    # q_k -> 0
    if pa > 0 or pr is None:
        return _Decay.DIVERGENT
    if isinstance(pr, series.HarmonicTail) and isinstance(qr, series.HarmonicTail) \
            and pb * pr.c == qb * qr.c:
        return _Decay.POWER
    return _Decay.DIVERGENT


def remark3_series(m: MeasureSpec) -> RatioSeriesResult:
    """Convergence of sum_k sum_i (1 - p_ik/q_ik)**2 and whether inf q_ik > 0.

    Only under ``q_plus`` is convergence equivalent to rho > 0.
    """
    pp, qp, p_rate, q_rate = _profiles(m)
    q_plus = all(a > 0 for a, _ in qp)
    classes = [_ratio_class(pe, qe, p_rate, q_rate) for pe, qe in zip(pp, qp)]
    converges = max(classes) < _Decay.DIVERGENT
    bad = [i for i, c in enumerate(classes) if c == _Decay.DIVERGENT]
    why = "all digit terms summable" if converges else f"terms of digit(s) {bad} not summable"
    hyp = "inf q_ik > 0" if q_plus else "inf q_ik = 0, equivalence with rho > 0 not guaranteed"
    return RatioSeriesResult(converges, q_plus, f"{why}; {hyp}")


def distribution_dimension(p, q) -> float:
    """Hausdorff dimension of the law for constant columns: entropy ratio."""
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    if len(p) != len(q):
        raise ValueError("p and q differ in length")
    return fractals._entropy_ratio(p, q)


def measure_dimension(m: MeasureSpec) -> float:
    p, q = m.constant_columns()
    return distribution_dimension(p, q)


# -- distribution function, masses, quantiles -----------------------------------

def cylinder_mass(m: MeasureSpec, prefix):
    """mu(cylinder) = prod_s p_{i_s s}; exact for rational weights."""
    digits = core._as_digits(prefix)
    weights = []
    for k, i in enumerate(digits, start=1):
        col = column_at(m.P, k)
        if col.size is not None and not 0 <= i < col.size:
            raise core.DigitOutOfRange(f"digit {i} at rank {k}")
        weights.append(col.weight(i))
    if any(w == 0 for w in weights):
        return 0
    if all(isinstance(w, Rational) for w in weights):
        return math.prod(weights, start=Fraction(1))
    return math.exp(math.fsum(math.log(w) for w in weights))


def cdf(m: MeasureSpec, x, depth: int = core.DEFAULT_DEPTH):
    """mu([0, x]) up to the mass of the rank-``depth`` cylinder holding x."""
    if x <= 0:
        return 0
    if x >= 1:
        return 1
    digits = list(core.encode(x, m.Q, depth))
    # trailing zeros add cumulative(0) = 0
    while digits and digits[-1] == 0:
        digits.pop()
    exact = core.is_exact(x)
    terms = []
    mass = 1
    for k, i in enumerate(digits, start=1):
        col = core._column(m.P, k, exact)
        terms.append(col.cumulative(i) * mass)
        mass = mass * col.weight(i)
        if mass == 0:
            break
    return core._total(terms)


def quantile(m: MeasureSpec, u, depth: int = core.DEFAULT_DEPTH):
    """Digit-wise inverse of the distribution function.

    At each rank the renormalised level picks the P-cell containing it; the
    result is the left end of the final Q-cylinder.  Inside an atom's jump
    this lands on the atom.
    """
    if u <= 0:
        return 0
    exact = core.is_exact(u)
    digits = []
    r = min(u, 1)
    for k in range(1, depth + 1):
        col = core._column(m.P, k, exact)
        i = col.locate(r)
        w = col.weight(i)
        r = (r - col.cumulative(i)) / w
        r = min(max(r, 0 * r), 1 + 0 * r)
        digits.append(i)
    return core.decode(digits, m.Q, exact).value


def _dense(col: core.ColumnSpec):
    if col.is_lazy:
        raise IncompatibleTail("vectorised evaluation needs finite columns")
    w = np.array([float(v) for v in col.weights])
    cum = np.concatenate([[0.0], np.cumsum(w)])
    return w, cum


def cdf_array(m: MeasureSpec, xs, depth: int = core.DEFAULT_DEPTH) -> np.ndarray:
    """Vectorised :func:`cdf` in floating point."""
    xs = np.asarray(xs, dtype=float)
    r = np.clip(xs, 0.0, 1.0)
    F = np.zeros_like(r)
    mass = np.ones_like(r)
    for k in range(1, depth + 1):
        wq, cq = _dense(column_at(m.Q, k))
        wp, cp = _dense(column_at(m.P, k))
        i = np.clip(np.searchsorted(cq, r, side="right") - 1, 0, len(wq) - 1)
        i = np.where(r >= cq[-1], len(wq) - 1, i)
        r = np.clip((r - cq[i]) / wq[i], 0.0, 1.0)
        F += cp[i] * mass
        mass *= wp[i]
    F = np.where(xs <= 0, 0.0, F)
    return np.where(xs >= 1, 1.0, F)


def _decode_array(m: MeasureSpec, digits: np.ndarray) -> np.ndarray:
    values = np.zeros(digits.shape[0])
    length = np.ones(digits.shape[0])
    for k in range(1, digits.shape[1] + 1):
        col = column_at(m.Q, k)
        d = digits[:, k - 1]
        if col.is_lazy:
            r = float(col.lazy_ratio)
            values += (1 - r ** d) * length
            length *= (1 - r) * r ** d
        else:
            w, cum = _dense(col)
            values += cum[d] * length
            length *= w[d]
    return values


def _draw_digits(m: MeasureSpec, rng: np.random.Generator, n: int, depth: int) -> np.ndarray:
    digits = np.empty((n, depth), dtype=np.int64)
    for k in range(1, depth + 1):
        col = column_at(m.P, k)
        if col.is_lazy:
            digits[:, k - 1] = rng.geometric(1 - float(col.lazy_ratio), size=n) - 1
        else:
            w = np.array([float(v) for v in col.weights])
            digits[:, k - 1] = rng.choice(len(w), size=n, p=w / w.sum())
    return digits


def _quantile_digits(m: MeasureSpec, u: np.ndarray, depth: int) -> np.ndarray:
    digits = np.empty((u.shape[0], depth), dtype=np.int64)
    r = u.copy()
    for k in range(1, depth + 1):
        w, cum = _dense(column_at(m.P, k))
        # side="right" skips empty cells, which repeat a cumulative value
        i = np.clip(np.searchsorted(cum, r, side="right") - 1, 0, len(w) - 1)
        last = max(j for j in range(len(w)) if w[j] > 0)
        i = np.where(r >= cum[-1], last, i)
        r = np.clip((r - cum[i]) / np.where(w[i] > 0, w[i], 1.0), 0.0, 1.0)
        digits[:, k - 1] = i
    return digits


def sample_digits(m: MeasureSpec, seed: int, n: int, depth: int = core.DEFAULT_DEPTH,
                  method: str = "digits", chunks: int = 1, workers: int = 1):
    """Draw ``n`` points and their digit matrix.

    ``method="digits"`` draws each digit from its column law; ``"quantile"``
    pushes uniform variates through the digit-wise inverse.  Chunk ``j`` uses
    the ``j``-th child of ``SeedSequence(seed)``, so output depends only on
    ``(seed, n, depth, chunks)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if method not in ("digits", "quantile"):
        raise ValueError(f"unknown sampling method {method!r}")
    children = np.random.SeedSequence(seed).spawn(chunks)
    sizes = [n // chunks + (j < n % chunks) for j in range(chunks)]

    def run(j):
        rng = np.random.default_rng(children[j])
        if method == "digits":
            d = _draw_digits(m, rng, sizes[j], depth)
        else:
            d = _quantile_digits(m, rng.random(sizes[j]), depth)
        return _decode_array(m, d), d

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(chunks)))
    else:
        parts = [run(j) for j in range(chunks)]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sample(m: MeasureSpec, seed: int, n: int, depth: int = core.DEFAULT_DEPTH,
           method: str = "digits", chunks: int = 1, workers: int = 1) -> np.ndarray:
    return sample_digits(m, seed, n, depth, method, chunks, workers)[0]


def self_similarity_residual(m: MeasureSpec, rank: int) -> float:
    """max over rank-n cylinders of |mu(D) - sum_i p_i mu(S_i^-1 D)|.

    ``S_i`` maps [0, 1] onto the digit-i cell.  Each preimage is located
    geometrically: the cylinder holding its midpoint must match its end
    points (exactly for rationals, to 1e-12 in floats), otherwise the
    residual is infinite.
    """
    p, q = m.constant_columns()
    qcol = core.ColumnSpec(q)
    exact = all(isinstance(v, Rational) for v in (*p, *q))
    tol = 0 if exact else 1e-12
    worst = 0
    for cyl in core.cylinders(m.Q, rank):
        lhs = cylinder_mass(m, cyl.prefix)
        rhs = []
        for i, pi in enumerate(p):
            c, w = qcol.cumulative(i), q[i]
            lo = max((cyl.left - c) / w, 0)
            hi = min((cyl.right - c) / w, 1)
            if hi - lo <= tol:
                continue
            digits = core.encode((lo + hi) / 2, m.Q, rank - 1)
            pre = core.cylinder_of(digits, m.Q)
            if abs(pre.left - lo) > tol or abs(pre.right - hi) > tol:
                return math.inf
            rhs.append(pi * cylinder_mass(m, digits))
        worst = max(worst, abs(lhs - core._total(rhs)))
    return worst
