"""Statistical and numerical probes that check the exact results from outside:
empirical CDFs, box counting, digit frequencies and local density ratios."""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import core
from .errors import DegenerateScales
from .fractals import FrequencyVector
from .measures import MeasureSpec, sample_digits

DEFAULT_SCALES = tuple(2.0 ** -j for j in range(4, 15))
DEFAULT_N = 100_000


@dataclass(frozen=True)
class SampleSet:
    """Points in [0, 1] plus the digits that generated them, when known.

    A float resolves only about 33 ternary digits, so frequency statistics
    at deeper ranks read ``digits`` instead of re-encoding ``points``.
    """

    points: np.ndarray
    seed: Optional[int] = None
    fingerprint: str = ""
    digits: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("a sample set needs a non-empty 1-d array of points")
        if np.any(pts < 0) or np.any(pts > 1):
            raise ValueError("sample points must lie in [0, 1]")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @classmethod
    def draw(cls, m: MeasureSpec, seed: int, n: int = DEFAULT_N, depth: int = core.DEFAULT_DEPTH,
             **kwargs) -> "SampleSet":
        points, digits = sample_digits(m, seed, n, depth, **kwargs)
        return cls(points, seed, m.fingerprint(), digits)


def _points(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.points
    return np.atleast_1d(np.asarray(samples, dtype=float))


def _evaluate(F: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(F(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(F(x)) for x in xs])


def ecdf(samples) -> Callable:
    """Right-continuous empirical distribution function."""
    pts = np.sort(_points(samples))
    n = pts.size

    def F(x):
        return np.searchsorted(pts, x, side="right") / n

    return F


def ks_distance(samples, F: Callable) -> float:
    """max over sample points of |empirical CDF - F|."""
    pts = np.sort(_points(samples))
    if pts.size == 0:
        raise ValueError("no samples")
    emp = np.searchsorted(pts, pts, side="right") / pts.size
    return float(np.max(np.abs(emp - _evaluate(F, pts))))


def sup_distance(F: Callable, G: Callable, grid) -> float:
    grid = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(_evaluate(F, grid) - _evaluate(G, grid))))


def dkw_band(n: int, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius at confidence 1 - alpha."""
    return math.sqrt(math.log(2 / alpha) / (2 * n))


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    stderr: float
    scales: tuple
    counts: tuple
    residual: float

    def rows(self):
        return list(zip(self.scales, self.counts))


def box_counting_dimension(samples, scales: Sequence[float] = DEFAULT_SCALES) -> DimensionEstimate:
    """Slope of log(occupied boxes) against log(1/scale)."""
    pts = _points(samples)
    scales = tuple(sorted({float(s) for s in scales}, reverse=True))
    if len(scales) < 4 or any(s <= 0 or s > 1 for s in scales):
        raise DegenerateScales("need at least 4 box sizes in (0, 1]")
    if math.log10(scales[0] / scales[-1]) < 2 - 1e-9:
        raise DegenerateScales("box sizes must span at least two decades")
    counts = []
    for s in scales:
        boxes = np.minimum(np.floor(pts / s), math.ceil(1 / s) - 1)
        counts.append(int(np.unique(boxes).size))
    x = np.log(1 / np.array(scales))
    y = np.log(np.array(counts, dtype=float))
    if np.all(y == y[0]):
        return DimensionEstimate(0.0, 0.0, scales, tuple(counts), 0.0)
    fit = stats.linregress(x, y)
    resid = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return DimensionEstimate(float(fit.slope), float(fit.stderr), scales, tuple(counts), resid)


def digit_frequencies(x_or_samples, Q: core.MatrixSpec, k: int) -> FrequencyVector:
    """Share of each digit among the first ``k`` digits, pooled over all points."""
    sizes = {Q.size_at(j) for j in range(1, k + 1)}
    if len(sizes) != 1 or None in sizes:
        raise ValueError("digit frequencies need one finite alphabet for all ranks")
    s = sizes.pop()
    if isinstance(x_or_samples, SampleSet) and x_or_samples.digits is not None \
            and x_or_samples.digits.shape[1] >= k:
        block = x_or_samples.digits[:, :k]
    elif np.ndim(x_or_samples) == 0 and not isinstance(x_or_samples, SampleSet):
        # a float is an exact dyadic rational; encoding it exactly keeps every digit
        block = np.array([core.encode(Fraction(x_or_samples), Q, k).digits])
    else:
        block = np.array([core.encode(float(x), Q, k).digits for x in _points(x_or_samples)])
    counts = np.bincount(block.ravel(), minlength=s)
    return FrequencyVector(tuple(counts / counts.sum()))


def local_density_scan(F: Callable, x: float, eps_grid: Sequence[float]) -> list:
    """(eps, (F(x+eps) - F(x-eps)) / (2 eps)) for each eps; raw data, no limit taken."""
    eps = [float(e) for e in eps_grid]
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps grid must be positive and strictly decreasing")
    return [(e, float(F(min(x + e, 1.0)) - F(max(x - e, 0.0))) / (2 * e)) for e in eps]


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def export_box_counts(estimate: DimensionEstimate, path) -> None:
    write_csv(path, ("scale", "count"), estimate.rows())


def export_density_scan(scan, path) -> None:
    write_csv(path, ("eps", "ratio"), scan)
