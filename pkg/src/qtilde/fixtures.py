"""Named matrices and measures reproducing the classical worked examples.

Weights are exact fractions so oracle computations on them stay rational.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F
from typing import Optional

from .core import ColumnSpec, Constant, MatrixSpec, OneDigitGeometric, OneDigitHarmonic
from .fractals import DigitSelector
from .measures import MeasureSpec

HALF = F(1, 2)
THIRD = F(1, 3)


def ternary_uniform(kind: str = "Q") -> MatrixSpec:
    return MatrixSpec((), Constant(ColumnSpec((THIRD, THIRD, THIRD))), kind)


def constant(weights, kind: str = "P") -> MatrixSpec:
    return MatrixSpec((), Constant(ColumnSpec(tuple(F(w) for w in weights))), kind)


def middle_geometric_q() -> MatrixSpec:
    """q_1k = 2^-k, the outer digits share the rest equally."""
    return MatrixSpec((), OneDigitGeometric(1, F(1), False, (HALF, HALF), r=HALF), "Q")


def one_minus_geometric_p(digit: int, split) -> MatrixSpec:
    """p_{digit,k} = 1 - 2^-k; the remaining 2^-k is shared per ``split``."""
    return MatrixSpec((), OneDigitGeometric(digit, F(1), True, tuple(F(s) for s in split), r=HALF),
                      "P")


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    measure: Optional[MeasureSpec] = None
    Q: Optional[MatrixSpec] = None
    selector: Optional[DigitSelector] = None
    expected: tuple = ()

    @property
    def kind(self) -> str:
        return "measure" if self.measure is not None else "gamma"


def _measure(name, description, Q, P, spectral, topo):
    return Fixture(name, description, measure=MeasureSpec(Q, P), expected=(spectral, topo))


def _build() -> dict:
    T = ternary_uniform()
    G = middle_geometric_q()
    items = [
        Fixture("example1", "q_1k = 1/(k+1), digits {0,2}: null set of full dimension",
                Q=MatrixSpec((), OneDigitHarmonic(1, F(1), False, (HALF, HALF), offset=1), "Q"),
                selector=DigitSelector.uniform({0, 2}), expected=("zero", 1.0)),
        Fixture("example2", "q_1k = 1 - 1/(k+1), digits {0,2}: null set of dimension zero",
                Q=MatrixSpec((), OneDigitHarmonic(1, F(1), True, (HALF, HALF), offset=1), "Q"),
                selector=DigitSelector.uniform({0, 2}), expected=("zero", 0.0)),
        _measure("example3_pp", "ternary Q, p_1k = 1 - 2^-k", T,
                 one_minus_geometric_p(1, (HALF, HALF)), "pure_point", "S"),
        _measure("example3_sc", "ternary Q, p = (1/4, 1/2, 1/4)", T,
                 constant((F(1, 4), HALF, F(1, 4))), "singular_continuous", "S"),
        _measure("example3_ac", "ternary Q, p = q: Lebesgue measure", T,
                 constant((THIRD, THIRD, THIRD)), "absolutely_continuous", "S"),
        _measure("example4_pp", "ternary Q, p = (1 - 2^-k, 0, 2^-k)", T,
                 one_minus_geometric_p(0, (0, 1)), "pure_point", "C"),
        _measure("example4_sc", "ternary Q, p = (1/2, 0, 1/2): Cantor measure", T,
                 constant((HALF, 0, HALF)), "singular_continuous", "C"),
        _measure("example5_pp", "q_1k = 2^-k, p = (1 - 2^-k, 0, 2^-k)", G,
                 one_minus_geometric_p(0, (0, 1)), "pure_point", "P"),
        _measure("example5_sc", "q_1k = 2^-k, p = (1/4, 0, 3/4)", G,
                 constant((F(1, 4), 0, F(3, 4))), "singular_continuous", "P"),
        _measure("example5_ac", "q_1k = 2^-k, p = (1/2, 0, 1/2)", G,
                 constant((HALF, 0, HALF)), "absolutely_continuous", "P"),
        _measure("remark3", "q_1k = 2^-k, p = (1/2, 0, 1/2): rho > 0 yet the ratio series diverges",
                 G, constant((HALF, 0, HALF)), "absolutely_continuous", "P"),
    ]
    return {f.name: f for f in items}


FIXTURES = _build()


def get(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}") from None
