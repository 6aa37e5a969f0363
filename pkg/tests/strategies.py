"""Hypothesis strategies for random finite matrices."""
from fractions import Fraction

from hypothesis import strategies as st

from qtilde import core


@st.composite
def columns(draw, min_size=2, max_size=4, positive=True, exact=False):
    n = draw(st.integers(min_size, max_size))
    lo = 1 if positive else 0
    raw = draw(st.lists(st.integers(lo, 20), min_size=n, max_size=n).filter(lambda v: sum(v) > 0))
    total = sum(raw)
    if exact:
        return tuple(Fraction(v, total) for v in raw)
    w = [v / total for v in raw]
    w[-1] = 1.0 - sum(w[:-1])
    return tuple(w)


@st.composite
def q_matrices(draw, exact=False, size=None, depth=4):
    n = size or draw(st.integers(2, 4))
    cols = [core.ColumnSpec(draw(columns(n, n, exact=exact))) for _ in range(draw(st.integers(0, depth)))]
    tail = core.ColumnSpec(draw(columns(n, n, exact=exact)))
    return core.MatrixSpec(tuple(cols), core.Constant(tail), "Q")
