"""JSON report builders shared by the command line and the golden tests.

Reports are plain dicts with a fixed key order and no timestamps, so the same
inputs always serialise to the same bytes.
"""
from __future__ import annotations

import hashlib
import json
import math
from numbers import Rational
from typing import Optional

from . import __version__, core, fractals, measures, series
from .errors import IncompatibleTail, InconclusiveVerdict, NotConstantColumns, UndefinedRatio
from .measures import MeasureSpec, Spectral


def fingerprint(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def jsonable(v):
    """Fractions become ``"p/q"`` strings, tuples lists, enums their value."""
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Rational):
        return core.number_to_json(v)
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if hasattr(v, "value"):
        return v.value
    return v


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2) + "\n"


def envelope(command: str, spec_fingerprint: Optional[str], seed: Optional[int], body: dict) -> dict:
    out = {"command": command, "library_version": __version__,
           "spec_fingerprint": spec_fingerprint, "seed": seed}
    out.update(body)
    return out


def selector_to_json(V: fractals.DigitSelector) -> dict:
    return {"prefix": [sorted(v) for v in V.prefix], "tail": sorted(V.tail)}


def _inconclusive(v: series.ProductVerdict) -> bool:
    return v.is_inconclusive


def dimension_entry(m: MeasureSpec, kind: Optional[Spectral]) -> dict:
    """Dimension of the law where it is known, with the reason."""
    try:
        p, q = m.constant_columns()
    except NotConstantColumns:
        p = q = None
    if p is not None:
        try:
            value = measures.distribution_dimension(p, q)
            return {"value": value, "argument": "constant columns: entropy ratio of p against q"}
        except UndefinedRatio as exc:
            return {"value": None, "argument": str(exc)}
    if kind is Spectral.PURE_POINT:
        return {"value": 0.0, "argument": "pure point law is carried by countably many atoms"}
    if kind is Spectral.ABSOLUTELY_CONTINUOUS:
        return {"value": 1.0, "argument": "absolutely continuous law has dimension 1"}
    return {"value": None, "argument": "not determined for rank-varying columns"}


def classify_report(m: MeasureSpec) -> tuple[dict, bool]:
    """Spectral and topological verdicts; second item flags an inconclusive step."""
    inconclusive = False
    try:
        spec = measures.classify_spectral(m)
        kind, r, pm = spec.kind, spec.rho, spec.p_max
        spectral = kind.value
    except InconclusiveVerdict:
        kind, r, pm = None, measures.rho(m), measures.p_max(m)
        spectral = "inconclusive"
        inconclusive = True
    topo = measures.classify_topological(m)
    try:
        r3 = measures.remark3_series(m)
        remark3 = {"converges": r3.converges, "q_plus": r3.q_plus, "argument": r3.argument}
    except IncompatibleTail as exc:
        remark3 = {"converges": None, "q_plus": None, "argument": str(exc)}
    body = {
        "spectral": spectral,
        "topological": topo.kind.value,
        "rho": r.to_dict(),
        "p_max": pm.to_dict(),
        "topology": {
            "zero_columns_in_prefix": topo.zero_columns_in_prefix,
            "zeros_in_tail": topo.zeros_in_tail,
            "support_length": topo.forbidden_length.to_dict() if topo.forbidden_length else None,
            "argument": topo.argument,
        },
        "ratio_series": remark3,
        "distribution_dimension": dimension_entry(m, kind),
    }
    if topo.forbidden_length is not None and topo.forbidden_length.is_inconclusive:
        inconclusive = True
    return body, inconclusive


def gamma_report(Q: core.MatrixSpec, V: fractals.DigitSelector, rank: int) -> tuple[dict, bool]:
    measure = fractals.gamma_measure(Q, V)
    V0 = sorted(V.tail)
    try:
        root = fractals.gamma_dimension(Q, V0)
        why = ("a selected digit has limit weight 0, so the Moran equation degenerates"
               if root.degenerate else "root of the Moran equation for the limiting column")
        dimension = {"value": root.dimension, "degenerate": root.degenerate, "argument": why}
    except IncompatibleTail as exc:
        dimension = {"value": None, "degenerate": None, "argument": str(exc)}
    cover = fractals.gamma_prefix_cover(Q, V, rank)
    total = core._total(c.length for c in cover)
    body = {
        "selector": selector_to_json(V),
        "lebesgue_measure": measure.verdict.value,
        "measure": measure.to_dict(),
        "dimension": dimension["value"],
        "degenerate": dimension["degenerate"],
        "dimension_argument": dimension["argument"],
        "cover": {"rank": rank, "cylinders": len(cover), "total_length": total},
    }
    return body, measure.is_inconclusive


def encode_report(x, Q: core.MatrixSpec, depth: int) -> dict:
    digits = core.encode(x, Q, depth)
    return {"x": x, "depth": depth, "digits": list(digits)}


def decode_report(digits, Q: core.MatrixSpec) -> dict:
    d = core.decode(digits, Q)
    return {"digits": list(digits), "value": d.value, "float": float(d.value),
            "log_length": d.log_length}


def cdf_report(x, m: MeasureSpec, depth: int) -> dict:
    F = measures.cdf(m, x, depth)
    return {"x": x, "depth": depth, "F": F, "float": float(F)}


def sample_summary(points, n: int, depth: int, method: str, csv_path: str) -> dict:
    return {"n": n, "depth": depth, "method": method, "csv": csv_path,
            "min": float(points.min()), "max": float(points.max()),
            "mean": float(points.mean())}


def verify_report(results) -> dict:
    return {"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}


def fixture_report(fixture, rank: int = 5) -> tuple[dict, bool]:
    if fixture.measure is not None:
        body, flag = classify_report(fixture.measure)
        expected = {"spectral": fixture.expected[0], "topological": fixture.expected[1]}
        match = (body["spectral"], body["topological"]) == fixture.expected
    else:
        body, flag = gamma_report(fixture.Q, fixture.selector, rank)
        expected = {"lebesgue_measure": fixture.expected[0], "dimension": fixture.expected[1]}
        match = (body["lebesgue_measure"] == fixture.expected[0]
                 and body["dimension"] is not None
                 and abs(body["dimension"] - fixture.expected[1]) <= 1e-9)
    head = {"fixture": fixture.name, "description": fixture.description,
            "expected": expected, "matches_expected": match}
    head.update(body)
    return head, flag


def fixture_fingerprint(fixture) -> str:
    if fixture.measure is not None:
        return fixture.measure.fingerprint()
    return fingerprint({"q_matrix": fixture.Q.to_json(), "selector": selector_to_json(fixture.selector)})
