"""Command line front end.

Exit codes: 0 success, 1 bad arguments or unreadable input, 2 invalid spec,
3 inconclusive verdict under ``--strict``, 4 failed oracle or other library
error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import core, fixtures, lab, measures, oracles, report
from .errors import QTildeError, SpecError, SpecInconsistency
from .fractals import DigitSelector

EXIT_OK, EXIT_USAGE, EXIT_SPEC, EXIT_INCONCLUSIVE, EXIT_FAILURE = 0, 1, 2, 3, 4
MAX_DEPTH = 256
MAX_N = 10 ** 8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: Optional[Path] = None
    fixture: Optional[str] = None
    depth: int = core.DEFAULT_DEPTH
    seed: int = 42
    n: int = lab.DEFAULT_N
    out: Optional[Path] = None
    strict: bool = False
    csv: Optional[Path] = None
    x: Optional[str] = None
    digits: Optional[str] = None
    select: Optional[str] = None
    rank: int = 5
    method: str = "digits"
    chunks: int = 1
    workers: int = 1
    specs: int = 20

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_DEPTH:
            raise UsageError(f"--depth must lie in [1, {MAX_DEPTH}]")
        if not 1 <= self.n <= MAX_N:
            raise UsageError(f"--n must lie in [1, {MAX_N}]")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.rank < 1 or self.chunks < 1 or self.workers < 1 or self.specs < 1:
            raise UsageError("--rank, --chunks, --workers and --specs must be positive")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, help="matrix or measure JSON file")
    common.add_argument("--fixture", help="use a named built-in fixture instead of --spec")
    common.add_argument("--depth", type=int, default=core.DEFAULT_DEPTH)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--n", type=int, default=lab.DEFAULT_N)
    common.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    common.add_argument("--strict", action="store_true", help="fail on inconclusive verdicts")

    p = _Parser(prog="qtilde", description="Q-tilde expansions, fractal sets and digit measures")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("encode", parents=[common], help="digits of a point")
    s.add_argument("--x", required=True, help="point in [0, 1]; decimals and p/q are exact")
    s = sub.add_parser("decode", parents=[common], help="left end of a cylinder")
    s.add_argument("--digits", required=True, help="comma-separated digits")
    sub.add_parser("classify", parents=[common], help="spectral and topological type")
    s = sub.add_parser("gamma", parents=[common], help="measure, cover and dimension of a digit set")
    s.add_argument("--select", help="comma-separated admissible digits at every rank")
    s.add_argument("--rank", type=int, default=5, help="rank of the reported cover")
    s = sub.add_parser("cdf", parents=[common], help="distribution function at a point")
    s.add_argument("--x", required=True)
    s = sub.add_parser("sample", parents=[common], help="draw points and write them as CSV")
    s.add_argument("--csv", type=Path, help="CSV output (default: next to --out, else samples.csv)")
    s.add_argument("--method", choices=("digits", "quantile"), default="digits")
    s.add_argument("--chunks", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s = sub.add_parser("verify", parents=[common], help="run the exact-arithmetic oracles")
    s.add_argument("--specs", type=int, default=20, help="number of random specs")
    s.add_argument("--rank", type=int, default=4)
    s = sub.add_parser("fixture", parents=[common], help="report on a built-in example")
    s.add_argument("name", choices=sorted(fixtures.FIXTURES))
    s.add_argument("--rank", type=int, default=5)
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if ns.command == "fixture":
        fields["fixture"] = ns.name
    return RunConfig(**fields)


def _number(text: str):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read a number from {text!r}") from None


def _digits(text: str) -> tuple:
    try:
        return tuple(int(d) for d in text.split(",") if d.strip())
    except ValueError:
        raise UsageError(f"cannot read digits from {text!r}") from None


def _load_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _source(cfg: RunConfig):
    """(document kind, object, fingerprint) from --fixture or --spec."""
    if cfg.fixture:
        try:
            f = fixtures.get(cfg.fixture)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        if f.measure is not None:
            return "measure", f.measure, f.measure.fingerprint()
        return "gamma", f, report.fixture_fingerprint(f)
    if cfg.spec is None:
        raise UsageError("give --spec or --fixture")
    doc = _load_json(cfg.spec)
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    if "q_matrix" in doc:
        m = measures.measure_from_json(doc)
        return "measure", m, m.fingerprint()
    Q = core.matrix_from_json(doc)
    core.validate_matrix(Q)
    return "matrix", Q, report.fingerprint(Q.to_json())


def _q_matrix(kind, obj) -> core.MatrixSpec:
    if kind == "measure":
        return obj.Q
    if kind == "gamma":
        return obj.Q
    return obj


def _measure(kind, obj) -> measures.MeasureSpec:
    if kind != "measure":
        raise UsageError("this command needs a measure spec with q_matrix and p_matrix")
    return obj


def execute(cfg: RunConfig) -> tuple[dict, bool]:
    """Run one command; returns (report, inconclusive flag)."""
    cmd = cfg.command
    if cmd == "verify":
        results = oracles.run_suite(cfg.seed, cfg.specs, cfg.rank)
        return report.envelope(cmd, None, cfg.seed, report.verify_report(results)), False
    if cmd == "fixture":
        f = fixtures.get(cfg.fixture)
        body, flag = report.fixture_report(f, cfg.rank)
        return report.envelope(cmd, report.fixture_fingerprint(f), None, body), flag
    kind, obj, fp = _source(cfg)
    if cmd == "encode":
        body = report.encode_report(_number(cfg.x), _q_matrix(kind, obj), cfg.depth)
    elif cmd == "decode":
        body = report.decode_report(_digits(cfg.digits), _q_matrix(kind, obj))
    elif cmd == "cdf":
        body = report.cdf_report(_number(cfg.x), _measure(kind, obj), cfg.depth)
    elif cmd == "classify":
        body, flag = report.classify_report(_measure(kind, obj))
        return report.envelope(cmd, fp, None, body), flag
    elif cmd == "gamma":
        if cfg.select:
            V = DigitSelector.uniform(_digits(cfg.select))
        elif kind == "gamma":
            V = obj.selector
        elif kind == "measure":
            V = measures.support_selector(obj)
        else:
            raise UsageError("gamma needs --select for a bare matrix")
        body, flag = report.gamma_report(_q_matrix(kind, obj), V, cfg.rank)
        return report.envelope(cmd, fp, None, body), flag
    elif cmd == "sample":
        m = _measure(kind, obj)
        points, _ = measures.sample_digits(m, cfg.seed, cfg.n, cfg.depth, method=cfg.method,
                                           chunks=cfg.chunks, workers=cfg.workers)
        csv_path = cfg.csv or (cfg.out.with_suffix(".csv") if cfg.out else Path("samples.csv"))
        lab.write_csv(csv_path, ("index", "value"),
                      ((i, repr(float(v))) for i, v in enumerate(points)))
        body = report.sample_summary(points, cfg.n, cfg.depth, cfg.method, str(csv_path))
        return report.envelope(cmd, fp, cfg.seed, body), False
    else:  # pragma: no cover - argparse restricts the choices
        raise UsageError(f"unknown command {cmd}")
    return report.envelope(cmd, fp, None, body), False


def _emit(doc: dict, out: Optional[Path]) -> None:
    text = report.dumps(doc)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"qtilde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, inconclusive = execute(cfg)
    except UsageError as exc:
        print(f"qtilde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecError, SpecInconsistency) as exc:
        print(f"qtilde: invalid spec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except QTildeError as exc:
        print(f"qtilde: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if inconclusive:
        if cfg.strict:
            print("qtilde: inconclusive verdict (--strict)", file=sys.stderr)
            return EXIT_INCONCLUSIVE
        print("qtilde: warning: inconclusive verdict", file=sys.stderr)
    try:
        _emit(doc, cfg.out)
    except OSError as exc:
        print(f"qtilde: cannot write report: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if cfg.command == "verify" and not doc["passed"]:
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
