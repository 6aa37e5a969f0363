"""Acceptance criteria 1-9.  Each test prints one PASS/FAIL line."""
import math
import random
import time

import pytest

from qtilde import fixtures, fractals, lab, measures, oracles
from qtilde.errors import QTildeError
from qtilde.measures import Spectral, Topo

LN2_LN3 = math.log(2) / math.log(3)


def direct_pmax(K=64):
    """Independent oracle: plain float product of (1 - 2^-k) for k <= K."""
    out = 1.0
    for k in range(1, K + 1):
        out *= 1.0 - 0.5 ** k
    return out


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_cantor(verdict):
    t0 = time.perf_counter()
    m = fixtures.get("example4_sc").measure
    s = measures.classify_spectral(m)
    t = measures.classify_topological(m)
    dim = measures.measure_dimension(m)
    moran = fractals.moran_dimension((1 / 3, 1 / 3, 1 / 3), {0, 2})
    elapsed = time.perf_counter() - t0
    ok = (s.kind is Spectral.SINGULAR_CONTINUOUS and t.kind is Topo.C
          and abs(dim - LN2_LN3) < 1e-9 and abs(moran.dimension - dim) < 1e-9 and elapsed < 1)
    verdict(1, ok, f"{s.kind.value}/{t.kind.value}, alpha0={dim:.12f}, "
                   f"moran={moran.dimension:.12f}, {elapsed:.3f}s")


def test_criterion_2_lebesgue(verdict):
    t0 = time.perf_counter()
    m = fixtures.get("example3_ac").measure
    s = measures.classify_spectral(m)
    t = measures.classify_topological(m)
    rng = random.Random(2)
    worst = max(abs(measures.cdf(m, x, 40) - x) for x in (rng.random() for _ in range(1000)))
    elapsed = time.perf_counter() - t0
    ok = (s.kind is Spectral.ABSOLUTELY_CONTINUOUS and t.kind is Topo.S
          and s.rho.value == 1 and s.rho.error_bound == 0 and worst < 1e-9 and elapsed < 5)
    verdict(2, ok, f"{s.kind.value}/{t.kind.value}, rho={s.rho.value!r}, "
                   f"max|F(x)-x|={worst:.2e}, {elapsed:.3f}s")


def test_criterion_3_pure_point_and_labels(verdict):
    oracle = direct_pmax()
    errors = {}
    for name in ("example3_pp", "example5_pp"):
        s = measures.classify_spectral(fixtures.get(name).measure)
        errors[name] = (s.kind, abs(s.p_max.value - oracle))
    topo = {name: measures.classify_topological(fixtures.get(name).measure).kind
            for name in fixtures.FIXTURES if name.startswith(("example3", "example4", "example5"))}
    expected_topo = {name: {"3": Topo.S, "4": Topo.C, "5": Topo.P}[name[7]] for name in topo}
    ok = (all(k is Spectral.PURE_POINT and e < 1e-9 for k, e in errors.values())
          and topo == expected_topo)
    detail = ", ".join(f"{n}: P_max err {e:.1e}" for n, (_, e) in errors.items())
    verdict(3, ok, f"{detail}; oracle {oracle:.10f}; topo labels "
                   f"{'match' if topo == expected_topo else 'differ'}")


def test_criterion_4_ratio_series_counterexample(verdict):
    m = fixtures.get("remark3").measure
    r = measures.rho(m)
    series = measures.remark3_series(m)
    target = math.sqrt(direct_pmax())
    ok = (r.is_positive and abs(r.value - target) < 1e-6 and abs(r.value - 0.537390) < 1e-6
          and not series.converges and not series.q_plus)
    verdict(4, ok, f"rho={r.value:.9f} (target {target:.9f}), ratio series "
                   f"{'converges' if series.converges else 'diverges'}, q+ {series.q_plus}")


def test_criterion_5_null_gamma_sets(verdict):
    e1, e2 = fixtures.get("example1"), fixtures.get("example2")
    m1 = fractals.gamma_measure(e1.Q, e1.selector)
    m2 = fractals.gamma_measure(e2.Q, e2.selector)
    # limiting columns: q_1k -> 0 in the first set, q_1k -> 1 in the second
    d1 = fractals.moran_dimension(e1.Q.limit(), {0, 2})
    d2 = fractals.moran_dimension(e2.Q.limit(), {0, 2})
    via_gamma = (fractals.gamma_dimension(e1.Q, {0, 2}), fractals.gamma_dimension(e2.Q, {0, 2}))
    ok = (m1.is_zero and m2.is_zero and abs(d1.dimension - 1) < 1e-9 and not d1.degenerate
          and abs(d2.dimension) < 1e-9 and d2.degenerate and via_gamma == (d1, d2))
    verdict(5, ok, f"measures {m1.verdict.value}/{m2.verdict.value}, dims {d1.dimension} "
                   f"and {d2.dimension} (degenerate={d2.degenerate})")


def test_criterion_6_kakutani(verdict):
    t0 = time.perf_counter()
    rng = random.Random(6)
    failures = []
    for j in range(100):
        m = oracles.random_measure(rng, 6)
        msg = oracles.check_kakutani(m, 6)
        if msg:
            failures.append(f"spec {j}: {msg}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    verdict(6, ok, f"100 specs, ranks 1..6, {len(failures)} mismatches, {elapsed:.1f}s")


def test_criterion_7_cdf_mass(verdict):
    t0 = time.perf_counter()
    rng = random.Random(7)
    failures = []
    for j in range(20):
        m = oracles.random_measure(rng, 6)
        msg = oracles.check_cdf_mass(m, 6)
        if msg:
            failures.append(f"spec {j}: {msg}")
    elapsed = time.perf_counter() - t0
    verdict(7, not failures, f"20 specs, every cylinder to rank 6, {len(failures)} mismatches, "
                             f"{elapsed:.1f}s")


def test_criterion_8_statistics(verdict):
    t0 = time.perf_counter()
    m = fixtures.get("example4_sc").measure
    n, k = 100_000, 64
    samples = lab.SampleSet.draw(m, 42, n, depth=k)
    ks = lab.ks_distance(samples, lambda x: measures.cdf_array(m, x))
    box = lab.box_counting_dimension(samples)
    nu = lab.digit_frequencies(samples, m.Q, k)
    sigma = math.sqrt(0.25 / (n * k))
    elapsed = time.perf_counter() - t0
    ok = (ks < 0.0091 and abs(box.value - 0.63) <= 0.05 and nu[1] == 0
          and abs(nu[0] - 0.5) < 3 * sigma and abs(nu[2] - 0.5) < 3 * sigma and elapsed < 60)
    verdict(8, ok, f"KS={ks:.4f}, box={box.value:.3f}+-{box.stderr:.3f}, "
                   f"nu=({nu[0]:.5f}, {nu[1]}, {nu[2]:.5f}) sigma={sigma:.1e}, {elapsed:.1f}s")


def test_criterion_9_trichotomy_fuzz(verdict):
    rng = random.Random(42)
    seen, panics, bad = {}, [], 0
    for j in range(500):
        m = oracles.random_tail_measure(rng)
        try:
            s = measures.classify_spectral(m).kind
            t = measures.classify_topological(m).kind
        except QTildeError as exc:
            panics.append(f"spec {j}: {type(exc).__name__}: {exc}")
            continue
        except Exception as exc:  # anything untyped is a crash
            panics.append(f"spec {j}: crash {type(exc).__name__}: {exc}")
            continue
        if not (isinstance(s, Spectral) and isinstance(t, Topo)):
            bad += 1
        seen[(s.value, t.value)] = seen.get((s.value, t.value), 0) + 1
    forbidden = seen.get(("absolutely_continuous", "C"), 0)
    ok = not panics and not bad and forbidden == 0
    verdict(9, ok, f"500 specs, {len(seen)} of 8 allowed class combinations seen, AC x C = {forbidden}, "
                   f"{len(panics)} failures" + (f" (first: {panics[0]})" if panics else ""))
