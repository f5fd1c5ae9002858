"""The ten acceptance criteria, each reported as one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import ACCEPTANCE_LINES
from indeflyap import exprlang as el
from indeflyap.certificates import Certificate, PowerForm, Theorem, iiss_estimate_T4, pi_functions
from indeflyap.gronwall import DriftPair, kappa, kappa_at
from indeflyap.odesim import simulate
from indeflyap.quadsig import ScalarSignal, StabilityClass, check_pair, classify, integrate, verdict_from_pair
from indeflyap.verify import catalog_entry, envelope_containment

MU4 = ScalarSignal.parse("2/(1+t)-t*abs(cos(t))", kink_period=(math.pi / 2, math.pi))
PAIR4 = (4 / (3 * math.pi), 2 * math.log(1 + 1.5 * math.pi) + 2)


def record(number, title, ok, detail=""):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_example_one_envelope():
    a = catalog_entry("example1")
    start = time.perf_counter()
    tr = simulate(a.field, None, 2.0, [1.0], 50.0, rtol=1e-9)
    res = envelope_containment(tr, lambda t: 3.0 / (1 + np.asarray(t)), epsilon=1e-6)
    elapsed = time.perf_counter() - start
    record(1, "example 1 envelope (1+t0)/(1+t)", tr.ok and res.passed and elapsed < 1.0,
           f"worst ratio {res.worst_ratio:.6f}, {elapsed:.3f} s")


def test_criterion_2_quadrature_exactness():
    rng = np.random.default_rng(2)
    mu = ScalarSignal.parse("-2/(1+t)")
    worst = 0.0
    for a, b in rng.uniform(0, 100, (100, 2)):
        worst = max(worst, abs(integrate(mu, a, b) - 2 * math.log((1 + a) / (1 + b))))
    record(2, "quadrature of -2/(1+t) on 100 random pairs", worst <= 1e-9, f"max error {worst:.2e}")


def test_criterion_3_indefinite_rate_windows_and_pair():
    window = 1.5 * math.pi
    worst_window = max(integrate(MU4, t, t + window) for t in np.arange(3001) * 0.01)
    rng = np.random.default_rng(3)
    s = rng.uniform(0, 200, 10_000)
    t = rng.uniform(0, 200, 10_000)
    pairs = np.column_stack([np.minimum(s, t), np.maximum(s, t)])
    ok, margin = check_pair(MU4, *PAIR4, pairs)
    record(3, "window integrals <= -2 and certified (alpha, beta) on 1e4 pairs",
           worst_window <= -2 + 1e-6 and ok, f"worst window {worst_window:.6f}, pair margin {margin:.4f}")


def test_criterion_4_example_four_free_response():
    a = catalog_entry("example4_free")
    tr = simulate(a.field, None, 0.0, [1.0], 60.0)
    res = envelope_containment(tr, lambda t: 15.52817 * np.exp(-0.212207 * np.asarray(t)), epsilon=1e-6)
    record(4, "example 4 free response under 15.52817 exp(-0.212207 t)", tr.ok and res.passed,
           f"worst ratio {res.worst_ratio:.3e}")


@pytest.mark.parametrize("k, r", [(1, 1), (2, 2)])
def test_criterion_5_example_two(k, r):
    a = catalog_entry("example2", k=k, r=r)
    tr = simulate(a.field, None, 0.0, [1.0, 1.0], 100.0)
    x0 = math.sqrt(2)
    c = 2.0 ** ((k - 1) / (2 * k))
    res = envelope_containment(tr, lambda t: c * x0 / (1 + np.asarray(t)) ** (1 - 1 / (2 * k)), epsilon=1e-6)
    record(5, f"example 2 envelope with k={k}, r={r}", tr.ok and res.passed, f"worst ratio {res.worst_ratio:.6f}")


def _piecewise(breaks, values):
    def fn(t):
        idx = np.clip(np.searchsorted(breaks, t, side="right") - 1, 0, len(values) - 1)
        return values[idx]

    return ScalarSignal.from_function(fn, start=0.0, kinks=breaks[1:])


def test_criterion_6_gronwall_oracle():
    from test_gronwall import CHECKPOINTS, bounds_at, random_instances, rk4_batch

    slack = random_instances(200, 60, with_slack=True)
    equal = random_instances(100, 61, with_slack=False)
    sol_s, bound_s = rk4_batch(slack), bounds_at(slack, CHECKPOINTS)
    sol_e, bound_e = rk4_batch(equal), bounds_at(equal, CHECKPOINTS)
    over = max(float(np.max(sol_s[c] - bound_s[:, j])) for j, c in enumerate(CHECKPOINTS))
    gap = max(float(np.max(np.abs(sol_e[c] - bound_e[:, j]))) for j, c in enumerate(CHECKPOINTS))
    record(6, "RK4 oracle below the Gronwall bound; equality instances match", over <= 1e-7 and gap <= 1e-7,
           f"max excess {over:.2e}, max equality gap {gap:.2e}")


def test_criterion_7_classifier_goldens():
    const = classify(ScalarSignal.parse("-1"))
    checks = {
        "-1": const.cls is StabilityClass.UNIFORM_EXPONENTIAL and abs(const.alpha - 1) <= 1e-3,
        "-2/(1+t)": classify(ScalarSignal.parse("-2/(1+t)")).cls is StabilityClass.ASYMPTOTIC,
        "-2t/(1+t^2)": classify(ScalarSignal.parse("-2*t/(1+t^2)")).cls is StabilityClass.ASYMPTOTIC,
        "sin t": classify(ScalarSignal.parse("sin(t)")).cls is StabilityClass.NONE,
        "indefinite": classify(MU4).cls is StabilityClass.UNIFORM_EXPONENTIAL,
    }
    failed = [k for k, v in checks.items() if not v]
    record(7, "classifier golden suite", not failed, "failed: " + ", ".join(failed) if failed else "")


def test_criterion_8_kappa_engine():
    mu, pi = ScalarSignal.parse("-2*t/(1+t^2)"), ScalarSignal.parse("1/(1+t^2)")
    ts = np.linspace(0.0, 100.0, 1001)
    vals, _ = kappa_at(mu, pi, 0.0, ts)
    err = float(np.max(np.abs(vals - ts / (1 + ts * ts))))
    curve = kappa(DriftPair(mu, pi), 0.0, 100.0)
    ok = (err <= 1e-6 and abs(curve.sup_value - 0.5) <= 1e-6 and abs(curve.tail_value - 100 / 10001) <= 1e-6)
    record(8, "kappa of the drift pair", ok,
           f"max error {err:.2e}, sup {curve.sup_value:.9f}, tail {curve.tail_value:.9f}")


def test_criterion_9_iiss_formulas():
    p1, p2 = pi_functions(Theorem.T4_IISS, 1.0)
    c1, c2 = pi_functions(Theorem.C1_IISS, 1.0)
    spots = (p1(0.0) == 0.0 and p2(0.0) == 0.0 and p1(1.0) == 1.5
             and abs(p2(1.0) - (0.5 * (math.e - 1) ** 2 + math.e)) <= 1e-14
             and c1(2.0) == 2.0 and abs(c2(2.0) - 2 * math.exp(2.0)) <= 1e-13)
    q = PowerForm(0.5, 2)
    verdict = verdict_from_pair(MU4, *PAIR4, 200.0)
    kl = {}
    for theorem, gains in ((Theorem.T4_IISS, dict(rho1=el.parse("s"), rho2=el.parse("0.5*s"))),
                           (Theorem.C1_IISS, dict(rho=el.parse("s")))):
        cert = Certificate(el.parse("0.5*x1^2"), 1, MU4, q, q, theorem, certified_pair=PAIR4, **gains)
        est = iiss_estimate_T4(cert, verdict)
        kl[theorem.value] = est.kl_check(np.linspace(0, 10, 101), np.linspace(0, 50, 201))
    ok = spots and all(all(v.values()) for v in kl.values())
    record(9, "iISS gain formulas and KL checks of sigma", ok, "" if ok else str(kl))


def test_criterion_10_parser_suite():
    from test_exprlang import _ast, test_precedence_and_associativity  # noqa: F401

    goldens = [("2+3*4", 14.0), ("2^3^2", 512.0), ("-2^2", -4.0), ("(-2)^2", 4.0), ("2-3-4", -5.0),
               ("8/4/2", 1.0), ("2*-3", -6.0), ("2^-1", 0.5)]
    gold_ok = all(el.evaluate(el.parse(src), {}) == val for src, val in goldens)
    failures = []

    @settings(max_examples=1000, deadline=None, database=None)
    @given(_ast(8))
    def round_trip(node):
        if el.parse(el.to_text(node)) != node:
            failures.append(node)

    round_trip()
    record(10, "parser goldens and 1000-case round trip", gold_ok and not failures,
           f"{len(failures)} round-trip failures")
