import math

import numpy as np
import pytest

from indeflyap.quadsig import (CumulativeIntegral, ScalarSignal, StabilityClass, TransitionFactor, check_pair, grid_pair_slack,
                               classify, integrate, periodic_test, positive_part_integral, transition_factor,
                               verdict_from_pair)

MU4 = "2/(1+t)-t*abs(cos(t))"
MU4_KINKS = (math.pi / 2, math.pi)


def sig(src, **kw):
    return ScalarSignal.parse(src, **kw)


@pytest.mark.parametrize("src, exact", [
    ("-2/(1+t)", lambda a, b: 2 * math.log((1 + a) / (1 + b))),
    ("-2*t/(1+t^2)", lambda a, b: math.log((1 + a * a) / (1 + b * b))),
    ("sin(t)", lambda a, b: math.cos(a) - math.cos(b)),
    ("-3", lambda a, b: -3 * (b - a)),
    ("0", lambda a, b: 0.0),
])
def test_closed_form_catalog(src, exact):
    rng = np.random.default_rng(11)
    s = sig(src)
    for a, b in np.sort(rng.uniform(0, 100, (25, 2)), axis=1):
        assert abs(integrate(s, a, b) - exact(a, b)) <= 1e-9


def test_kinked_signal_is_integrated_exactly():
    # int_0^pi |cos t| = 2
    s = sig("abs(cos(t))", kink_period=MU4_KINKS)
    assert integrate(s, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert integrate(s, 0.0, 10 * math.pi) == pytest.approx(20.0, abs=1e-11)


def test_reversed_limits_and_domain():
    s = sig("t")
    assert integrate(s, 2.0, 0.0) == pytest.approx(-2.0, abs=1e-14)
    with pytest.raises(ValueError):
        integrate(sig("1/t", start=1.0), 0.5, 2.0)


def test_additivity():
    s = sig(MU4, kink_period=MU4_KINKS)
    rng = np.random.default_rng(5)
    for a, b, c in np.sort(rng.uniform(0, 60, (20, 3)), axis=1):
        assert integrate(s, a, c) == pytest.approx(integrate(s, a, b) + integrate(s, b, c), abs=2e-10)


def test_cocycle_of_transition_factor():
    s = sig(MU4, kink_period=MU4_KINKS)
    tf = TransitionFactor(s, 0.0, 40.0)
    rng = np.random.default_rng(6)
    for r, m, t in np.sort(rng.uniform(0, 40, (30, 3)), axis=1):
        lhs = tf(t, m) * tf(m, r)
        assert abs(lhs - tf(t, r)) <= 10 * 1e-10 * tf(t, r) + 1e-15


def test_transition_factor_closed_form_and_overflow():
    assert transition_factor(sig("-2/(1+t)"), 3.0, 1.0) == pytest.approx((2 / 4) ** 2, rel=1e-12)
    assert transition_factor(sig("1"), 1000.0, 0.0) == math.inf


def test_cumulative_integral_nodes_and_interior_points():
    s = sig("-2/(1+t)")
    cum = CumulativeIntegral(s, 0.0, 50.0)
    ts = np.array([0.0, 0.3, 7.77, 50.0])
    assert np.allclose(cum(ts), -2 * np.log1p(ts), atol=1e-10)


def test_positive_part_integral():
    # int_0^{2 pi} max(sin, 0) = 2
    assert positive_part_integral(sig("sin(t)"), 0.0, 2 * math.pi) == pytest.approx(2.0, abs=1e-10)
    assert positive_part_integral(sig("-1"), 0.0, 5.0) == 0.0
    assert positive_part_integral(sig("1"), 0.0, 5.0) == pytest.approx(5.0, abs=1e-12)


def test_periodic_window_test():
    assert abs(periodic_test(sig("sin(t)"), 2 * math.pi)) < 1e-9
    assert periodic_test(sig("sin(t)-0.1"), 2 * math.pi) == pytest.approx(-0.2 * math.pi, abs=1e-9)
    assert periodic_test(sig("-1"), 1.0) == pytest.approx(-1.0, abs=1e-12)


# --- classification ----------------------------------------------------------

def test_constant_rate_is_uniformly_exponential():
    v = classify(sig("-1"))
    assert v.cls is StabilityClass.UNIFORM_EXPONENTIAL
    assert abs(v.alpha - 1.0) <= 1e-3
    assert v.beta <= 1e-6


@pytest.mark.parametrize("src", ["-2/(1+t)", "-2*t/(1+t^2)"])
def test_decaying_rates_are_asymptotic_only(src):
    v = classify(sig(src))
    assert v.cls is StabilityClass.ASYMPTOTIC
    assert any("not exponential" in n for n in v.notes)


def test_zero_mean_oscillation_is_not_stable():
    assert classify(sig("sin(t)")).cls is StabilityClass.NONE
    assert classify(sig("sin(t)"), period=2 * math.pi).cls is StabilityClass.NONE


def test_positive_rate_is_not_stable():
    assert classify(sig("1/(1+t)")).cls is StabilityClass.NONE


def test_indefinite_rate_is_uniformly_exponential():
    v = classify(sig(MU4, kink_period=MU4_KINKS))
    assert v.cls is StabilityClass.UNIFORM_EXPONENTIAL
    assert v.alpha > 0.1


def test_growing_offset_is_exponential_but_not_uniform():
    v = classify(sig("-2+t*sin(t)"))
    assert v.cls is StabilityClass.NONE or v.cls is StabilityClass.EXPONENTIAL
    v2 = classify(sig("-2+0.5*sin(t)*t/(1+0.01*t)"))
    assert v2.cls.rank >= StabilityClass.EXPONENTIAL.rank


def test_scaling_preserves_verdicts_and_scales_pairs():
    assert classify(sig("-1").scaled(2.0)).alpha == pytest.approx(2.0, abs=2e-3)
    base_sig = sig("-1+0.5*sin(t)")
    base = classify(base_sig)
    scaled = classify(base_sig.scaled(2.0))
    assert base.cls is scaled.cls is StabilityClass.UNIFORM_EXPONENTIAL
    # the fitted pair trades alpha against beta, so compare admissibility rather than raw alpha:
    # (a, b) works for mu exactly when (c a, c b) works for c mu
    assert grid_pair_slack(base_sig.scaled(2.0), 2 * base.alpha, 2 * base.beta, 200.0)[0] >= -1e-9
    assert grid_pair_slack(base_sig, scaled.alpha / 2, scaled.beta / 2, 200.0)[0] >= -1e-9
    for src in ("-2/(1+t)", "-2*t/(1+t^2)"):
        assert classify(sig(src).scaled(3.0)).cls is StabilityClass.ASYMPTOTIC


@pytest.mark.parametrize("src", ["-2/(1+t)", "sin(t)", "-2*t/(1+t^2)", "-1", MU4])
def test_adding_negative_constant_never_downgrades(src):
    s = sig(src, kink_period=MU4_KINKS if src == MU4 else None)
    before = classify(s).cls.rank
    after = classify(s.plus_constant(-0.5)).cls.rank
    assert after >= before


def test_certified_pair_for_indefinite_rate():
    s = sig(MU4, kink_period=MU4_KINKS)
    alpha, beta = 4 / (3 * math.pi), 2 * math.log(1 + 1.5 * math.pi) + 2
    v = verdict_from_pair(s, alpha, beta, 200.0)
    assert v.cls is StabilityClass.UNIFORM_EXPONENTIAL and v.margin >= 0
    bad = verdict_from_pair(s, alpha, 0.0, 200.0)
    assert bad.cls is StabilityClass.NONE


def test_check_pair_reports_margin():
    ok, worst = check_pair(sig("-1"), 1.0, 0.0, np.array([[0.0, 1.0], [2.0, 5.0]]))
    assert ok and abs(worst) < 1e-9
    with pytest.raises(ValueError):
        check_pair(sig("-1"), 1.0, 0.0, np.array([[3.0, 1.0]]))


def test_verdict_serializes():
    d = classify(sig("-1")).to_dict()
    assert d["class"] == "uniform_exponential" and d["horizon"] == 200
