import math

import numpy as np
import pytest

from indeflyap import exprlang as el
from indeflyap.certificates import (Certificate, CertificateError, InversionError, MonotoneExpr, PowerForm, Theorem,
                                    check_T2, drift_envelope, envelope_T1, iiss_envelope, iiss_estimate_T4,
                                    invert_comparison, iss_envelope_T3, pi_functions)
from indeflyap.gronwall import DriftPair, kappa, kappa_at
from indeflyap.quadsig import ScalarSignal, StabilityClass, classify, grid_pair_slack, verdict_from_pair

MU4 = ScalarSignal.parse("2/(1+t)-t*abs(cos(t))", kink_period=(math.pi / 2, math.pi))
ALPHA4 = 4 / (3 * math.pi)
BETA4 = 2 * math.log(1 + 1.5 * math.pi) + 2
HALF_SQUARE = PowerForm(0.5, 2)
SQUARE = PowerForm(1.0, 2)


@pytest.fixture(scope="module")
def verdict4():
    return verdict_from_pair(MU4, ALPHA4, BETA4, 200.0)


def cert4(theorem=Theorem.T1, **kw):
    return Certificate(el.parse("0.5*x1^2"), 1, MU4, HALF_SQUARE, HALF_SQUARE, theorem,
                       certified_pair=(ALPHA4, BETA4), **kw)


# --- inversion ---------------------------------------------------------------

def test_power_form_inverse_examples():
    assert invert_comparison(SQUARE, 0.0, 4.0) == 2.0
    grow = PowerForm(ScalarSignal.parse("1+t"), 2)
    assert invert_comparison(grow, 3.0, 16.0) == pytest.approx(2.0, rel=1e-15)


def test_monotone_expression_inverse():
    fn = MonotoneExpr.parse("s+s^3")
    assert invert_comparison(fn, 0.0, 2.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("fn", [SQUARE, PowerForm(ScalarSignal.parse("1+t"), 3), MonotoneExpr.parse("s+s^3"),
                                MonotoneExpr.parse("(1+t)*(exp(s)-1)")])
def test_inverse_is_a_right_inverse(fn):
    for t in (0.0, 2.5):
        for v in (1e-6, 0.3, 7.0, 1e4):
            s = invert_comparison(fn, t, v)
            assert float(fn.value(t, s)) == pytest.approx(v, rel=1e-10)


def test_bounded_comparison_function_cannot_be_inverted_beyond_its_range():
    fn = MonotoneExpr.parse("1-exp(-s)")
    with pytest.raises(InversionError):
        invert_comparison(fn, 0.0, 2.0)


def test_invalid_power_form():
    with pytest.raises(ValueError):
        PowerForm(-1.0, 2)
    with pytest.raises(ValueError):
        PowerForm(1.0, 0)


# --- decay envelopes ---------------------------------------------------------

def test_example_one_envelope():
    mu = ScalarSignal.parse("-2/(1+t)", start=1.0)
    cert = Certificate(el.parse("x1^2"), 1, mu, SQUARE, SQUARE)
    verdict = classify(mu, 200.0, [1.0, 2.0, 5.0, 10.0])
    env = envelope_T1(cert, verdict, 2.0, 1.5)
    assert env.kind == "asymptotic"
    ts = np.linspace(2.0, 60.0, 50)
    assert np.allclose(env(ts), 1.5 * 3.0 / (1 + ts), rtol=1e-9)


def test_zero_rate_phi_is_one():
    mu = ScalarSignal.parse("0")
    cert = Certificate(el.parse("x1^2"), 1, mu, SQUARE, SQUARE)
    fake = classify(ScalarSignal.parse("-2/(1+t)"))  # any asymptotic verdict unlocks the quadrature grade
    env = envelope_T1(cert, fake, 0.0, 2.0, grade="asymptotic")
    assert np.allclose(env(np.linspace(0, 10, 11)), 2.0, rtol=1e-12)


def test_example_four_closed_form(verdict4):
    env = envelope_T1(cert4(), verdict4, 0.0, 1.0)
    assert env.kind == "uniform"
    assert env.params["theta"] == pytest.approx(math.exp(math.log(1 + 1.5 * math.pi) + 1), rel=1e-15)
    assert env.params["theta"] == pytest.approx(15.527883162469395, rel=1e-14)
    assert env.params["rate"] == pytest.approx(2 / (3 * math.pi), rel=1e-15)


def test_closed_form_matches_generic_inverse_path(verdict4):
    ts = np.linspace(0.0, 60.0, 121)
    closed = envelope_T1(cert4(), verdict4, 0.0, 1.3, grade="uniform")(ts)
    generic = envelope_T1(cert4(), verdict4, 0.0, 1.3, grade="uniform_asymptotic")(ts)
    assert np.max(np.abs(closed - generic) / closed) <= 1e-10


def test_grade_mismatches_are_rejected(verdict4):
    expr_bounds = Certificate(el.parse("0.5*x1^2"), 1, MU4, MonotoneExpr.parse("0.5*s^2"),
                              MonotoneExpr.parse("0.5*s^2"))
    with pytest.raises(CertificateError):
        envelope_T1(expr_bounds, verdict4, 0.0, 1.0, grade="uniform")
    asym = classify(ScalarSignal.parse("-2/(1+t)"))
    with pytest.raises(CertificateError):
        envelope_T1(cert4(), asym, 0.0, 1.0, grade="exponential")


def test_envelope_is_not_defined_before_t0(verdict4):
    env = envelope_T1(cert4(), verdict4, 5.0, 1.0)
    with pytest.raises(ValueError):
        env(4.0)


# --- drift ------------------------------------------------------------------

def drift_cert(pi_src):
    return Certificate(el.parse("x1^2"), 1, ScalarSignal.parse("-2*t/(1+t^2)"), SQUARE, SQUARE, Theorem.T2,
                       pi=ScalarSignal.parse(pi_src))


@pytest.mark.parametrize("pi_src", ["2/(1+t^2)", "1/(1+t^2)"])
def test_drift_pairs_are_certified(pi_src):
    cert = drift_cert(pi_src)
    verdict = classify(cert.mu)
    res = check_T2(cert, kappa(DriftPair(cert.mu, cert.pi), 0.0, 200.0), verdict)
    assert res.certified


def test_zero_drift_reduces_to_theorem_one():
    cert = drift_cert("0")
    env = drift_envelope(cert, 0.0, 2.0)
    ts = np.linspace(0, 30, 31)
    # phi(t, 0) = 1/(1+t^2), so the envelope is 2/sqrt(1+t^2)
    assert np.allclose(env(ts), 2.0 / np.sqrt(1 + ts * ts), rtol=1e-9)


def test_drift_envelope_closed_form():
    cert = drift_cert("2/(1+t^2)")
    env = drift_envelope(cert, 0.0, 2.0)
    ts = np.linspace(0, 50, 101)
    assert np.allclose(env(ts), np.sqrt((4 + 2 * ts) / (1 + ts * ts)), rtol=1e-8)


def test_unstable_rate_fails_drift_check():
    cert = Certificate(el.parse("x1^2"), 1, ScalarSignal.parse("0.1"), SQUARE, SQUARE, Theorem.T2,
                       pi=ScalarSignal.parse("1"))
    res = check_T2(cert, kappa(DriftPair(cert.mu, cert.pi), 0.0, 100.0))
    assert not res.certified


# --- bounded-input envelopes ------------------------------------------------

def test_iss_gain_term(verdict4):
    env = iss_envelope_T3(cert4(Theorem.T3_ISS, rho=el.parse("s")), verdict4, 0.0, 1.0, 0.1)
    assert env.gain_term(10.0) == pytest.approx(math.sqrt(4 * math.exp(BETA4) * 0.1), rel=1e-14)
    assert env.gain_term(10.0) == pytest.approx(9.82069560687634, rel=1e-13)


def test_iss_transient_carries_the_factor_two(verdict4):
    env = iss_envelope_T3(cert4(Theorem.T3_ISS, rho=el.parse("s")), verdict4, 0.0, 1.0, 0.0)
    theta = math.exp(math.log(1 + 1.5 * math.pi) + 1)
    ts = np.linspace(0, 40, 9)
    assert np.allclose(env(ts), math.sqrt(2) * theta * np.exp(-ALPHA4 / 2 * ts), rtol=1e-13)


def test_iss_envelope_vanishes_for_zero_data(verdict4):
    env = iss_envelope_T3(cert4(Theorem.T3_ISS, rho=el.parse("s")), verdict4, 0.0, 0.0, 0.0)
    assert np.all(env(np.linspace(0, 10, 5)) == 0.0)


def test_iss_envelope_is_monotone_in_data(verdict4):
    cert = cert4(Theorem.T3_ISS, rho=el.parse("s"))
    ts = np.linspace(0, 40, 41)
    base = iss_envelope_T3(cert, verdict4, 0.0, 1.0, 0.1)(ts)
    assert np.all(iss_envelope_T3(cert, verdict4, 0.0, 2.0, 0.1)(ts) >= base)
    assert np.all(iss_envelope_T3(cert, verdict4, 0.0, 1.0, 0.2)(ts) >= base)


def test_iss_needs_uniform_rate():
    cert = Certificate(el.parse("x1^2"), 1, ScalarSignal.parse("-2/(1+t)"), SQUARE, SQUARE, Theorem.T3_ISS,
                       rho=el.parse("s"))
    with pytest.raises(CertificateError):
        iss_envelope_T3(cert, classify(cert.mu), 0.0, 1.0, 0.1)


def test_input_theorems_need_their_gains():
    with pytest.raises(CertificateError):
        cert4(Theorem.T3_ISS)
    with pytest.raises(CertificateError):
        cert4(Theorem.T4_IISS, rho1=el.parse("s"))
    with pytest.raises(CertificateError):
        Certificate(el.parse("x1^2"), 1, MU4, PowerForm(ScalarSignal.parse("1+t"), 2), SQUARE, Theorem.C1_IISS,
                    rho=el.parse("s"))


# --- integral ISS ------------------------------------------------------------

def test_pi_functions_vanish_at_zero():
    for th in (Theorem.T4_IISS, Theorem.C1_IISS):
        for variant in ("stated", "sound"):
            p1, p2 = pi_functions(th, 1.0, variant)
            assert p1(0.0) == 0.0 and p2(0.0) == 0.0


def test_pi_function_spot_values():
    p1, p2 = pi_functions(Theorem.T4_IISS, 1.0)
    assert p1(1.0) == 1.5
    assert p2(1.0) == pytest.approx(0.5 * (math.e - 1) ** 2 + math.e, rel=1e-15)
    assert p2(1.0) == pytest.approx(4.194528049465324, rel=1e-14)
    c1, c2 = pi_functions(Theorem.C1_IISS, 2.0)
    assert c1(0.7) == 0.7
    assert c2(0.7) == pytest.approx(0.7 * math.exp(1.4), rel=1e-15)


def test_sound_variant_dominates_stated_for_small_inputs():
    _, stated = pi_functions(Theorem.C1_IISS, BETA4, "stated")
    _, sound = pi_functions(Theorem.C1_IISS, BETA4, "sound")
    s = np.linspace(1e-4, 0.5, 50)
    assert np.all(sound(s) > stated(s))


def test_sigma_is_class_kl(verdict4):
    est = iiss_estimate_T4(cert4(Theorem.T4_IISS, rho1=el.parse("s"), rho2=el.parse("0.5*s")), verdict4)
    checks = est.kl_check(np.linspace(0, 10, 41), np.linspace(0, 50, 51))
    assert all(checks.values()), checks


def test_sigma_at_time_zero(verdict4):
    est = iiss_estimate_T4(cert4(Theorem.T4_IISS, rho1=el.parse("s"), rho2=el.parse("0.5*s")), verdict4)
    for s in (0.1, 1.0, 3.0):
        inner = 0.5 * s * s * math.exp(BETA4)
        expected = math.sqrt(2 * 2 * (inner + 0.5 * inner * inner))
        assert float(est.sigma(s, 0.0)) == pytest.approx(expected, rel=1e-13)
        assert float(est.sigma(s, 0.0)) >= math.sqrt(2 * 2 * (0.5 * s * s + 0.125 * s ** 4))


def test_zero_input_reduces_to_sigma(verdict4):
    est = iiss_estimate_T4(cert4(Theorem.C1_IISS, rho=el.parse("s")), verdict4)
    env = iiss_envelope(est, 0.0, 1.0, 0.0)
    ts = np.linspace(0, 30, 31)
    assert np.array_equal(env(ts), est.sigma(1.0, ts))
    assert float(est.gamma1(0.0)) == 0.0


def test_iiss_envelope_is_monotone_in_input_integral(verdict4):
    est = iiss_estimate_T4(cert4(Theorem.C1_IISS, rho=el.parse("s")), verdict4)
    ts = np.linspace(0, 30, 31)
    assert np.all(iiss_envelope(est, 0.0, 1.0, 0.2)(ts) >= iiss_envelope(est, 0.0, 1.0, 0.1)(ts))


def test_stated_single_gain_bound_undershoots_a_short_pulse(verdict4):
    """A small input pulse placed where mu's integral climbs highest defeats the stated gain.

    Work at the level of the comparison equation V' = mu V + rho(|u|) (equality is
    admissible under the single-gain hypothesis) with V(0) = 0, V = x^2 / 2 and rho(s) = s.
    """
    slack, s_star, t_star = grid_pair_slack(MU4, 0.0, 0.0, 30.0)
    growth = math.exp(-slack)
    assert growth > 4.0  # the integral of mu climbs by ~1.46 between s_star and t_star
    width, total = 0.01, 1e-3
    pulse = ScalarSignal.from_function(
        lambda t: np.where((t >= s_star) & (t < s_star + width), total / width, 0.0),
        start=0.0, kinks=(s_star, s_star + width))
    v_at, _ = kappa_at(MU4, pulse, s_star, [t_star])
    x_at = math.sqrt(2 * v_at[0])

    stated = iiss_estimate_T4(cert4(Theorem.C1_IISS, rho=el.parse("s")), verdict4, "stated")
    sound = iiss_estimate_T4(cert4(Theorem.C1_IISS, rho=el.parse("s")), verdict4, "sound")
    assert x_at > float(stated.gamma1(total))  # stated formula is violated
    assert x_at <= float(sound.gamma1(total))  # the e^beta form holds


def test_iiss_needs_uniform_rate_and_matching_theorem(verdict4):
    with pytest.raises(CertificateError):
        iiss_estimate_T4(cert4(), verdict4)
    with pytest.raises(ValueError):
        pi_functions(Theorem.C1_IISS, 1.0, "other")


def test_theorem_names_parse():
    assert Theorem.parse("t4") is Theorem.T4_IISS
    assert Theorem.parse("C1_iISS") is Theorem.C1_IISS
    with pytest.raises(ValueError):
        Theorem.parse("T9")
