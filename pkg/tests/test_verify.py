import math

import numpy as np
import pytest

from indeflyap import exprlang as el
from indeflyap.certificates import Certificate, PowerForm, Theorem
from indeflyap.odesim import simulate
from indeflyap.quadsig import ScalarSignal, integrate
from indeflyap.verify import (analyze, bounds_check, catalog, catalog_entry, envelope_containment, residual_check,
                              vdot, vdot_batch)

CATALOG = {a.name: a for a in catalog()}


def test_vdot_of_linear_decay():
    assert vdot(el.parse("x1^2"), el.VectorField.parse(["-x1"]), 0.0, [3.0]) == pytest.approx(-18.0, rel=1e-8)


def test_vdot_example_one():
    a = CATALOG["example1"]
    got = vdot(a.cert.V, a.field, 2.0, [1.0])
    assert got == pytest.approx(-2 / (2 + math.sin(1.0)), rel=1e-8)
    assert got == pytest.approx(-0.7038607857314488, rel=1e-8)
    assert got <= a.cert.mu(2.0) * 1.0


def test_vdot_example_four():
    a = CATALOG["example4_free"]
    assert vdot(a.cert.V, a.field, 0.0, [1.0]) == pytest.approx(0.5, rel=1e-8)
    assert a.cert.mu(0.0) * 0.5 == 1.0


def test_vdot_matches_analytic_derivative_for_example_two():
    a = CATALOG["example2_k2_r2"]
    rng = np.random.default_rng(9)
    t = rng.uniform(0, 20, 200)
    x = rng.uniform(0.2, 3, (200, 2)) * rng.choice([-1, 1], (200, 2))
    got = vdot_batch(a.cert.V, a.field, t, x)
    x1, x2 = x[:, 0], x[:, 1]
    f1 = -x1 / (1 + t) + t * t * x2 ** 3 - t * x1 ** 3
    f2 = -x2 / (1 + t) - t * t * x1 ** 3 - t * x2 ** 3
    exact = (x1 ** 4 + x2 ** 4) + (1 + t) * 4 * (x1 ** 3 * f1 + x2 ** 3 * f2)
    assert np.max(np.abs(got - exact) / np.abs(exact)) <= 1e-6


@pytest.mark.parametrize("name", list(CATALOG))
def test_catalog_residuals_pass(name):
    a = CATALOG[name]
    rep = residual_check(a.cert, a.field, a.box, a.samples, a.seed)
    assert rep.passed, rep.to_dict()
    assert all(r.passed for r in bounds_check(a.cert, a.box, 2000, a.seed))


def test_example_two_residual_is_nonpositive():
    a = CATALOG["example2_k1_r1"]
    assert residual_check(a.cert, a.field, {"t": (0, 20), "x1": (-3, 3), "x2": (-3, 3)}).worst_residual <= 0


def test_lowering_the_rate_adds_slack():
    a = CATALOG["example2_k1_r1"]
    looser = Certificate(a.cert.V, 2, ScalarSignal.parse("-1/(1+t)+1"), a.cert.alpha1, a.cert.alpha2)
    base = residual_check(a.cert, a.field, a.box, 5000)
    more = residual_check(looser, a.field, a.box, 5000)
    assert more.worst_residual < base.worst_residual and more.worst_residual < 0


def test_implication_with_unreachable_antecedent_is_inconclusive():
    a = CATALOG["example4_iss"]
    huge = Certificate(a.cert.V, 1, a.cert.mu, a.cert.alpha1, a.cert.alpha2, Theorem.T3_ISS,
                       rho=el.parse("1000+s"), certified_pair=a.cert.certified_pair)
    rep = residual_check(huge, a.field, a.box, 500)
    assert rep.inconclusive and not rep.passed and rep.skipped == 500


def test_residual_sampling_is_deterministic():
    a = CATALOG["example3"]
    r1 = residual_check(a.cert, a.field, a.box, 3000, seed=4)
    r2 = residual_check(a.cert, a.field, a.box, 3000, seed=4)
    assert r1.to_dict() == r2.to_dict()


def test_containment_examples():
    a = CATALOG["example1"]
    tr = simulate(a.field, None, 2.0, [1.0], 50.0)
    ok = envelope_containment(tr, lambda t: 3.0 / (1 + np.asarray(t)))
    assert ok.passed and ok.worst_ratio <= 1.0
    bad = envelope_containment(tr, lambda t: np.zeros_like(np.asarray(t)))
    assert not bad.passed and "zero" in bad.reason


def test_example_two_k1_containment():
    a = CATALOG["example2_k1_r1"]
    tr = simulate(a.field, None, 0.0, [1.0, 1.0], 100.0)
    r0 = math.sqrt(2)
    assert envelope_containment(tr, lambda t: r0 / np.sqrt(1 + np.asarray(t))).passed


def test_zero_state_is_contained_in_zero_envelope():
    tr = simulate(el.VectorField.parse(["-x1"]), None, 0.0, [0.0], 5.0)
    assert envelope_containment(tr, lambda t: np.zeros_like(np.asarray(t))).passed


def test_catalog_contents():
    assert len(CATALOG) >= 5
    assert CATALOG["example4_free"].cert.certified_pair == (4 / (3 * math.pi), 2 * math.log(1 + 1.5 * math.pi) + 2)
    ref = CATALOG["remark1"].reference_kappa
    assert ref(3.0, 1.0) == pytest.approx(2 / 10)
    k3 = catalog_entry("example2", k=3, r=1)
    assert k3.name == "example2_k3_r1"
    with pytest.raises(KeyError):
        catalog_entry("example9")


def test_indefinite_rate_window_integrals():
    mu = CATALOG["example4_free"].cert.mu
    window = 1.5 * math.pi
    bump = ScalarSignal.parse("2/(1+t)")
    for t in np.arange(3001) * 0.01:
        assert integrate(mu, t, t + window) <= -2 + 1e-6
        assert integrate(bump, t, t + window) <= 2 * math.log(1 + window) + 1e-12


@pytest.mark.parametrize("name", list(CATALOG))
def test_catalog_analysis_passes(name):
    res = analyze(CATALOG[name])
    assert res.status == 0, res.reasons
    cont = res.report["containment"]
    assert cont["passed"]


def test_tampered_rate_is_rejected():
    a = catalog_entry("example1")
    q = PowerForm(1.0, 2)
    a.cert = Certificate(a.cert.V, 1, ScalarSignal.parse("2/(1+t)", start=1.0), q, q)
    assert analyze(a).status in (1, 2)
